"""Exponential time stepping for the coupled, averaged and block-frozen systems.

The default scheme multiplies the exact linear semigroup into an Euler update
of drift and noise increments; the splitting variant propagates first and
evaluates the increments at the propagated state.  Scalar couplings and scalar
noise act on the spatial mean mode only, because the constant field 1 has the
single Fourier coefficient c_0 = 1.

Noise is organized as labeled scalar channels: the increments of channel c of
path p of an experiment are a pure function of (seed, experiment, p, c), so
any two runs naming the same channel see the same Brownian path regardless of
call order or thread count.  Channel 1 drives the slow equation and channel 2
the fast one; an averaged run reuses channel 1 of the path it shadows.

Each slow step advances the fast state through an integer number of substeps
whose length never exceeds a fixed fraction of the time-scale separation,
with the slow state held at its value from the start of the interval.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import CouplingSpec, ModelParams, n1_coeffs, validate
from .spectral import TWO_PI, Field, LinearSymbol, SpectralGrid

EXPONENTIAL_EULER = "exponential_euler"
LIE_SPLITTING = "lie_splitting"

#: the fast substep stays below this fraction of eps
FAST_STEP_SAFETY = 0.1


class PathAborted(RuntimeError):
    """A trajectory left the finite range (blow-up or numerical overflow)."""

    def __init__(self, step: int, time: float):
        super().__init__("path aborted at step %d (t=%.6g): non-finite state" % (step, time))
        self.step = step
        self.time = time


def noise_key(seed: int, experiment: str, path: int, channel: int) -> int:
    """128-bit generator key from the labeled identity of one noise channel.

    Fields are length-framed before hashing so distinct label tuples can
    never collide by concatenation.
    """
    h = hashlib.sha256()
    for part in (str(int(seed)), str(experiment), str(int(path)), str(int(channel))):
        raw = part.encode("utf-8")
        h.update(len(raw).to_bytes(4, "little"))
        h.update(raw)
    return int.from_bytes(h.digest()[:16], "little")


def make_noise(seed: int, experiment: str, path: int, channel: int, n_steps: int, dt: float) -> np.ndarray:
    """Brownian increments (variance dt each) of one labeled scalar channel.

    The underlying generator is counter-based, so the stream is a pure
    function of the labels: different paths, channels and experiments are
    independent, and re-draws with the same labels agree exactly.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0, got %r" % (n_steps,))
    if dt <= 0.0:
        raise ValueError("dt must be > 0, got %r" % (dt,))
    gen = np.random.Generator(np.random.Philox(key=noise_key(seed, experiment, path, channel)))
    return gen.standard_normal(int(n_steps)) * math.sqrt(dt)


def normalize_scheme_kind(kind: str) -> str:
    key = str(kind).strip().lower().replace("-", "").replace("_", "").replace(" ", "")
    if key == "exponentialeuler":
        return EXPONENTIAL_EULER
    if key == "liesplitting":
        return LIE_SPLITTING
    raise ValueError("unknown scheme kind %r (expected ExponentialEuler or LieSplitting)" % (kind,))


@dataclass(frozen=True)
class StepScheme:
    """Time discretization: scheme kind, slow step, optional fast-step cap.

    The actual fast substep is derived per eps as dt_slow divided by the
    smallest integer that brings it under min(dt_slow, 0.1 eps, dt_fast), so
    slow intervals always contain a whole number of substeps.
    """

    kind: str = EXPONENTIAL_EULER
    dt_slow: float = 1.0e-3
    dt_fast: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_scheme_kind(self.kind))
        if self.dt_slow <= 0.0:
            raise ValueError("dt_slow must be > 0, got %r" % (self.dt_slow,))
        if self.dt_fast is not None and self.dt_fast <= 0.0:
            raise ValueError("dt_fast must be > 0 when given, got %r" % (self.dt_fast,))

    def substeps(self, eps: float) -> "tuple[int, float]":
        """Fast substeps per slow step and their length, for this eps."""
        cap = min(self.dt_slow, FAST_STEP_SAFETY * eps)
        if self.dt_fast is not None:
            cap = min(cap, self.dt_fast)
        # the small slack keeps float noise in the ratio from forcing an
        # extra substep when the cap divides dt_slow exactly
        m = max(1, int(math.ceil(self.dt_slow / cap - 1e-9)))
        return m, self.dt_slow / m

    def n_steps(self, T: float) -> int:
        n = int(round(T / self.dt_slow))
        if n < 1 or abs(n * self.dt_slow - T) > 1e-9 * max(1.0, T):
            raise ValueError("horizon %r is not a whole number of slow steps of %r" % (T, self.dt_slow))
        return n


def snap_checkpoints(times, dt: float, n_steps: int) -> "tuple[np.ndarray, np.ndarray]":
    """Snap requested times to slow-step indices; returns (indices, actual times).

    Times must be nondecreasing, lie within the horizon, and land on distinct
    steps after rounding.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("checkpoints must be a nonempty 1-D sequence of times")
    idx = np.rint(t / dt).astype(np.int64)
    if idx[0] < 0 or idx[-1] > n_steps:
        raise ValueError("checkpoints leave the simulated horizon")
    if np.any(np.diff(idx) < 1):
        raise ValueError("checkpoints collide or go backwards after snapping to the step grid")
    return idx, idx * dt


def _l2(coeffs: np.ndarray):
    """L2 norm over the last axis of a coefficient array."""
    return np.sqrt(TWO_PI * np.sum(np.abs(coeffs) ** 2, axis=-1))


def _l2sq(coeffs: np.ndarray):
    return TWO_PI * np.sum(np.abs(coeffs) ** 2, axis=-1)


class StepperPlan:
    """Precomputed multipliers and coupling shortcuts for one configuration.

    Step methods act on raw coefficient arrays of shape (..., n_modes); a
    leading axis batches independent replicas, which requires norm-only
    couplings (the batched states are reduced to norms before the scalar
    coupling calls).  General couplings work on unbatched 1-D states.
    """

    def __init__(
        self,
        grid: SpectralGrid,
        params: ModelParams,
        couplings: CouplingSpec,
        scheme: StepScheme,
        check: bool = True,
    ):
        if check:
            validate(params, couplings)
        self.grid = grid
        self.params = params
        self.couplings = couplings
        self.scheme = scheme
        self.exponential = scheme.kind == EXPONENTIAL_EULER
        self.dt = scheme.dt_slow
        self.n_sub, self.dt_fast = scheme.substeps(params.eps)
        if params.nu > 0.0:
            self.slow_symbol = LinearSymbol.slow_viscous(params.alpha, params.nu)
        else:
            self.slow_symbol = LinearSymbol.slow_free(params.alpha)
        self.fast_symbol = LinearSymbol.fast_dissipative(params.rho, params.lam, params.eps)
        self.e_slow = np.exp(self.dt * self.slow_symbol.multipliers(grid))
        self.e_fast = np.exp(self.dt_fast * self.fast_symbol.multipliers(grid))
        self._drift_factor_slow = -self.dt * (1.0 + 1j * params.gamma)
        self._dt_fast_over_eps = self.dt_fast / params.eps
        self._drift_factor_fast = -self._dt_fast_over_eps * (1.0 + 1j * params.gamma)
        self._inv_sqrt_eps = 1.0 / math.sqrt(params.eps)

    def _require_1d(self, state: np.ndarray):
        if state.ndim != 1:
            raise ValueError("batched stepping requires norm-only couplings")

    def _slow_scalars(self, u_state: np.ndarray, cv: np.ndarray):
        c = self.couplings
        if c.norm_only:
            return c.F_from_norms(_l2(u_state), _l2(cv)), c.sigma1_from_norm(_l2(u_state))
        self._require_1d(u_state)
        u = Field(self.grid, u_state)
        return c.F(u, Field(self.grid, cv)), c.sigma1(u)

    def _slow_like(self, cu: np.ndarray, scalars_fn, dw1) -> np.ndarray:
        """Shared slow-type update; the coupled and averaged steps both land
        here so their degenerate agreement is structural, not approximate."""
        state = cu if self.exponential else self.e_slow * cu
        f, s1 = scalars_fn(state)
        incr = state + self._drift_factor_slow * n1_coeffs(state, self.params.beta)
        incr[..., 0] += self.dt * f + s1 * dw1
        return self.e_slow * incr if self.exponential else incr

    def slow_step(self, cu: np.ndarray, cv: np.ndarray, dw1) -> np.ndarray:
        """One slow step, holding the fast state at its interval-start value."""
        return self._slow_like(cu, lambda state: self._slow_scalars(state, cv), dw1)

    def averaged_step(self, cu: np.ndarray, dw1, fbar_of_coeffs) -> np.ndarray:
        """One step of the averaged equation; fbar_of_coeffs maps coeffs to the drift value."""

        def scalars(state):
            c = self.couplings
            if c.norm_only:
                s1 = c.sigma1_from_norm(_l2(state))
            else:
                self._require_1d(state)
                s1 = c.sigma1(Field(self.grid, state))
            return fbar_of_coeffs(state), s1

        return self._slow_like(cu, scalars, dw1)

    def fast_block(self, cu_frozen: np.ndarray, cv: np.ndarray, dw2: np.ndarray) -> np.ndarray:
        """Advance the fast state across one slow interval with u frozen.

        dw2 holds the substep increments in its last axis; leading axes of cv
        and dw2 batch replicas (norm-only couplings required for batches).
        """
        c = self.couplings
        if c.norm_only:
            nu_ = _l2(cu_frozen)
            u_field = None
        else:
            self._require_1d(cv)
            u_field = Field(self.grid, np.asarray(cu_frozen, dtype=np.complex128))
        beta = self.params.beta
        for j in range(dw2.shape[-1]):
            dw = dw2[..., j]
            state = cv if self.exponential else self.e_fast * cv
            if u_field is None:
                nv_ = _l2(state)
                g = c.G_from_norms(nu_, nv_)
                s2 = c.sigma2_from_norms(nu_, nv_)
            else:
                v_field = Field(self.grid, state)
                g = c.G(u_field, v_field)
                s2 = c.sigma2(u_field, v_field)
            incr = state + self._drift_factor_fast * n1_coeffs(state, beta)
            incr[..., 0] += self._dt_fast_over_eps * g + self._inv_sqrt_eps * s2 * dw
            cv = self.e_fast * incr if self.exponential else incr
        return cv

    def khas_slow_step(self, hu: np.ndarray, hv: np.ndarray, cu_block: np.ndarray, cu_now: np.ndarray, dw1) -> np.ndarray:
        """Auxiliary slow step with the drift frozen at the block-start reference.

        The power drift and the coupling read the reference state from the
        start of the current block, the noise amplitude reads the reference
        state at the current time, and only the linear flow and the additive
        increments act on the auxiliary state itself.  Defined for the
        exponential scheme.
        """
        if not self.exponential:
            raise ValueError("the block-frozen auxiliary is defined for the exponential scheme")
        c = self.couplings
        if c.norm_only:
            f = c.F_from_norms(_l2(cu_block), _l2(hv))
            s1 = c.sigma1_from_norm(_l2(cu_now))
        else:
            f = c.F(Field(self.grid, cu_block), Field(self.grid, hv))
            s1 = c.sigma1(Field(self.grid, cu_now))
        incr = hu + self._drift_factor_slow * n1_coeffs(cu_block, self.params.beta)
        incr[..., 0] += self.dt * f + s1 * dw1
        return self.e_slow * incr


# ---------------------------------------------------------------------------
# single-step interfaces on Field objects


def step_slow(u: Field, v: Field, params: ModelParams, couplings: CouplingSpec, scheme: StepScheme, dw1: float) -> Field:
    """One slow step from (u, v) under the given scheme."""
    plan = StepperPlan(u.grid, params, couplings, scheme)
    return Field(u.grid, plan.slow_step(u.coeffs, v.coeffs, float(dw1)))


def step_fast(u: Field, v: Field, params: ModelParams, couplings: CouplingSpec, scheme: StepScheme, dw2: float) -> Field:
    """One fast substep with u frozen; its length is scheme.substeps(params.eps)[1]."""
    plan = StepperPlan(u.grid, params, couplings, scheme)
    return Field(v.grid, plan.fast_block(u.coeffs, v.coeffs, np.asarray([float(dw2)])))


def step_averaged(
    u: Field,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    dw1: float,
    fbar: Callable[[Field], float],
) -> Field:
    """One step of the averaged equation with drift provider fbar."""
    plan = StepperPlan(u.grid, params, couplings, scheme)
    grid = u.grid
    return Field(grid, plan.averaged_step(u.coeffs, float(dw1), lambda c: fbar(Field(grid, c))))


# ---------------------------------------------------------------------------
# whole-path drivers


@dataclass
class CoupledPathResult:
    times: np.ndarray
    u: np.ndarray  # (n_checkpoints, n_modes)
    v: np.ndarray


@dataclass
class AveragedPathResult:
    times: np.ndarray
    u: np.ndarray


@dataclass
class KhasminskiiPathResult:
    times: np.ndarray
    u_ref: np.ndarray
    v_ref: np.ndarray
    u_aux: np.ndarray
    v_aux: np.ndarray
    sup_u_err_sq: float  # max over steps of ||u_aux - u_ref||^2
    sup_v_err_sq: float
    delta: float  # effective block length after snapping


def _check_finite(step: int, dt: float, *states: np.ndarray):
    for s in states:
        if not np.all(np.isfinite(s.view(np.float64))):
            raise PathAborted(step, step * dt)


def simulate_coupled_path(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    checkpoints,
    seed: int,
    experiment: str,
    path: int,
) -> CoupledPathResult:
    """One path of the coupled system, recorded at the snapped checkpoints."""
    plan = StepperPlan(grid, params, couplings, scheme)
    n_steps = scheme.n_steps(params.T)
    idx, actual = snap_checkpoints(checkpoints, scheme.dt_slow, n_steps)
    w1 = make_noise(seed, experiment, path, 1, n_steps, scheme.dt_slow)
    w2 = make_noise(seed, experiment, path, 2, n_steps * plan.n_sub, plan.dt_fast)
    cu = u0.coeffs.copy()
    cv = v0.coeffs.copy()
    u_out = np.empty((idx.size, grid.n_modes), dtype=np.complex128)
    v_out = np.empty_like(u_out)
    ptr = 0
    if idx[ptr] == 0:
        u_out[ptr] = cu
        v_out[ptr] = cv
        ptr += 1
    m = plan.n_sub
    for s in range(n_steps):
        u_next = plan.slow_step(cu, cv, w1[s])
        cv = plan.fast_block(cu, cv, w2[s * m : (s + 1) * m])
        cu = u_next
        _check_finite(s + 1, scheme.dt_slow, cu, cv)
        if ptr < idx.size and idx[ptr] == s + 1:
            u_out[ptr] = cu
            v_out[ptr] = cv
            ptr += 1
    return CoupledPathResult(actual, u_out, v_out)


def simulate_averaged_path(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    fbar: Callable[[Field], float],
    checkpoints,
    seed: int,
    experiment: str,
    path: int,
) -> AveragedPathResult:
    """One path of the averaged equation, driven by channel 1 of (seed, experiment, path)."""
    plan = StepperPlan(grid, params, couplings, scheme)
    n_steps = scheme.n_steps(params.T)
    idx, actual = snap_checkpoints(checkpoints, scheme.dt_slow, n_steps)
    w1 = make_noise(seed, experiment, path, 1, n_steps, scheme.dt_slow)
    cu = u0.coeffs.copy()
    u_out = np.empty((idx.size, grid.n_modes), dtype=np.complex128)
    ptr = 0
    if idx[ptr] == 0:
        u_out[ptr] = cu
        ptr += 1

    def fbar_c(c):
        return fbar(Field(grid, c))

    for s in range(n_steps):
        cu = plan.averaged_step(cu, w1[s], fbar_c)
        _check_finite(s + 1, scheme.dt_slow, cu)
        if ptr < idx.size and idx[ptr] == s + 1:
            u_out[ptr] = cu
            ptr += 1
    return AveragedPathResult(actual, u_out)


def khasminskii_path(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    delta: float,
    checkpoints,
    seed: int,
    experiment: str,
    path: int,
) -> KhasminskiiPathResult:
    """Reference pair plus the block-frozen auxiliary pair on shared noise.

    The auxiliary fast state restarts from the reference fast state at every
    block boundary; the auxiliary slow state runs freely but evaluates its
    drift at the reference state frozen at the block start.  delta snaps to a
    whole number of slow steps.
    """
    if delta <= 0.0:
        raise ValueError("delta must be > 0, got %r" % (delta,))
    plan = StepperPlan(grid, params, couplings, scheme)
    n_steps = scheme.n_steps(params.T)
    block_steps = max(1, int(round(delta / scheme.dt_slow)))
    delta_eff = block_steps * scheme.dt_slow
    idx, actual = snap_checkpoints(checkpoints, scheme.dt_slow, n_steps)
    w1 = make_noise(seed, experiment, path, 1, n_steps, scheme.dt_slow)
    w2 = make_noise(seed, experiment, path, 2, n_steps * plan.n_sub, plan.dt_fast)
    cu = u0.coeffs.copy()
    cv = v0.coeffs.copy()
    hu = u0.coeffs.copy()
    hv = v0.coeffs.copy()
    cu_block = cu.copy()
    shape = (idx.size, grid.n_modes)
    u_ref = np.empty(shape, dtype=np.complex128)
    v_ref = np.empty(shape, dtype=np.complex128)
    u_aux = np.empty(shape, dtype=np.complex128)
    v_aux = np.empty(shape, dtype=np.complex128)
    ptr = 0
    if idx[ptr] == 0:
        u_ref[ptr], v_ref[ptr], u_aux[ptr], v_aux[ptr] = cu, cv, hu, hv
        ptr += 1
    sup_u = 0.0
    sup_v = 0.0
    m = plan.n_sub
    for s in range(n_steps):
        if s % block_steps == 0:
            hv = cv.copy()  # re-sync the auxiliary fast state at the block start
            cu_block = cu.copy()
        dw1 = w1[s]
        block = w2[s * m : (s + 1) * m]
        u_next = plan.slow_step(cu, cv, dw1)
        hu_next = plan.khas_slow_step(hu, hv, cu_block, cu, dw1)
        cv = plan.fast_block(cu, cv, block)
        hv = plan.fast_block(cu_block, hv, block)
        cu, hu = u_next, hu_next
        _check_finite(s + 1, scheme.dt_slow, cu, cv, hu, hv)
        sup_u = max(sup_u, float(_l2sq(hu - cu)))
        sup_v = max(sup_v, float(_l2sq(hv - cv)))
        if ptr < idx.size and idx[ptr] == s + 1:
            u_ref[ptr], v_ref[ptr], u_aux[ptr], v_aux[ptr] = cu, cv, hu, hv
            ptr += 1
    return KhasminskiiPathResult(actual, u_ref, v_ref, u_aux, v_aux, sup_u, sup_v, delta_eff)
