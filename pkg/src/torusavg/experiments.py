"""Ensemble experiments, error studies and result serialization.

Ensembles run path-per-worker on a thread pool; every path owns noise
channels keyed by (seed, experiment, path), and results are written into
index-addressed slots, so outputs are identical for any thread count.  Paths
whose state leaves the finite range are counted as aborts; an ensemble whose
abort fraction exceeds the budget raises rather than reporting skewed means.

Sweep functions return SweepResult records carrying the swept values, the per
value errors with standard errors, and a log-log slope with the RMS residual
of the fit (flagged when the residual says a power law is a poor summary).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .integrators import (
    PathAborted,
    StepScheme,
    khasminskii_path,
    simulate_averaged_path,
    simulate_coupled_path,
    snap_checkpoints,
)
from .model import CouplingSpec, ModelParams
from .spectral import TWO_PI, Field, SpectralGrid

#: ensembles abort if more than this fraction of paths blow up
ABORT_BUDGET = 0.01

DEFAULT_N_CHECKPOINTS = 17


class ExperimentError(RuntimeError):
    """An ensemble lost more paths than the abort budget allows."""

    def __init__(self, message: str, aborts: int, n_paths: int):
        super().__init__(message)
        self.aborts = aborts
        self.n_paths = n_paths


def default_checkpoints(T: float, count: int = DEFAULT_N_CHECKPOINTS) -> np.ndarray:
    """Uniform checkpoint times on [0, T] including both ends."""
    if count < 2:
        raise ValueError("need at least 2 checkpoints, got %r" % (count,))
    return np.linspace(0.0, T, count)


def smooth_initial_slow(grid: SpectralGrid) -> Field:
    """Low-mode deterministic start for the slow field."""
    c = np.zeros(grid.n_modes, dtype=np.complex128)
    c[0] = 0.25
    c[1] = 0.35
    c[-1] = 0.2j
    c[2] = 0.15
    return Field(grid, c)


def rough_initial_slow(
    grid: SpectralGrid, seed: int = 2023, amplitude: float = 0.45, decay: float = 1.5
) -> Field:
    """Slow start with a k^{-decay} coefficient tail (default barely one derivative).

    Smooth starts make viscosity gaps superconvergent, so studies that probe
    the first-order viscosity error need this kind of spectral tail.  Phases
    are deterministic in the seed.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    n = grid.n_modes
    k = np.abs(grid.wavenumbers).astype(np.float64)
    mag = amplitude / (1.0 + k) ** decay
    phase = np.exp(1j * TWO_PI * rng.random(n))
    c = mag * phase
    c[n // 2] = 0.0
    return Field(grid, c)


@dataclass
class EnsembleStats:
    """Per-checkpoint ensemble statistics plus the per-path slow states.

    u_coeffs has shape (n_paths, n_checkpoints, n_modes) with zero rows for
    aborted paths (mask in path_ok); the fast-field columns are NaN for
    ensembles without a fast field.
    """

    kind: str  # "coupled" or "averaged"
    experiment: str
    seed: int
    times: np.ndarray
    n_paths: int
    aborts: int
    path_ok: np.ndarray
    u_coeffs: np.ndarray
    mean_u_l2sq: np.ndarray
    se_u_l2sq: np.ndarray
    mean_u_h1sq: np.ndarray
    se_u_h1sq: np.ndarray
    mean_v_l2sq: np.ndarray
    se_v_l2sq: np.ndarray


@dataclass
class StrongErrorResult:
    """Pathwise mean-square distance between two ensembles on shared noise."""

    times: np.ndarray
    mean_sq: np.ndarray
    se: np.ndarray
    sup: float
    sup_se: float
    sup_time: float
    n_paths: int


@dataclass
class SweepResult:
    """One error-vs-parameter sweep with a log-log power-law summary.

    monotone_2se records whether the error is non-decreasing in ascending x
    within two combined standard errors, i.e. it never drops by more than
    2*(se[i] + se[i+1]) between neighbours. For sweeps whose error shrinks
    with the parameter (eps, delta) this is the within-noise monotonicity
    diagnostic; it is informational for sweeps whose law is a slope instead.
    """

    kind: str
    x: np.ndarray
    error: np.ndarray
    se: np.ndarray
    slope: float
    residual: float
    ill_conditioned: bool
    monotone_2se: bool


def _mean_se(rows: np.ndarray) -> "tuple[np.ndarray, np.ndarray]":
    """Column means and standard errors across the row axis."""
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])
    return mean, se


def _enforce_abort_budget(aborts: int, n_paths: int):
    if aborts > ABORT_BUDGET * n_paths or n_paths - aborts < 2:
        raise ExperimentError(
            "%d of %d paths aborted (budget %.0f%%)" % (aborts, n_paths, 100 * ABORT_BUDGET),
            aborts,
            n_paths,
        )


def _run_paths(n_paths: int, threads: int, worker: Callable[[int], object]):
    """Run worker(p) for p in range(n_paths); returns ({p: result}, aborts)."""
    results = {}
    aborts = 0
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as ex:
        futures = {ex.submit(worker, p): p for p in range(n_paths)}
        for fut in as_completed(futures):
            p = futures[fut]
            try:
                results[p] = fut.result()
            except PathAborted:
                aborts += 1
    return results, aborts


def _h1_weights(grid: SpectralGrid) -> np.ndarray:
    return 1.0 + np.abs(grid.deriv_multiplier) ** 2


def _finalize_ensemble(
    grid: SpectralGrid,
    kind: str,
    experiment: str,
    seed: int,
    times: np.ndarray,
    u_coeffs: np.ndarray,
    v_l2sq,
    path_ok: np.ndarray,
    aborts: int,
) -> EnsembleStats:
    ok = path_ok
    u_ok = u_coeffs[ok]
    absq = np.abs(u_ok) ** 2
    l2 = TWO_PI * absq.sum(axis=-1)
    h1 = TWO_PI * (absq * _h1_weights(grid)).sum(axis=-1)
    mean_l2, se_l2 = _mean_se(l2)
    mean_h1, se_h1 = _mean_se(h1)
    if v_l2sq is None:
        nanrow = np.full(times.size, np.nan)
        mean_v, se_v = nanrow, nanrow.copy()
    else:
        mean_v, se_v = _mean_se(v_l2sq[ok])
    return EnsembleStats(
        kind=kind,
        experiment=experiment,
        seed=int(seed),
        times=times,
        n_paths=int(path_ok.size),
        aborts=int(aborts),
        path_ok=path_ok,
        u_coeffs=u_coeffs,
        mean_u_l2sq=mean_l2,
        se_u_l2sq=se_l2,
        mean_u_h1sq=mean_h1,
        se_u_h1sq=se_h1,
        mean_v_l2sq=mean_v,
        se_v_l2sq=se_v,
    )


def run_coupled_ensemble(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    checkpoints,
    n_paths: int,
    seed: int,
    experiment: str,
    threads: int = 1,
) -> EnsembleStats:
    """Monte Carlo ensemble of the coupled system."""
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2, got %r" % (n_paths,))
    n_steps = scheme.n_steps(params.T)
    idx, actual = snap_checkpoints(checkpoints, scheme.dt_slow, n_steps)
    u_coeffs = np.zeros((n_paths, idx.size, grid.n_modes), dtype=np.complex128)
    v_l2sq = np.zeros((n_paths, idx.size))
    ok = np.zeros(n_paths, dtype=bool)

    def worker(p: int):
        return simulate_coupled_path(grid, params, couplings, scheme, u0, v0, actual, seed, experiment, p)

    results, aborts = _run_paths(n_paths, threads, worker)
    for p, res in results.items():
        u_coeffs[p] = res.u
        v_l2sq[p] = TWO_PI * np.sum(np.abs(res.v) ** 2, axis=-1)
        ok[p] = True
    _enforce_abort_budget(aborts, n_paths)
    return _finalize_ensemble(grid, "coupled", experiment, seed, actual, u_coeffs, v_l2sq, ok, aborts)


def run_averaged_ensemble(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    fbar: Callable[[Field], float],
    checkpoints,
    n_paths: int,
    seed: int,
    experiment: str,
    threads: int = 1,
) -> EnsembleStats:
    """Monte Carlo ensemble of the averaged equation on the coupled runs' slow channels."""
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2, got %r" % (n_paths,))
    n_steps = scheme.n_steps(params.T)
    idx, actual = snap_checkpoints(checkpoints, scheme.dt_slow, n_steps)
    u_coeffs = np.zeros((n_paths, idx.size, grid.n_modes), dtype=np.complex128)
    ok = np.zeros(n_paths, dtype=bool)

    def worker(p: int):
        return simulate_averaged_path(grid, params, couplings, scheme, u0, fbar, actual, seed, experiment, p)

    results, aborts = _run_paths(n_paths, threads, worker)
    for p, res in results.items():
        u_coeffs[p] = res.u
        ok[p] = True
    _enforce_abort_budget(aborts, n_paths)
    return _finalize_ensemble(grid, "averaged", experiment, seed, actual, u_coeffs, None, ok, aborts)


def strong_error(a: EnsembleStats, b: EnsembleStats) -> StrongErrorResult:
    """Pathwise E||u_a - u_b||^2 per checkpoint for ensembles on shared noise.

    Both ensembles must carry the same experiment label, seed, path count and
    checkpoint grid; that is what guarantees path p of one rode the same
    channels as path p of the other.
    """
    if a.experiment != b.experiment or a.seed != b.seed:
        raise ValueError("ensembles were not run on shared noise (label or seed differs)")
    if a.n_paths != b.n_paths:
        raise ValueError("ensembles have different path counts")
    if a.times.size != b.times.size or not np.allclose(a.times, b.times):
        raise ValueError("ensembles have different checkpoint grids")
    both = a.path_ok & b.path_ok
    if both.sum() < 2:
        raise ValueError("need at least 2 surviving paths in both ensembles")
    diff = a.u_coeffs[both] - b.u_coeffs[both]
    sq = TWO_PI * np.sum(np.abs(diff) ** 2, axis=-1)  # (paths, n_chk)
    mean, se = _mean_se(sq)
    imax = int(np.argmax(mean))
    return StrongErrorResult(
        times=a.times,
        mean_sq=mean,
        se=se,
        sup=float(mean[imax]),
        sup_se=float(se[imax]),
        sup_time=float(a.times[imax]),
        n_paths=int(both.sum()),
    )


def _fit_loglog(x: np.ndarray, y: np.ndarray) -> "tuple[float, float, bool]":
    """Least-squares slope of log y against log x, with RMS residual."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0.0) or np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        return float("nan"), float("nan"), True
    lx = np.log(x)
    ly = np.log(y)
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = float(np.sqrt(np.mean((ly - design @ coef) ** 2)))
    return float(coef[0]), resid, resid > 0.5


def _sweep(kind: str, x, errors, ses) -> SweepResult:
    x = np.asarray(x, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ses = np.asarray(ses, dtype=float)
    slope, resid, flagged = _fit_loglog(x, errors)
    order = np.argsort(x)
    e, s = errors[order], ses[order]
    monotone = bool(np.all(e[:-1] <= e[1:] + 2.0 * (s[:-1] + s[1:])))
    return SweepResult(
        kind=kind,
        x=x,
        error=errors,
        se=ses,
        slope=slope,
        residual=resid,
        ill_conditioned=flagged,
        monotone_2se=monotone,
    )


def eps_sweep(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    checkpoints,
    eps_values,
    n_paths: int,
    seed: int,
    experiment: str,
    threads: int = 1,
    fbar: Optional[Callable[[Field], float]] = None,
) -> SweepResult:
    """Strong averaging error against the time-scale separation.

    One averaged ensemble is shared by every eps (same drift provider, same
    slow channels), so differences across eps reflect only the coupling to
    the fast dynamics, not re-estimated averaged drifts.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    if eps_values.size < 1 or np.any(eps_values <= 0.0) or np.any(eps_values >= 1.0):
        raise ValueError("eps values must lie in (0, 1)")
    if fbar is None:
        from .ergodics import fbar_provider

        fbar = fbar_provider(grid, params, couplings)
    averaged = run_averaged_ensemble(
        grid, params, couplings, scheme, u0, fbar, checkpoints, n_paths, seed, experiment, threads
    )
    errors = []
    ses = []
    for eps in eps_values:
        coupled = run_coupled_ensemble(
            grid,
            dataclasses.replace(params, eps=float(eps)),
            couplings,
            scheme,
            u0,
            v0,
            checkpoints,
            n_paths,
            seed,
            experiment,
            threads,
        )
        err = strong_error(coupled, averaged)
        errors.append(err.sup)
        ses.append(err.sup_se)
    return _sweep("eps", eps_values, errors, ses)


def viscosity_sweep(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    checkpoints,
    nu_values,
    n_paths: int,
    seed: int,
    experiment: str,
    threads: int = 1,
) -> SweepResult:
    """Strong regularization error against the viscosity, on shared noise.

    The reference ensemble runs at zero viscosity with the same labels, so
    each positive nu is compared pathwise against the inviscid trajectories.
    """
    nu_values = np.asarray(nu_values, dtype=float)
    if nu_values.size < 1 or np.any(nu_values <= 0.0):
        raise ValueError("nu values must be > 0 (the reference at 0 is implicit)")
    base = run_coupled_ensemble(
        grid,
        dataclasses.replace(params, nu=0.0),
        couplings,
        scheme,
        u0,
        v0,
        checkpoints,
        n_paths,
        seed,
        experiment,
        threads,
    )
    errors = []
    ses = []
    for nu in nu_values:
        run = run_coupled_ensemble(
            grid,
            dataclasses.replace(params, nu=float(nu)),
            couplings,
            scheme,
            u0,
            v0,
            checkpoints,
            n_paths,
            seed,
            experiment,
            threads,
        )
        err = strong_error(run, base)
        errors.append(err.sup)
        ses.append(err.sup_se)
    return _sweep("nu", nu_values, errors, ses)


def holder_study(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    t_base: float,
    offsets,
    n_paths: int,
    seed: int,
    experiment: str,
    threads: int = 1,
) -> SweepResult:
    """Mean-square time modulus E||u(t+h) - u(t)||^2 against the lag h."""
    offsets = np.asarray(offsets, dtype=float)
    if offsets.size < 1 or np.any(offsets < scheme.dt_slow):
        raise ValueError("offsets must be at least one slow step")
    if np.any(np.diff(offsets) <= 0.0):
        raise ValueError("offsets must be strictly increasing")
    times = np.concatenate([[t_base], t_base + offsets])
    stats = run_coupled_ensemble(
        grid, params, couplings, scheme, u0, v0, times, n_paths, seed, experiment, threads
    )
    ok = stats.path_ok
    base = stats.u_coeffs[ok, 0]
    errors = []
    ses = []
    for i in range(offsets.size):
        diff = stats.u_coeffs[ok, i + 1] - base
        sq = TWO_PI * np.sum(np.abs(diff) ** 2, axis=-1)
        mean, se = float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(sq.size))
        errors.append(mean)
        ses.append(se)
    actual_offsets = stats.times[1:] - stats.times[0]
    return _sweep("holder", actual_offsets, errors, ses)


def khasminskii_study(
    grid: SpectralGrid,
    params: ModelParams,
    couplings: CouplingSpec,
    scheme: StepScheme,
    u0: Field,
    v0: Field,
    deltas,
    n_paths: int,
    seed: int,
    experiment: str,
    threads: int = 1,
) -> "tuple[SweepResult, SweepResult]":
    """Block-frozen auxiliary errors against the block length delta.

    Returns the slow-state sweep and the fast-state sweep: for each delta,
    the mean over paths of the within-horizon sup of the squared auxiliary
    minus reference distances.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size < 1 or np.any(deltas < scheme.dt_slow):
        raise ValueError("deltas must be at least one slow step")
    ends = np.asarray([0.0, params.T])
    eff_deltas = []
    u_err, u_se, v_err, v_se = [], [], [], []
    for i, delta in enumerate(deltas):

        def worker(p: int, d=float(delta)):
            return khasminskii_path(grid, params, couplings, scheme, u0, v0, d, ends, seed, experiment, p)

        results, aborts = _run_paths(n_paths, threads, worker)
        _enforce_abort_budget(aborts, n_paths)
        sup_u = np.asarray([r.sup_u_err_sq for _, r in sorted(results.items())])
        sup_v = np.asarray([r.sup_v_err_sq for _, r in sorted(results.items())])
        eff_deltas.append(next(iter(results.values())).delta)
        u_err.append(float(sup_u.mean()))
        u_se.append(float(sup_u.std(ddof=1) / math.sqrt(sup_u.size)))
        v_err.append(float(sup_v.mean()))
        v_se.append(float(sup_v.std(ddof=1) / math.sqrt(sup_v.size)))
    return (
        _sweep("khasminskii_u", eff_deltas, u_err, u_se),
        _sweep("khasminskii_v", eff_deltas, v_err, v_se),
    )


# ---------------------------------------------------------------------------
# serialization


def _format_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _jsonable(obj):
    """Mirror of obj built from plain containers and scalars."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError("cannot serialize %r" % type(obj))


def _dump_json(obj) -> str:
    """JSON text with floats at 17 significant digits and sorted keys.

    Non-finite floats become null, keeping the output strictly parseable.
    """
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        inner = ", ".join("%s: %s" % (json.dumps(str(k)), _dump_json(v)) for k, v in sorted(obj.items()))
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump_json(v) for v in obj) + "]"
    raise TypeError("cannot serialize %r" % type(obj))


def config_fingerprint(config: dict) -> str:
    """Stable sha256 over the serialized configuration."""
    return hashlib.sha256(_dump_json(_jsonable(config)).encode("utf-8")).hexdigest()


def _write_csv(path: Path, header: "list[str]", columns: "list[np.ndarray]"):
    rows = len(columns[0])
    lines = [",".join(header)]
    for i in range(rows):
        cells = []
        for col in columns:
            val = col[i]
            if isinstance(val, (int, np.integer)):
                cells.append(str(int(val)))
            else:
                cells.append(_format_float(val))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def write_results(result, out_dir, name: str, extra_meta: Optional[dict] = None) -> "list[Path]":
    """Write a result object to out_dir under the given base name.

    Ensembles produce the fixed-schema CSV, a long-format CSV for plotting
    and a JSON sidecar; sweeps produce their CSV plus the JSON summary; lemma
    reports, drift estimates and strong-error results produce JSON (the last
    with a CSV of its curve).  extra_meta lands in the JSON sidecar, which
    also carries a fingerprint over that metadata.
    """
    from .ergodics import FbarEstimate
    from .model import LemmaReport

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    meta = dict(extra_meta or {})
    if meta:
        meta_fp = config_fingerprint(meta)
    else:
        meta_fp = None

    def sidecar(payload: dict, stem: str):
        payload = dict(payload)
        if meta:
            payload["config"] = _jsonable(meta)
            payload["config_sha256"] = meta_fp
        p = out / (stem + ".json")
        p.write_text(_dump_json(_jsonable(payload)) + "\n")
        written.append(p)

    if isinstance(result, EnsembleStats):
        csv_path = out / (name + ".csv")
        aborts_col = np.full(result.times.size, result.aborts, dtype=np.int64)
        _write_csv(
            csv_path,
            ["t", "mean_u_l2sq", "se_u_l2sq", "mean_u_h1sq", "se_u_h1sq", "mean_v_l2sq", "se_v_l2sq", "aborts"],
            [
                result.times,
                result.mean_u_l2sq,
                result.se_u_l2sq,
                result.mean_u_h1sq,
                result.se_u_h1sq,
                result.mean_v_l2sq,
                result.se_v_l2sq,
                aborts_col,
            ],
        )
        written.append(csv_path)
        long_path = out / (name + "_long.csv")
        quantities = [
            ("u_l2sq", result.mean_u_l2sq, result.se_u_l2sq),
            ("u_h1sq", result.mean_u_h1sq, result.se_u_h1sq),
            ("v_l2sq", result.mean_v_l2sq, result.se_v_l2sq),
        ]
        lines = ["t,quantity,mean,se"]
        for label, mean, se in quantities:
            for i in range(result.times.size):
                lines.append(
                    "%s,%s,%s,%s" % (_format_float(result.times[i]), label, _format_float(mean[i]), _format_float(se[i]))
                )
        long_path.write_text("\n".join(lines) + "\n")
        written.append(long_path)
        sidecar(
            {
                "kind": result.kind,
                "experiment": result.experiment,
                "seed": result.seed,
                "n_paths": result.n_paths,
                "aborts": result.aborts,
                "times": result.times,
            },
            name,
        )
        return written

    if isinstance(result, SweepResult):
        csv_path = out / (name + ".csv")
        _write_csv(csv_path, ["x", "error", "se"], [result.x, result.error, result.se])
        written.append(csv_path)
        sidecar(
            {
                "kind": result.kind,
                "slope": result.slope,
                "residual": result.residual,
                "ill_conditioned": result.ill_conditioned,
                "monotone_2se": result.monotone_2se,
                "x": result.x,
                "error": result.error,
                "se": result.se,
            },
            name,
        )
        return written

    if isinstance(result, StrongErrorResult):
        csv_path = out / (name + ".csv")
        _write_csv(csv_path, ["t", "mean_sq", "se"], [result.times, result.mean_sq, result.se])
        written.append(csv_path)
        sidecar(_jsonable(result), name)
        return written

    if isinstance(result, (LemmaReport, FbarEstimate)):
        sidecar(_jsonable(result), name)
        return written

    raise TypeError("write_results does not handle %r" % type(result))
