"""Fourier pseudo-spectral core on the 2*pi-periodic torus.

Conventions used throughout the package:

* A grid with ``n`` modes carries the collocation nodes ``x_j = 2*pi*j/n``
  and resolves the integer wavenumbers ``{-n/2+1, ..., n/2}``.  Coefficient
  arrays are kept in numpy FFT order; the slot that ``fftfreq`` labels
  ``-n/2`` is interpreted as ``+n/2`` (the two are indistinguishable on the
  grid, and zero padding places the mode at the positive frequency).
* Coefficients are true Fourier coefficients of ``u(x) = sum_k c_k e^{ikx}``:
  analysis is ``fft(values)/n``, synthesis is ``ifft(coeffs)*n``, and
  Parseval reads ``||u||_L2^2 = 2*pi*sum_k |c_k|^2``.
* First derivatives zero the Nyquist mode, whose ``ik`` is sign-ambiguous on
  the grid.  Even multipliers such as ``|k|^{2a}`` act on every mode.
* Pointwise products are evaluated after 2x zero padding and truncated back,
  which removes aliasing for power nonlinearities of degree up to cubic and
  keeps higher degrees from folding energy back into resolved modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


class SpectralGrid:
    """Collocation nodes and wavenumber bookkeeping for ``n_modes`` modes.

    Grids with equal ``n_modes`` compare equal, so fields produced by
    different code paths interoperate as long as the resolution matches.
    """

    def __init__(self, n_modes: int):
        n = int(n_modes)
        if n < 4 or n % 2 != 0:
            raise ValueError("n_modes must be an even integer >= 4, got %r" % (n_modes,))
        self.n_modes = n
        self.nodes = TWO_PI * np.arange(n) / n
        # fftfreq order is [0, 1, ..., n/2-1, -n/2, ..., -1]; reinterpret the
        # Nyquist slot as +n/2 so the resolved set is {-n/2+1, ..., n/2}.
        k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        k[n // 2] = n // 2
        self.wavenumbers = k
        self.k_sq = k.astype(np.float64) ** 2
        ik = 1j * k.astype(np.float64)
        ik[n // 2] = 0.0  # Nyquist derivative is ambiguous, drop it
        self.deriv_multiplier = ik
        self.quad_weight = TWO_PI / n

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Fourier coefficients of point values (last axis is space)."""
        return np.fft.fft(values, axis=-1) / self.n_modes

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Point values at the collocation nodes (last axis is modes)."""
        return np.fft.ifft(coeffs, axis=-1) * self.n_modes

    def __eq__(self, other):
        return isinstance(other, SpectralGrid) and other.n_modes == self.n_modes

    def __hash__(self):
        return hash(("SpectralGrid", self.n_modes))

    def __repr__(self):
        return "SpectralGrid(n_modes=%d)" % self.n_modes


def make_grid(n_modes: int) -> SpectralGrid:
    """Build the torus grid with the package's wavenumber conventions."""
    return SpectralGrid(n_modes)


class Field:
    """A complex-valued field on the torus, stored by Fourier coefficients.

    Point values at the collocation nodes are computed lazily and cached.
    Arithmetic requires both operands to live on the same grid.
    """

    __slots__ = ("grid", "coeffs", "_values")

    def __init__(self, grid: SpectralGrid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (grid.n_modes,):
            raise ValueError(
                "coefficient array has shape %r, expected (%d,)" % (coeffs.shape, grid.n_modes)
            )
        self.grid = grid
        self.coeffs = coeffs
        self._values = None

    @classmethod
    def from_coeffs(cls, grid: SpectralGrid, coeffs) -> "Field":
        return cls(grid, np.array(coeffs, dtype=np.complex128))

    @classmethod
    def from_values(cls, grid: SpectralGrid, values) -> "Field":
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (grid.n_modes,):
            raise ValueError(
                "value array has shape %r, expected (%d,)" % (values.shape, grid.n_modes)
            )
        f = cls(grid, grid.analyze(values))
        f._values = values
        return f

    @classmethod
    def zero(cls, grid: SpectralGrid) -> "Field":
        return cls(grid, np.zeros(grid.n_modes, dtype=np.complex128))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.grid.synthesize(self.coeffs)
        return self._values

    def copy(self) -> "Field":
        return Field(self.grid, self.coeffs.copy())

    def _check_grid(self, other: "Field"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids: %r vs %r" % (self.grid, other.grid))

    def __add__(self, other: "Field") -> "Field":
        self._check_grid(other)
        return Field(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "Field") -> "Field":
        self._check_grid(other)
        return Field(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.coeffs)

    def __repr__(self):
        return "Field(n_modes=%d, l2=%.6g)" % (self.grid.n_modes, norm_l2(self))


def norm_l2(u: Field) -> float:
    """L2 norm on (0, 2*pi), computed spectrally."""
    return float(np.sqrt(TWO_PI * np.sum(np.abs(u.coeffs) ** 2)))


def norm_h1(u: Field) -> float:
    """Full H1 norm, sqrt(||u||^2 + ||u_x||^2), with the Nyquist slope dropped."""
    du = u.grid.deriv_multiplier * u.coeffs
    total = np.sum(np.abs(u.coeffs) ** 2) + np.sum(np.abs(du) ** 2)
    return float(np.sqrt(TWO_PI * total))


def norm_lp(u: Field, p: float) -> float:
    """L^p norm by trapezoidal quadrature at the collocation nodes.

    On a periodic uniform grid the trapezoidal rule is just the node sum
    times the spacing, so the quadrature is spectrally accurate for smooth
    integrands.
    """
    if p < 1:
        raise ValueError("p must be >= 1, got %r" % (p,))
    vals = np.abs(u.values)
    return float((u.grid.quad_weight * np.sum(vals**p)) ** (1.0 / p))


def inner_l2(u: Field, v: Field) -> float:
    """Real L2 inner product Re(integral of u * conj(v))."""
    u._check_grid(v)
    return float(np.real(TWO_PI * np.sum(u.coeffs * np.conj(v.coeffs))))


def frac_laplacian(u: Field, a: float) -> Field:
    """Apply (-Laplacian)^a, the Fourier multiplier |k|^{2a}."""
    if not 0.0 < a <= 1.0:
        raise ValueError("fractional exponent must lie in (0, 1], got %r" % (a,))
    mult = np.abs(u.grid.wavenumbers).astype(np.float64) ** (2.0 * a)
    return Field(u.grid, mult * u.coeffs)


SLOW_FREE = "slow_free"
SLOW_VISCOUS = "slow_viscous"
AVERAGED_VISCOUS = "averaged_viscous"
FAST_DISSIPATIVE = "fast_dissipative"

_SYMBOL_KINDS = (SLOW_FREE, SLOW_VISCOUS, AVERAGED_VISCOUS, FAST_DISSIPATIVE)


@dataclass(frozen=True)
class LinearSymbol:
    """Fourier symbol of one of the linear drift operators.

    Kinds and their multipliers m(k):

    * ``slow_free``:         -i |k|^{2a}
    * ``slow_viscous``:      -i |k|^{2a} - nu k^2
    * ``averaged_viscous``:  same multiplier as slow_viscous (kept distinct so
      outputs record which equation a propagator belonged to)
    * ``fast_dissipative``:  (-(1+i) |k|^{2a} - lam) / eps

    ``exponent`` is the dispersion exponent (alpha for the slow symbols, rho
    for the fast one) and must lie in (1/2, 1).
    """

    kind: str
    exponent: float
    nu: float = 0.0
    lam: float = 0.0
    eps: float = 1.0

    def __post_init__(self):
        if self.kind not in _SYMBOL_KINDS:
            raise ValueError("unknown symbol kind %r" % (self.kind,))
        if not 0.5 < self.exponent < 1.0:
            raise ValueError("dispersion exponent must lie in (1/2, 1), got %r" % (self.exponent,))
        if self.nu < 0.0:
            raise ValueError("nu must be >= 0, got %r" % (self.nu,))
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0, got %r" % (self.lam,))
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1], got %r" % (self.eps,))

    @classmethod
    def slow_free(cls, alpha: float) -> "LinearSymbol":
        return cls(SLOW_FREE, alpha)

    @classmethod
    def slow_viscous(cls, alpha: float, nu: float) -> "LinearSymbol":
        return cls(SLOW_VISCOUS, alpha, nu=nu)

    @classmethod
    def averaged_viscous(cls, alpha: float, nu: float) -> "LinearSymbol":
        return cls(AVERAGED_VISCOUS, alpha, nu=nu)

    @classmethod
    def fast_dissipative(cls, rho: float, lam: float, eps: float) -> "LinearSymbol":
        return cls(FAST_DISSIPATIVE, rho, lam=lam, eps=eps)

    def multipliers(self, grid: SpectralGrid) -> np.ndarray:
        """Complex multiplier array m(k) in the grid's FFT ordering."""
        ak = np.abs(grid.wavenumbers).astype(np.float64) ** (2.0 * self.exponent)
        if self.kind == SLOW_FREE:
            return -1j * ak
        if self.kind in (SLOW_VISCOUS, AVERAGED_VISCOUS):
            return -1j * ak - self.nu * grid.k_sq
        # fast_dissipative: linear drift of the fast equation, including the
        # 1/eps time speedup and the -lam damping
        return (-(1.0 + 1j) * ak - self.lam) / self.eps


def apply_propagator(u: Field, symbol: LinearSymbol, t: float) -> Field:
    """Apply exp(t * m(k)) mode by mode, the exact linear-flow semigroup."""
    if t < 0.0:
        raise ValueError("propagation time must be >= 0, got %r" % (t,))
    return Field(u.grid, np.exp(t * symbol.multipliers(u.grid)) * u.coeffs)


def pad_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Zero-pad coefficients from n to 2n modes (last axis).

    The Nyquist slot rides along as the ordinary positive frequency +n/2 of
    the fine grid, which is what makes the +n/2 interpretation concrete.
    """
    n = coeffs.shape[-1]
    half = n // 2
    out = np.zeros(coeffs.shape[:-1] + (2 * n,), dtype=np.complex128)
    out[..., : half + 1] = coeffs[..., : half + 1]
    out[..., 2 * n - half + 1 :] = coeffs[..., half + 1 :]
    return out


def truncate_coeffs(coeffs_fine: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pad_coeffs`: keep wavenumbers in {-n/2+1, ..., n/2}.

    Energy the fine grid holds at the partner frequency -n/2 is discarded.
    """
    m = coeffs_fine.shape[-1]
    n = m // 2
    half = n // 2
    out = np.empty(coeffs_fine.shape[:-1] + (n,), dtype=np.complex128)
    out[..., : half + 1] = coeffs_fine[..., : half + 1]
    out[..., half + 1 :] = coeffs_fine[..., 2 * n - half + 1 :]
    return out


def random_field(grid: SpectralGrid, rng: np.random.Generator, decay: float = 1.5, amplitude: float = 1.0) -> Field:
    """Random band-limited field with an algebraically decaying spectrum.

    Coefficients are complex Gaussian with standard deviation
    amplitude / (1 + |k|)^decay; the Nyquist mode is left empty.
    """
    n = grid.n_modes
    scale = amplitude / (1.0 + np.abs(grid.wavenumbers).astype(np.float64)) ** decay
    c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * scale
    c[n // 2] = 0.0
    return Field(grid, c)
