"""Fourier-grid representation of periodic fields.

Coefficients are stored in numpy FFT order and follow the convention

    u(x) = sum_n c_n exp(i k_n x),    k_n = 2 pi n / period,

so that ``||u||_{L^2}^2 = period * sum |c_n|^2``.  The unmatched Nyquist
mode ``n = -num_modes/2`` is always zero.

Every Fourier multiplier (Hilbert transform, Riesz and Littlewood-Paley
projections, Bessel potentials, the linear propagators) is a
:class:`SymbolSpec` and is applied with :func:`apply_symbol`.  Torus mode
uses sharp indicator symbols; passing ``smooth=True`` to the projection
factories gives the C-infinity cutoffs used for "line mode" (a large-period
torus).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "SymbolSpec",
    "DimensionError",
    "PreconditionError",
    "ParameterError",
    "to_physical",
    "from_physical",
    "apply_symbol",
    "inverse_derivative",
    "derivative",
    "multiply",
    "sobolev_norm",
    "lebesgue_norm",
    "bump",
    "hilbert",
    "riesz_plus",
    "riesz_minus",
    "zero_mode",
    "low_pass",
    "lp_band",
    "plus_hi",
    "minus_hi",
    "bessel_potential",
    "riesz_potential",
    "derivative_symbol",
    "antiderivative_symbol",
    "bo_propagator",
    "schrodinger_propagator",
    "dyadic_scales",
]


class DimensionError(ValueError):
    """Array shape does not match the grid."""


class PreconditionError(ValueError):
    """An operation was called outside its domain."""


class ParameterError(ValueError):
    """A numerical parameter is out of range."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``num_modes`` samples on ``[0, period)``."""

    num_modes: int
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.num_modes < 8 or self.num_modes % 2:
            raise ParameterError(f"num_modes must be even and >= 8, got {self.num_modes}")
        if not self.period > 0:
            raise ParameterError(f"period must be positive, got {self.period}")

    @property
    def n(self) -> np.ndarray:
        """Integer lattice frequencies in FFT order."""
        return np.fft.fftfreq(self.num_modes, d=1.0 / self.num_modes).astype(np.int64)

    @property
    def k(self) -> np.ndarray:
        """Physical wavenumbers ``2 pi n / period``."""
        return self.n * (2 * np.pi / self.period)

    @property
    def scale(self) -> float:
        return 2 * np.pi / self.period

    @property
    def nyquist_index(self) -> int:
        return self.num_modes // 2

    @property
    def max_mode(self) -> int:
        """Largest |n| carried by a field (the Nyquist mode is excluded)."""
        return self.num_modes // 2 - 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.num_modes) * (self.period / self.num_modes)

    def index(self, n):
        """FFT-order array index of lattice frequency ``n``."""
        n = np.asarray(n)
        if np.any(np.abs(n) > self.max_mode):
            raise DimensionError(f"frequency out of range for N={self.num_modes}")
        return np.mod(n, self.num_modes)

    def with_modes(self, num_modes: int) -> "Grid":
        return Grid(num_modes, self.period)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a periodic function on ``grid``.

    ``real`` marks fields whose coefficients obey ``c_{-n} = conj(c_n)``.
    The coefficient array is copied, its Nyquist entry zeroed, and frozen.
    """

    grid: Grid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.num_modes,):
            raise DimensionError(
                f"expected {self.grid.num_modes} coefficients, got shape {c.shape}"
            )
        c[self.grid.nyquist_index] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid, real: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.num_modes, dtype=np.complex128), real)

    @classmethod
    def from_modes(cls, grid: Grid, modes: dict, real: bool | None = None) -> "SpectralField":
        """Build a field from ``{n: c_n}``.  For real fields pass both signs."""
        c = np.zeros(grid.num_modes, dtype=np.complex128)
        for n, value in modes.items():
            c[grid.index(n)] = value
        f = cls(grid, c, real=False)
        if real is None:
            real = f.is_hermitian()
        return cls(grid, c, real=real)

    def replace(self, coeffs, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.real if real is None else real)

    def coeff(self, n) -> complex:
        return self.coeffs[self.grid.index(n)]

    @property
    def mean(self) -> complex:
        """Zero mode c_0, i.e. the spatial average."""
        return self.coeffs[0] if not self.real else self.coeffs[0].real

    def is_hermitian(self, tol: float = 0.0) -> bool:
        c = self.coeffs
        mirror = np.conj(c[(-self.grid.n) % self.grid.num_modes])
        scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
        return bool(np.max(np.abs(c - mirror), initial=0.0) <= tol * scale)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, self.real)

    def __mul__(self, scalar) -> "SpectralField":
        scalar = complex(scalar)
        return SpectralField(self.grid, self.coeffs * scalar, self.real and scalar.imag == 0)

    __rmul__ = __mul__


def _check_same_grid(a: SpectralField, b: SpectralField):
    if a.grid != b.grid:
        raise DimensionError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True)
class SymbolSpec:
    """A Fourier multiplier: pure map from wavenumber to complex amplitude."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return np.broadcast_to(np.asarray(self.func(k), dtype=np.complex128), k.shape)

    def __mul__(self, other: "SymbolSpec") -> "SymbolSpec":
        return SymbolSpec(f"{self.name}*{other.name}", lambda k: self(k) * other(k))

    def __add__(self, other: "SymbolSpec") -> "SymbolSpec":
        return SymbolSpec(f"{self.name}+{other.name}", lambda k: self(k) + other(k))


# ---------------------------------------------------------------------------
# transforms


def _pad(coeffs: np.ndarray, num_modes: int, size: int) -> np.ndarray:
    """Embed FFT-ordered coefficients into a longer FFT-ordered array."""
    out = np.zeros(size, dtype=np.complex128)
    half = num_modes // 2
    out[:half] = coeffs[:half]
    out[size - half + 1 :] = coeffs[half + 1 :]
    return out


def _truncate(coeffs: np.ndarray, size: int, num_modes: int) -> np.ndarray:
    out = np.zeros(num_modes, dtype=np.complex128)
    half = num_modes // 2
    out[:half] = coeffs[:half]
    out[half + 1 :] = coeffs[size - half + 1 :]
    return out


def to_physical(f: SpectralField, oversample: int = 1) -> np.ndarray:
    """Samples of ``f`` on a grid refined ``oversample`` times."""
    size = f.grid.num_modes * oversample
    c = f.coeffs if oversample == 1 else _pad(f.coeffs, f.grid.num_modes, size)
    samples = np.fft.ifft(c) * size
    return samples.real if f.real else samples


def from_physical(samples, grid: Grid, real: bool | None = None) -> SpectralField:
    """Fourier coefficients of grid samples; longer sample arrays are
    interpreted as an oversampled grid and truncated to ``grid``."""
    samples = np.asarray(samples)
    if samples.ndim != 1 or samples.size % grid.num_modes:
        raise DimensionError(
            f"sample count {samples.shape} incompatible with num_modes={grid.num_modes}"
        )
    if real is None:
        real = not np.iscomplexobj(samples)
    c = np.fft.fft(samples) / samples.size
    if samples.size != grid.num_modes:
        c = _truncate(c, samples.size, grid.num_modes)
    if real:
        c = 0.5 * (c + np.conj(c[(-grid.n) % grid.num_modes]))
    return SpectralField(grid, c, real)


def apply_symbol(f: SpectralField, sym: SymbolSpec) -> SpectralField:
    k = f.grid.k
    m = sym(k)
    mirror = m[(-f.grid.n) % f.grid.num_modes]
    same = mirror == np.conj(m)
    same[f.grid.nyquist_index] = True  # the Nyquist mode is always zero
    keeps_real = bool(np.all(same))
    return SpectralField(f.grid, m * f.coeffs, f.real and keeps_real)


def derivative(f: SpectralField, order: int = 1) -> SpectralField:
    return SpectralField(f.grid, (1j * f.grid.k) ** order * f.coeffs, f.real)


def inverse_derivative(f: SpectralField, tol: float = 1e-12) -> SpectralField:
    """Zero-mean antiderivative: ``F(0) = 0``, ``F(n) = f(n) / (i k_n)``."""
    c0 = f.coeffs[0]
    size = np.sqrt(np.sum(np.abs(f.coeffs) ** 2))
    if abs(c0) > tol * size:
        raise PreconditionError(f"inverse_derivative needs zero mean, got c_0 = {c0!r}")
    k = f.grid.k
    out = np.zeros_like(f.coeffs)
    nz = k != 0
    out[nz] = f.coeffs[nz] / (1j * k[nz])
    return SpectralField(f.grid, out, f.real)


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Alias-free product ``f g`` truncated back to the common grid."""
    _check_same_grid(f, g)
    prod = to_physical(f, 2) * to_physical(g, 2)
    return from_physical(prod, f.grid, real=f.real and g.real)


# ---------------------------------------------------------------------------
# norms


def sobolev_norm(f: SpectralField, s: float) -> float:
    """``||f||_{H^s}`` with weight ``(1 + |k|)^s``."""
    w = (1.0 + np.abs(f.grid.k)) ** (2 * s)
    return float(np.sqrt(f.grid.period * np.sum(w * np.abs(f.coeffs) ** 2)))


def lebesgue_norm(f: SpectralField, p: float, oversample: int = 4) -> float:
    """``||f||_{L^p}`` by trapezoidal quadrature on an oversampled grid."""
    if not p >= 1:
        raise ParameterError(f"L^p norm needs p >= 1, got {p}")
    vals = np.abs(to_physical(f, oversample))
    if np.isinf(p):
        return float(vals.max(initial=0.0))
    dx = f.grid.period / vals.size
    return float((dx * np.sum(vals**p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# symbols


def bump(xi) -> np.ndarray:
    """Smooth cutoff: 1 on ``[-1, 1]``, 0 outside ``[-2, 2]``.

    The transition on ``1 < |xi| < 2`` is ``h(2-|xi|) / (h(2-|xi|) + h(|xi|-1))``
    with ``h(t) = exp(-1/t)`` for ``t > 0``.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    with np.errstate(divide="ignore", over="ignore"):
        up = np.where(a < 2, np.exp(-1.0 / np.where(a < 2, 2 - a, 1.0)), 0.0)
        dn = np.where(a > 1, np.exp(-1.0 / np.where(a > 1, a - 1, 1.0)), 0.0)
    return np.where(a <= 1, 1.0, np.where(a >= 2, 0.0, up / (up + dn)))


def _low(k, smooth):
    return bump(k) if smooth else (np.abs(k) <= 1).astype(float)


def hilbert() -> SymbolSpec:
    return SymbolSpec("H", lambda k: -1j * np.sign(k))


def riesz_plus() -> SymbolSpec:
    return SymbolSpec("P+", lambda k: (k > 0).astype(float))


def riesz_minus() -> SymbolSpec:
    return SymbolSpec("P-", lambda k: (k < 0).astype(float))


def zero_mode() -> SymbolSpec:
    return SymbolSpec("P0", lambda k: (k == 0).astype(float))


def low_pass(smooth: bool = False) -> SymbolSpec:
    """``P_lo = P_{<=1}``."""
    return SymbolSpec("P_lo", lambda k: _low(k, smooth))


def plus_hi(smooth: bool = False) -> SymbolSpec:
    """Symbol chi_+ of ``P_{+hi}``: positive frequencies with ``|k| > 1``."""
    return SymbolSpec("P+hi", lambda k: (1 - _low(k, smooth)) * (k > 0))


def minus_hi(smooth: bool = False) -> SymbolSpec:
    return SymbolSpec("P-hi", lambda k: (1 - _low(k, smooth)) * (k < 0))


def lp_band(N: float, smooth: bool = False) -> SymbolSpec:
    """Littlewood-Paley piece ``P_N``: ``psi(k/N) - psi(2k/N)``.

    Sharp version is the indicator of ``N/2 < |k| <= N``.
    """
    return SymbolSpec(f"P_{N:g}", lambda k: _low(k / N, smooth) - _low(2 * k / N, smooth))


def bessel_potential(s: float) -> SymbolSpec:
    """``J^s`` with symbol ``(1 + |k|)^s``."""
    return SymbolSpec(f"J^{s:g}", lambda k: (1.0 + np.abs(k)) ** s)


def riesz_potential(s: float) -> SymbolSpec:
    """``D^s`` with symbol ``|k|^s`` (zero at k = 0)."""
    return SymbolSpec(f"D^{s:g}", lambda k: np.where(k == 0, 0.0, np.abs(k) ** s))


def derivative_symbol() -> SymbolSpec:
    return SymbolSpec("dx", lambda k: 1j * k)


def antiderivative_symbol() -> SymbolSpec:
    return SymbolSpec(
        "dx^-1", lambda k: np.where(k == 0, 0.0, 1.0 / (1j * np.where(k == 0, 1.0, k)))
    )


def bo_propagator(t: float) -> SymbolSpec:
    """``exp(-t H dx^2)``: symbol ``exp(-i k|k| t)``."""
    return SymbolSpec(f"S_BO({t:g})", lambda k: np.exp(-1j * k * np.abs(k) * t))


def schrodinger_propagator(t: float) -> SymbolSpec:
    """``exp(i t dx^2)``: symbol ``exp(-i k^2 t)``."""
    return SymbolSpec(f"S_NLS({t:g})", lambda k: np.exp(-1j * k**2 * t))


def dyadic_scales(grid: Grid) -> list[int]:
    """Dyadic N = 2, 4, ... whose band ``N/2 < |n| <= N`` meets the grid."""
    out, N = [], 2
    while N // 2 < grid.max_mode * grid.scale:
        out.append(N)
        N *= 2
    return out
