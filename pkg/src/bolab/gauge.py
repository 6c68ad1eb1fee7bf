"""Gauge transformation for Benjamin-Ono on the torus.

For a zero-mean real ``u`` with antiderivative ``F`` (``F(0) = 0``) the
gauge variable is ``w = dx P+ exp(-i G)`` where ``G = F + theta`` differs
from ``F`` by a spatial constant.  Taking ``theta(t) = t * mean(u^2)``
makes ``G`` solve ``G_t + H G_xx = u^2`` exactly, and then

    w_t - i w_xx = -2 P+ dx[ dx^{-1} w * P- dx u ]

holds with no extra terms.  With ``theta = 0`` the right side picks up
``-i mean(u^2) w`` because the zero-mean antiderivative drops the mean of
``u^2``.  The phase only rotates ``w`` by a unimodular constant, so every
norm of ``w`` is phase independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .solver import Trajectory, read_records, write_records
from .spectral import (
    Grid,
    PreconditionError,
    SpectralField,
    _pad,
    _truncate,
    apply_symbol,
    derivative,
    from_physical,
    inverse_derivative,
    low_pass,
    multiply,
    plus_hi,
    riesz_minus,
    riesz_plus,
    sobolev_norm,
)

OVERSAMPLE = 4


@dataclass(frozen=True)
class MeanShift:
    """``u(t, x) = v(t, x + velocity t) + c0`` with ``velocity = 2 c0``.

    The Galilean change for ``u_t + H u_xx = (u^2)_x`` moves at twice the mean
    because the nonlinearity is ``2 u u_x``.
    """

    c0: float = 0.0

    @property
    def velocity(self) -> float:
        return 2.0 * self.c0

    def _translate(self, f: SpectralField, shift: float) -> SpectralField:
        # f(x + shift)
        return f.replace(f.coeffs * np.exp(1j * f.grid.k * shift))

    def apply(self, u: SpectralField, t: float = 0.0) -> SpectralField:
        """Map a solution ``u(t)`` to the zero-mean solution ``v(t)``."""
        c = np.array(self._translate(u, -self.velocity * t).coeffs)
        c[0] -= self.c0
        return u.replace(c)

    def restore(self, v: SpectralField, t: float = 0.0) -> SpectralField:
        c = np.array(self._translate(v, self.velocity * t).coeffs)
        c[0] += self.c0
        return v.replace(c)


def reduce_mean(u0: SpectralField) -> tuple[SpectralField, MeanShift]:
    shift = MeanShift(float(u0.coeffs[0].real))
    return shift.apply(u0), shift


@dataclass(frozen=True)
class GaugeState:
    u: SpectralField
    F: SpectralField
    W: SpectralField
    w: SpectralField
    expf: SpectralField  # exp(-i(F + phase)) truncated to the grid
    phase: float = 0.0
    tail: float = 0.0  # L2 mass of exp(-iF) beyond the grid, relative
    mean_shift: MeanShift = MeanShift()


def mass_phase_rate(u: SpectralField) -> float:
    """``mean(u^2) = sum |c_n|^2``; the zero-mode rate of the gauge phase."""
    return float(np.sum(np.abs(u.coeffs) ** 2))


def _exp_iF(F: SpectralField, phase: float, sign: int = -1):
    """``exp(sign i (F + phase))`` on the oversampled grid: returns the full
    oversampled coefficient array and its truncation to ``F.grid``."""
    N = F.grid.num_modes
    size = OVERSAMPLE * N
    vals = np.fft.ifft(_pad(F.coeffs, N, size)).real * size
    e = np.exp(sign * 1j * (vals + phase))
    full = np.fft.fft(e) / size
    return full, _truncate(full, size, N)


def gauge_forward(u: SpectralField, phase: float = 0.0, mean_shift: MeanShift | None = None) -> GaugeState:
    """``F = dx^{-1} u``, ``W = P+ exp(-i(F + phase))``, ``w = dx W``."""
    if not u.real:
        raise PreconditionError("gauge_forward expects a real field")
    F = inverse_derivative(u)
    full, trunc = _exp_iF(F, phase)
    kept = _pad(trunc, u.grid.num_modes, full.size)
    tail = float(np.sqrt(np.sum(np.abs(full - kept) ** 2) / np.sum(np.abs(full) ** 2)))
    expf = SpectralField(u.grid, trunc, real=False)
    W = apply_symbol(expf, riesz_plus())
    return GaugeState(u, F, W, derivative(W), expf, phase, tail, mean_shift or MeanShift())


def reconstruct_u(w: SpectralField, F: SpectralField, phase: float = 0.0) -> SpectralField:
    """Recover ``u = i exp(iG) (w + P- dx exp(-iG))`` with ``G = F + phase``.

    The zero-mode part of ``dx exp(-iG)`` vanishes on the torus.  Products are
    formed on the oversampled grid, so the only error is the truncation of
    ``exp(-iG)`` to the grid carried by ``w``.
    """
    grid = w.grid
    N, size = grid.num_modes, OVERSAMPLE * grid.num_modes
    _, trunc = _exp_iF(F, phase)
    kk = grid.k
    minus = np.where(kk < 0, 1j * kk * trunc, 0.0)
    inner = np.fft.ifft(_pad(w.coeffs + minus, N, size)) * size
    vals = np.fft.ifft(_pad(F.coeffs, N, size)).real * size
    u_vals = 1j * np.exp(1j * (vals + phase)) * inner
    return from_physical(u_vals.real, grid, real=True)


def negligible_term(f: SpectralField, g: SpectralField, mode: str = "torus") -> SpectralField:
    """Torus: ``-2 P+ P_lo dx[f P- dx g]``.  Line: ``-2 P+hi dx[(P_lo f) P- dx g]``
    with the smooth cutoffs."""
    if f.grid != g.grid:
        raise PreconditionError("negligible_term: grids differ")
    dg = apply_symbol(derivative(g), riesz_minus())
    if mode == "torus":
        prod = multiply(f.replace(f.coeffs, real=False), dg.replace(dg.coeffs, real=False))
        out = apply_symbol(apply_symbol(derivative(prod), riesz_plus()), low_pass())
        return out * (-2.0)
    if mode == "line":
        flo = apply_symbol(f, low_pass(smooth=True))
        prod = multiply(flo.replace(flo.coeffs, real=False), dg.replace(dg.coeffs, real=False))
        return apply_symbol(derivative(prod), plus_hi(smooth=True)) * (-2.0)
    raise ValueError(f"unknown mode {mode!r}")


def gauge_nonlinearity(w: SpectralField, u: SpectralField) -> SpectralField:
    """``-2 P+ dx[ dx^{-1} w * P- dx u ]`` for positive-frequency ``w``."""
    W = inverse_derivative(w.replace(np.where(w.grid.k > 0, w.coeffs, 0.0)))
    du = apply_symbol(derivative(u), riesz_minus())
    prod = multiply(W, du.replace(du.coeffs, real=False))
    return apply_symbol(derivative(prod), riesz_plus()) * (-2.0)


@dataclass
class GaugeResidual:
    times: np.ndarray
    residual: np.ndarray
    reference: np.ndarray  # dt^2/6 ||w'''|| estimated from third differences
    store_interval: float
    phased: bool

    def as_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "residual": self.residual.tolist(),
            "reference": self.reference.tolist(),
            "store_interval": self.store_interval,
            "phased": self.phased,
        }


def gauge_series(traj: Trajectory, phased: bool = True) -> list[GaugeState]:
    u0 = traj.field(0)
    if abs(u0.coeffs[0]) > 1e-12 * max(sobolev_norm(u0, 0.0), 1.0):
        raise PreconditionError("gauge computations need a zero-mean trajectory; apply reduce_mean first")
    rate = mass_phase_rate(u0) if phased else 0.0
    return [gauge_forward(traj.field(i), phase=rate * t) for i, t in enumerate(traj.times)]


def gauge_residual(traj: Trajectory, phased: bool = True) -> GaugeResidual:
    """L2 residual of the gauge equation at interior stored times, with
    ``dt w`` by centered differences."""
    if len(traj) < 3:
        raise PreconditionError("gauge_residual needs at least 3 stored times")
    states = gauge_series(traj, phased)
    t = traj.times
    k = traj.grid.k
    res, ref = [], []
    for i in range(1, len(states) - 1):
        dt_w = (states[i + 1].w.coeffs - states[i - 1].w.coeffs) / (t[i + 1] - t[i - 1])
        lin = -1j * (1j * k) ** 2 * states[i].w.coeffs
        rhs = gauge_nonlinearity(states[i].w, states[i].u).coeffs
        r = dt_w + lin - rhs
        res.append(np.sqrt(traj.grid.period * np.sum(np.abs(r) ** 2)))
        if i + 2 < len(states):
            h = t[i + 1] - t[i]
            d3 = (states[i + 2].w.coeffs - 3 * states[i + 1].w.coeffs
                  + 3 * states[i].w.coeffs - states[i - 1].w.coeffs) / h**3
            ref.append(h**2 / 6 * np.sqrt(traj.grid.period * np.sum(np.abs(d3) ** 2)))
        else:
            ref.append(np.nan)
    return GaugeResidual(t[1:-1].copy(), np.array(res), np.array(ref), traj.store_interval, phased)


def save_gauge_series(times, states: list[GaugeState], path) -> None:
    """Records hold ``u`` and ``w`` coefficients back to back; ``F`` and ``W``
    follow from them."""
    grid = states[0].u.grid
    coeffs = np.array([np.concatenate([s.u.coeffs, s.w.coeffs]) for s in states])
    header = {
        "kind": "gauge",
        "grid": {"num_modes": grid.num_modes, "period": grid.period},
        "layout": ["u", "w"],
        "phases": [s.phase for s in states],
        "mean_shift": states[0].mean_shift.c0,
    }
    write_records(path, header, times, coeffs)


def load_gauge_series(path):
    header, times, coeffs = read_records(path)
    grid = Grid(**header["grid"])
    N = grid.num_modes
    shift = MeanShift(header.get("mean_shift", 0.0))
    states = []
    for c, ph in zip(coeffs, header["phases"]):
        u = SpectralField(grid, c[:N], True)
        w = SpectralField(grid, c[N:], False)
        st = gauge_forward(u, phase=ph, mean_shift=shift)
        states.append(replace(st, w=w, W=inverse_derivative(w)))
    return times, states


def residual_order(traj: Trajectory, strides=(4, 2, 1), phased: bool = True) -> dict:
    """Gauge residual with the differencing interval ``stride * store_interval``
    for each stride, compared at the interior times common to all strides.
    Returns the max residual per stride and the observed orders between
    consecutive strides."""
    strides = sorted(strides, reverse=True)
    coarse = strides[0]
    levels = []
    for st in strides:
        r = gauge_residual(traj.subsample(st), phased)
        # interior times of the coarsest sampling, as indices into this one
        pick = [i for i, t in enumerate(r.times) if round(t / (coarse * traj.store_interval), 6).is_integer()]
        levels.append(float(np.max(r.residual[pick])) if pick else float("nan"))
    orders = [
        float(np.log(a / b) / np.log(s1 / s2))
        for a, b, s1, s2 in zip(levels, levels[1:], strides, strides[1:])
    ]
    return {"strides": strides, "store_interval": traj.store_interval, "residual": levels, "orders": orders}
