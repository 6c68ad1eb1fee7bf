"""Time-integrated check of the twice-normal-formed gauge equation.

With ``c = (1, 1, 2)`` the twisted gauge variable satisfies

    dt w~ = N1_leM(w~, u~) + E~ + dt N1_0(w~, u~) - N1_0(E~, u~) + N2_leM(w~, u~, u~)
            + sum_j c_j [ dt N2_j0(w~, u~, u~) - N2_j0(E~, u~, u~) - sum_k N3_jk(w~, u~, u~, u~) ]

so over ``[0, t]`` the left side ``w~(t) - w~(0)`` equals the time integral of
the non-boundary terms plus the boundary terms evaluated at the endpoints.
The integral is composite Simpson over the stored samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from ..gauge import gauge_forward, mass_phase_rate, reduce_mean
from ..solver import Trajectory
from ..spectral import ParameterError, PreconditionError, SpectralField, sobolev_norm
from .terms import eval_term, twist_gauge, twist_solution

WEIGHTS = {1: 1.0, 2: 1.0, 3: 2.0}


@dataclass
class ResidualReport:
    M: float
    s: float
    delta: float
    times: np.ndarray
    lhs_norm: np.ndarray
    residual: np.ndarray  # absolute, H^{s+delta}
    relative: np.ndarray
    term_norms: dict = field(default_factory=dict)
    path: str = "direct"

    @property
    def final_relative(self) -> float:
        return float(self.relative[-1]) if len(self.relative) else 0.0

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1]) if len(self.residual) else 0.0

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "s": self.s,
            "delta": self.delta,
            "path": self.path,
            "times": self.times.tolist(),
            "lhs_norm": self.lhs_norm.tolist(),
            "residual": self.residual.tolist(),
            "relative": self.relative.tolist(),
            "term_norms": self.term_norms,
        }


def twisted_samples(traj: Trajectory):
    """``(t, w~, u~, E~)`` at every stored time, after mean reduction and with
    the phased gauge."""
    _, shift = reduce_mean(traj.field(0))
    rate = mass_phase_rate(shift.apply(traj.field(0)))
    out = []
    for i, t in enumerate(traj.times):
        v = shift.apply(traj.field(i), t)
        st = gauge_forward(v, phase=rate * t, mean_shift=shift)
        ut = twist_solution(v, t)
        wt = twist_gauge(st.w, t)
        Et = eval_term("E_term", [st.expf, ut], t)
        out.append((float(t), wt, ut, Et))
    return out


def integrand_terms(wt, ut, Et, t, M, path="direct") -> dict:
    """Non-boundary terms of the integrated identity, with their signs."""
    terms = {
        "N1_leM": eval_term("N1_leM", [wt, ut], t, M),
        "E": Et,
        "N1_0_of_E": eval_term("N1_0_of_E", [Et, ut], t, M) * (-1.0),
        "N2_leM": eval_term("N2_leM", [wt, ut, ut], t, M),
    }
    for j, c in WEIGHTS.items():
        terms[f"N2_{j}0_of_E"] = eval_term(f"N2_{j}0_of_E", [Et, ut, ut], t, M) * (-c)
        for k in (1, 2, 3):
            terms[f"N3_{j}{k}"] = eval_term(f"N3_{j}{k}", [wt, ut, ut, ut], t, M, path=path) * (-c)
    return terms


def boundary_terms(wt, ut, t, M) -> dict:
    out = {"N1_0": eval_term("N1_0", [wt, ut], t, M)}
    for j, c in WEIGHTS.items():
        out[f"N2_{j}0"] = eval_term(f"N2_{j}0", [wt, ut, ut], t, M) * c
    return out


def normalform_residual(traj: Trajectory, M: float, s: float = 0.0, delta: float = 0.0,
                        path: str = "direct") -> ResidualReport:
    """Compare ``w~(t) - w~(0)`` with the integrated right-hand side at every
    stored time reachable by composite Simpson (even sample index)."""
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    if len(traj) < 3:
        raise PreconditionError("Simpson quadrature needs at least 3 stored samples")
    dts = np.diff(traj.times)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1e-300):
        raise PreconditionError("stored samples must be equally spaced")
    samples = twisted_samples(traj)
    grid = traj.grid
    norm_s = s + delta

    integrands = []
    for t, wt, ut, Et in samples:
        integrands.append(integrand_terms(wt, ut, Et, t, M, path))
    names = list(integrands[0])
    stacked = {n: np.array([d[n].coeffs for d in integrands]) for n in names}
    total = sum(stacked.values())

    t0, wt0, ut0, _ = samples[0]
    b0 = boundary_terms(wt0, ut0, t0, M)
    b0_sum = sum(b.coeffs for b in b0.values())

    times, lhs_n, res, rel = [], [], [], []
    for i in range(2, len(samples), 2):
        t, wt, ut, _ = samples[i]
        integral = simpson(total[: i + 1], x=traj.times[: i + 1], axis=0)
        bt = boundary_terms(wt, ut, t, M)
        rhs = integral + sum(b.coeffs for b in bt.values()) - b0_sum
        lhs = wt.coeffs - wt0.coeffs
        ln = sobolev_norm(SpectralField(grid, lhs, False), norm_s)
        rn = sobolev_norm(SpectralField(grid, lhs - rhs, False), norm_s)
        times.append(t)
        lhs_n.append(ln)
        res.append(rn)
        rel.append(rn / ln if ln > 0 else 0.0)

    last = len(samples) - 1 if (len(samples) - 1) % 2 == 0 else len(samples) - 2
    t_end = samples[last][0]
    magn = {}
    for n in names:
        integral = simpson(stacked[n][: last + 1], x=traj.times[: last + 1], axis=0)
        magn[n] = sobolev_norm(SpectralField(grid, integral, False), norm_s)
    bt = boundary_terms(samples[last][1], samples[last][2], t_end, M)
    for n in bt:
        diff = bt[n].coeffs - b0[n].coeffs
        magn[f"[{n}]"] = sobolev_norm(SpectralField(grid, diff, False), norm_s)

    return ResidualReport(M, s, delta, np.array(times), np.array(lhs_n), np.array(res),
                          np.array(rel), magn, path)
