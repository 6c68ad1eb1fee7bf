"""Multipliers of the two-step normal form.

Every kernel takes ``(xi, xi_1, ..., xi_k)`` as broadcastable arrays on the
convolution hyperplane, the threshold ``M`` and a ``smooth`` flag selecting
the cutoff ``chi_+`` (sharp ``xi > 1`` on the torus), and returns the complex
multiplier including all indicator factors.  Denominators are only evaluated
where the indicators are nonzero.

The cubic and quartic multipliers exist in two independent forms:
``compositional`` (built from the quadratic ones exactly as they arise from
substituting the equations) and ``expanded`` (closed forms after the phase
factorization).  They agree on the lattice.
"""

from __future__ import annotations

import numpy as np

from ..spectral import ParameterError, plus_hi
from .phases import Omega, omega2

_CHI = {False: plus_hi(False), True: plus_hi(True)}


def chi(x, smooth=False):
    return _CHI[smooth](np.asarray(x, dtype=float))


def neg(x):
    return (np.asarray(x) < 0).astype(float)


def nonneg(x):
    return (np.asarray(x) >= 0).astype(float)


def _gt(a, thr):
    return (np.abs(a) > thr).astype(float)


def _le(a, thr):
    return (np.abs(a) <= thr).astype(float)


def _ratio(num, den, weight):
    """``weight * num / den`` with the division skipped where weight is 0."""
    weight = np.asarray(weight)
    mask = weight != 0
    safe = np.where(mask, den, 1.0)
    return np.where(mask, weight * num / safe, 0.0)


def _f(*xs):
    return [np.asarray(x, dtype=float) for x in xs]


# ---------------------------------------------------------------------------
# first step


def sigma(xi, x1, x2, M=0.0, smooth=False):
    xi, x1, x2 = _f(xi, x1, x2)
    return chi(xi, smooth) * chi(x1, smooth) * neg(x2)


def n1(xi, x1, x2, M=0.0, smooth=False):
    """Gauged quadratic term (no threshold split)."""
    xi, x1, x2 = _f(xi, x1, x2)
    return -2j * _ratio(xi * x2, x1, sigma(xi, x1, x2, M, smooth))


def n1_le(xi, x1, x2, M=0.0, smooth=False):
    return n1(xi, x1, x2, M, smooth) * _le(Omega(*_f(xi, x1, x2)), M)


def n1_gt(xi, x1, x2, M=0.0, smooth=False):
    return n1(xi, x1, x2, M, smooth) * _gt(Omega(*_f(xi, x1, x2)), M)


def n1_0(xi, x1, x2, M=1.0, smooth=False):
    """First boundary term: ``n1 / (i Omega)`` on ``|Omega| > M``."""
    xi, x1, x2 = _f(xi, x1, x2)
    w = sigma(xi, x1, x2, M, smooth) * _gt(Omega(xi, x1, x2), M)
    return -2.0 * _ratio(xi * x2, x1 * Omega(xi, x1, x2), w) + 0j


def e_term(xi, x1, x2, M=0.0, smooth=False):
    """Fourier form of ``-2 P+ P_lo dx[f P- dx g]`` in torus mode."""
    xi, x1, x2 = _f(xi, x1, x2)
    w = (xi > 0) * (np.abs(xi) <= 1) * neg(x2)
    return 2.0 * xi * x2 * w + 0j


# ---------------------------------------------------------------------------
# second step (trilinear)


def m2_1(xi, x1, x2, x3, M=1.0, smooth=False):
    xi, x1, x2, x3 = _f(xi, x1, x2, x3)
    x12 = x1 + x2
    w = (
        _gt(Omega(xi, x12, x3), M) * _gt(omega2(1, xi, x1, x2, x3), M)
        * chi(xi, smooth) * chi(x1, smooth) * chi(x12, smooth) ** 2 * neg(x2) * neg(x3)
    )
    return -2j * _ratio(x2, x1, w)


def _bold_n22(xi, x1, x2, x3, M, smooth):
    """Weight of ``i xi_23 / xi_1`` before the region split."""
    x23 = x2 + x3
    return chi(xi, smooth) * chi(x1, smooth) * neg(x23) * _gt(Omega(xi, x1, x23), M)


def _low_region(xi, x1, x2, x3, M):
    """Near-resonant region, symmetric under ``xi_2 <-> xi_3``.

    On the branches with ``xi_3 < 0 <= xi_2`` the low-frequency condition is
    placed on ``xi_13`` (the mirror of ``xi_12``), so that the two mixed-sign
    branches contribute equally.
    """
    b = (x2 >= 0) & (x3 < 0)
    low = np.where(b, np.abs(x1 + x3) <= 1, np.abs(x1 + x2) <= 1)
    return ((np.abs(omega2(2, xi, x1, x2, x3)) <= M) | low).astype(float)


def m2_2(xi, x1, x2, x3, M=1.0, smooth=False):
    xi, x1, x2, x3 = _f(xi, x1, x2, x3)
    w = (
        _bold_n22(xi, x1, x2, x3, M, smooth) * neg(x2) * neg(x3)
        * _gt(omega2(2, xi, x1, x2, x3), M) * _gt(x1 + x2, 1)
    )
    return 1j * _ratio(x2 + x3, x1, w)


def m2_3(xi, x1, x2, x3, M=1.0, smooth=False):
    xi, x1, x2, x3 = _f(xi, x1, x2, x3)
    w = (
        _bold_n22(xi, x1, x2, x3, M, smooth) * neg(x2) * nonneg(x3)
        * _gt(omega2(3, xi, x1, x2, x3), M) * _gt(x1 + x2, 1)
    )
    return 1j * _ratio(x2 + x3, x1, w)


def m2_le(xi, x1, x2, x3, M=1.0, smooth=False):
    xi, x1, x2, x3 = _f(xi, x1, x2, x3)
    w = _bold_n22(xi, x1, x2, x3, M, smooth) * _low_region(xi, x1, x2, x3, M)
    return 1j * _ratio(x2 + x3, x1, w)


def bold_n22(xi, x1, x2, x3, M=1.0, smooth=False):
    """Unsplit ``i xi_23/xi_1`` term coming from the ``u``-derivative."""
    xi, x1, x2, x3 = _f(xi, x1, x2, x3)
    return 1j * _ratio(x2 + x3, x1, _bold_n22(xi, x1, x2, x3, M, smooth))


M2 = {1: m2_1, 2: m2_2, 3: m2_3}


def n2_0(j: int):
    """Second-step boundary multiplier ``m2_j / (i Omega2_j)``."""
    m = M2[j]

    def kern(xi, x1, x2, x3, M=1.0, smooth=False):
        xi, x1, x2, x3 = _f(xi, x1, x2, x3)
        mv = m(xi, x1, x2, x3, M, smooth)
        return _ratio(mv, 1j * omega2(j, xi, x1, x2, x3), mv != 0)

    kern.__name__ = f"n2_{j}0"
    return kern


# ---------------------------------------------------------------------------
# third step (quadrilinear), compositional form


def m3_compositional(j: int, k: int):
    m = M2[j]

    def kern(xi, x1, x2, x3, x4, M=1.0, smooth=False):
        xi, x1, x2, x3, x4 = _f(xi, x1, x2, x3, x4)
        if k == 1:
            x12 = x1 + x2
            mv = m(xi, x12, x3, x4, M, smooth)
            inner = x12 * x2 / np.where(x1 != 0, x1, 1.0) * chi(x12, smooth) * chi(x1, smooth) * neg(x2)
            return -2.0 * _ratio(mv, omega2(j, xi, x12, x3, x4), mv != 0) * inner
        if k == 2:
            x23 = x2 + x3
            mv = m(xi, x1, x23, x4, M, smooth)
            return _ratio(mv, omega2(j, xi, x1, x23, x4), mv != 0) * x23
        x34 = x3 + x4
        mv = m(xi, x1, x2, x34, M, smooth)
        return _ratio(mv, omega2(j, xi, x1, x2, x34), mv != 0) * x34

    kern.__name__ = f"m3_{j}{k}"
    return kern


# ---------------------------------------------------------------------------
# third step, expanded closed forms


def _expanded_33(xi, x1, x2, x3, x4, M, smooth):
    x12, x34, x234 = x1 + x2, x3 + x4, x2 + x3 + x4
    w = (
        _gt(xi * x234, M / 2) * _gt(x12 * x234, M / 2) * _gt(x12, 1)
        * chi(xi, smooth) * chi(x1, smooth) * neg(x2) * neg(x234) * nonneg(x34)
    )
    return 0.5j * _ratio(x34, x1 * x12, w)


def _expanded_23(xi, x1, x2, x3, x4, M, smooth):
    x12, x34, x234 = x1 + x2, x3 + x4, x2 + x3 + x4
    den = xi * x234 - x2 * x34
    w = (
        _gt(xi * x234, M / 2) * _gt(den, M / 2) * _gt(x12, 1)
        * chi(xi, smooth) * chi(x1, smooth) * neg(x2) * neg(x34)
    )
    return 0.5j * _ratio(x234 * x34, x1 * den, w)


def _expanded_13(xi, x1, x2, x3, x4, M, smooth):
    x12, x34 = x1 + x2, x3 + x4
    den = xi * x34 + x12 * x2
    w = (
        chi(xi, smooth) * chi(x1, smooth) * chi(x12, smooth) ** 2 * neg(x2) * neg(x34)
        * _gt(xi * x34, M / 2) * _gt(den, M / 2)
    )
    return -1j * _ratio(x2 * x34, x1 * den, w)


def _expanded_32(xi, x1, x2, x3, x4, M, smooth):
    x23, x123, x234 = x2 + x3, x1 + x2 + x3, x2 + x3 + x4
    w = (
        chi(xi, smooth) * chi(x1, smooth) * neg(x23) * neg(x234) * nonneg(x4)
        * _gt(x123, 1) * _gt(xi * x234, M / 2) * _gt(x123 * x234, M / 2)
    )
    return 0.5j * _ratio(x23, x1 * x123, w)


def _expanded_22(xi, x1, x2, x3, x4, M, smooth):
    x23, x123, x234 = x2 + x3, x1 + x2 + x3, x2 + x3 + x4
    den = xi * x234 - x23 * x4
    w = (
        chi(xi, smooth) * chi(x1, smooth) * neg(x23) * neg(x4)
        * _gt(x123, 1) * _gt(xi * x234, M / 2) * _gt(den, M / 2)
    )
    return 0.5j * _ratio(x23 * x234, x1 * den, w)


def _expanded_12(xi, x1, x2, x3, x4, M, smooth):
    x23, x123 = x2 + x3, x1 + x2 + x3
    den = xi * x4 + x123 * x23
    w = (
        chi(xi, smooth) * chi(x1, smooth) * chi(x123, smooth) ** 2 * neg(x23) * neg(x4)
        * _gt(xi * x4, M / 2) * _gt(den, M / 2)
    )
    return -1j * _ratio(x23 * x23, x1 * den, w)


def _expanded_31(xi, x1, x2, x3, x4, M, smooth):
    x12, x34, x123 = x1 + x2, x3 + x4, x1 + x2 + x3
    w = (
        chi(xi, smooth) * chi(x1, smooth) * chi(x12, smooth) ** 2
        * neg(x2) * neg(x3) * nonneg(x4) * neg(x34)
        * _gt(x123, 1) * _gt(xi * x34, M / 2) * _gt(x123 * x34, M / 2)
    )
    return -1j * _ratio(x2, x1 * x123, w)


def _expanded_21(xi, x1, x2, x3, x4, M, smooth):
    x12, x34, x123 = x1 + x2, x3 + x4, x1 + x2 + x3
    den = xi * x34 - x3 * x4
    w = (
        chi(xi, smooth) * chi(x1, smooth) * chi(x12, smooth) ** 2
        * neg(x2) * neg(x3) * neg(x4)
        * _gt(x123, 1) * _gt(xi * x34, M / 2) * _gt(den, M / 2)
    )
    return -1j * _ratio(x2 * x34, x1 * den, w)


def _expanded_11(xi, x1, x2, x3, x4, M, smooth):
    x12, x123 = x1 + x2, x1 + x2 + x3
    den = xi * x4 + x123 * x3
    w = (
        chi(xi, smooth) * chi(x1, smooth) * chi(x12, smooth) ** 2 * chi(x123, smooth) ** 2
        * neg(x2) * neg(x3) * neg(x4)
        * _gt(xi * x4, M / 2) * _gt(den, M / 2)
    )
    return 2j * _ratio(x3 * x2, x1 * den, w)


_EXPANDED = {
    (3, 3): _expanded_33, (2, 3): _expanded_23, (1, 3): _expanded_13,
    (3, 2): _expanded_32, (2, 2): _expanded_22, (1, 2): _expanded_12,
    (3, 1): _expanded_31, (2, 1): _expanded_21, (1, 1): _expanded_11,
}


def m3_expanded(j: int, k: int):
    f = _EXPANDED[(j, k)]

    def kern(xi, x1, x2, x3, x4, M=1.0, smooth=False):
        return f(*_f(xi, x1, x2, x3, x4), M, smooth) + 0j

    kern.__name__ = f"m3_{j}{k}_expanded"
    return kern


# ---------------------------------------------------------------------------
# registry

# name -> (kernel, arity, divides by a phase)
MULTIPLIERS: dict = {
    "sigma": (sigma, 2, False),
    "N1": (n1, 2, False),
    "N1_leM": (n1_le, 2, False),
    "N1_gtM": (n1_gt, 2, False),
    "N1_0": (n1_0, 2, True),
    "E": (e_term, 2, False),
    "m2_1": (m2_1, 3, False),
    "m2_2": (m2_2, 3, False),
    "m2_3": (m2_3, 3, False),
    "m2_leM": (m2_le, 3, False),
    "bold_N2_2": (bold_n22, 3, False),
}
for _j in (1, 2, 3):
    MULTIPLIERS[f"N2_{_j}0"] = (n2_0(_j), 3, True)
    for _k in (1, 2, 3):
        MULTIPLIERS[f"m3_{_j}{_k}"] = (m3_compositional(_j, _k), 4, True)
        MULTIPLIERS[f"m3_{_j}{_k}_expanded"] = (m3_expanded(_j, _k), 4, True)


def multiplier_value(name: str, freqs, M: float = 1.0, smooth: bool = False) -> complex:
    """Evaluate one multiplier at ``freqs = (xi, xi_1, ..., xi_k)``."""
    if name not in MULTIPLIERS:
        raise ParameterError(f"unknown multiplier {name!r}")
    kern, arity, divides = MULTIPLIERS[name]
    if len(freqs) != arity + 1:
        raise ParameterError(f"{name} takes {arity + 1} frequencies (xi first), got {len(freqs)}")
    if freqs[0] != sum(freqs[1:]):
        raise ParameterError(f"frequencies {tuple(freqs)} are off the convolution hyperplane")
    if divides and M < 1:
        raise ParameterError(f"{name} divides by a phase and needs M >= 1, got {M}")
    return complex(kern(*freqs, M=M, smooth=smooth))
