"""Resonance functions.

``omega(xi) = xi |xi|`` is the Benjamin-Ono dispersion relation.  The
compositions below are written literally as nested two-wave phases; on the
convolution hyperplane every one of them telescopes to
``omega(xi) - sum omega(xi_i)``.  Integer inputs stay integer, so the
identities can be checked exactly.
"""

from __future__ import annotations

import numpy as np


def omega(xi):
    return xi * np.abs(xi)


def Omega(xi, x1, x2):
    return omega(xi) - omega(x1) - omega(x2)


def omega2(j: int, xi, x1, x2, x3):
    """Second-step phases.  ``j = 2`` and ``j = 3`` share one composition;
    they differ only in the sign branch where they are used."""
    if j == 1:
        return Omega(xi, x1 + x2, x3) + Omega(x1 + x2, x1, x2)
    if j in (2, 3):
        return Omega(xi, x1, x2 + x3) + Omega(x2 + x3, x2, x3)
    raise ValueError(f"j must be 1, 2 or 3, got {j}")


def omega3(j: int, k: int, xi, x1, x2, x3, x4):
    if k == 1:
        return omega2(j, xi, x1 + x2, x3, x4) + Omega(x1 + x2, x1, x2)
    if k == 2:
        return omega2(j, xi, x1, x2 + x3, x4) + Omega(x2 + x3, x2, x3)
    if k == 3:
        return omega2(j, xi, x1, x2, x3 + x4) + Omega(x3 + x4, x3, x4)
    raise ValueError(f"k must be 1, 2 or 3, got {k}")


def total_phase(xi, *xs):
    """``omega(xi) - sum omega(x_i)``; equals every composition above."""
    out = omega(xi)
    for x in xs:
        out = out - omega(x)
    return out


# factorized forms, valid only on the supports noted


def omega_factored(xi, x1, x2):
    """``2 xi xi_2`` on ``xi > 0, xi_1 > 0, xi_2 < 0``."""
    return 2 * xi * x2


def omega2_factored(j: int, xi, x1, x2, x3):
    if j == 1:  # xi, xi_1, xi_12 > 0 and xi_2, xi_3 < 0
        return 2 * xi * x3 + 2 * (x1 + x2) * x2
    if j == 2:  # xi, xi_1 > 0 and xi_2, xi_3 < 0
        return 2 * xi * (x2 + x3) - 2 * x2 * x3
    if j == 3:  # xi, xi_1 > 0, xi_2 < 0 <= xi_3, xi_23 < 0
        return 2 * (x1 + x2) * (x2 + x3)
    raise ValueError(f"j must be 1, 2 or 3, got {j}")


def omega_branch(x2, x3):
    """``Omega(xi_23, xi_2, xi_3)`` for ``xi_23 < 0`` by sign branch."""
    x23 = x2 + x3
    return np.where(
        (x2 < 0) & (x3 < 0), -2 * x2 * x3,
        np.where(x3 < 0, -2 * x2 * x23, -2 * x3 * x23),
    )
