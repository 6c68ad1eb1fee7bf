"""Multilinear operators of the normal form and their evaluation.

``eval_term`` computes, for every output frequency ``xi`` on the grid,

    sum over (xi_1, ..., xi_k) with xi_1 + ... + xi_k = xi of
        exp(i t Phi) m(xi, xi_1, ..., xi_k) v_1(xi_1) ... v_k(xi_k)

where ``Phi = omega(xi) - sum omega(xi_i)`` over the twisted slots.  Input
frequencies range over the grid band ``|n| <= N/2 - 1``; intermediate sums
are unrestricted.

Two evaluation routes are provided.  ``direct`` walks a precomputed sparse
list of all contributing tuples and accumulates with ``np.bincount`` in a
fixed order.  ``grouped`` applies to the quartic terms, whose multipliers
depend on a pair of slots only through their sum (or, for ``k = 1``, through
a product of a pair factor and a sum factor): the pair is contracted first
into one auxiliary sequence and the remaining sum is trilinear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spectral import Grid, ParameterError, SpectralField
from .multipliers import M2, MULTIPLIERS, chi, neg
from .phases import omega, omega2


@dataclass(frozen=True)
class NormalFormTermId:
    tag: str
    multiplier: str
    roles: tuple
    twisted: tuple  # per slot: is the field a twisted (interaction) variable
    boundary: bool = False

    @property
    def arity(self) -> int:
        return len(self.roles)

    @property
    def divides(self) -> bool:
        return MULTIPLIERS[self.multiplier][2]


def _make_terms():
    G, U, E, X = "gauge", "solution", "negligible", "exponential"
    terms = [
        NormalFormTermId("N1", "N1", (G, U), (True, True)),
        NormalFormTermId("N1_leM", "N1_leM", (G, U), (True, True)),
        NormalFormTermId("N1_gtM", "N1_gtM", (G, U), (True, True)),
        NormalFormTermId("N1_0", "N1_0", (G, U), (True, True), boundary=True),
        NormalFormTermId("E_term", "E", (X, U), (False, True)),
        NormalFormTermId("N1_0_of_E", "N1_0", (E, U), (True, True)),
        NormalFormTermId("N2_leM", "m2_leM", (G, U, U), (True,) * 3),
        NormalFormTermId("bold_N2_2", "bold_N2_2", (G, U, U), (True,) * 3),
    ]
    for j in (1, 2, 3):
        terms.append(NormalFormTermId(f"N2_{j}", f"m2_{j}", (G, U, U), (True,) * 3))
        terms.append(NormalFormTermId(f"N2_{j}0", f"N2_{j}0", (G, U, U), (True,) * 3, boundary=True))
        terms.append(NormalFormTermId(f"N2_{j}0_of_E", f"N2_{j}0", (E, U, U), (True,) * 3))
        for k in (1, 2, 3):
            terms.append(NormalFormTermId(f"N3_{j}{k}", f"m3_{j}{k}", (G, U, U, U), (True,) * 4))
    return {t.tag: t for t in terms}


TERMS: dict[str, NormalFormTermId] = _make_terms()


def get_term(term) -> NormalFormTermId:
    if isinstance(term, NormalFormTermId):
        return term
    if term not in TERMS:
        raise ParameterError(f"unknown normal-form term {term!r}")
    return TERMS[term]


# ---------------------------------------------------------------------------
# twisting


def twist_gauge(w: SpectralField, t: float) -> SpectralField:
    """``exp(-i t dx^2) w``: symbol ``exp(i k^2 t)``."""
    return w.replace(w.coeffs * np.exp(1j * w.grid.k**2 * t), real=False)


def untwist_gauge(wt: SpectralField, t: float) -> SpectralField:
    return wt.replace(wt.coeffs * np.exp(-1j * wt.grid.k**2 * t), real=False)


def twist_solution(u: SpectralField, t: float) -> SpectralField:
    """``exp(t H dx^2) u``: symbol ``exp(i k|k| t)``."""
    return u.replace(u.coeffs * np.exp(1j * omega(u.grid.k) * t))


def untwist_solution(ut: SpectralField, t: float) -> SpectralField:
    return ut.replace(ut.coeffs * np.exp(-1j * omega(ut.grid.k) * t))


# ---------------------------------------------------------------------------
# sparse stencils


@dataclass
class Stencil:
    idx: tuple  # per slot: positions in the slot's index range
    out: np.ndarray  # FFT index of the output frequency
    mult: np.ndarray
    phase: np.ndarray

    @property
    def size(self) -> int:
        return len(self.out)


_CACHE: dict = {}


def _band(grid: Grid) -> np.ndarray:
    m = grid.max_mode
    return np.arange(-m, m + 1)


def _build(kernel, ranges, grid: Grid, M, smooth, twisted, chunk=400_000) -> Stencil:
    """Enumerate the product of integer ``ranges``, keep tuples whose sum is
    on the grid band and whose multiplier is nonzero."""
    nmax, scale = grid.max_mode, grid.scale
    sizes = [len(r) for r in ranges]
    total = int(np.prod(sizes))
    pieces = []
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        pos = np.unravel_index(flat, sizes)
        ns = [r[p] for r, p in zip(ranges, pos)]
        nsum = sum(ns)
        keep = np.abs(nsum) <= nmax
        if not keep.any():
            continue
        ns = [n[keep] for n in ns]
        pos = [p[keep] for p in pos]
        nsum = nsum[keep]
        ks = [n * scale for n in ns]
        xi = nsum * scale
        m = kernel(xi, *ks, M=M, smooth=smooth)
        nz = m != 0
        if not nz.any():
            continue
        phase = omega(xi[nz]).astype(float)
        for kk, tw in zip(ks, twisted):
            if tw:
                phase = phase - omega(kk[nz])
        pieces.append(([p[nz] for p in pos], nsum[nz] % grid.num_modes, m[nz], phase))
    if not pieces:
        e = np.zeros(0, dtype=np.int64)
        return Stencil(tuple(e for _ in ranges), e, np.zeros(0, complex), np.zeros(0))
    idx = tuple(np.concatenate([pc[0][i] for pc in pieces]) for i in range(len(ranges)))
    return Stencil(
        idx,
        np.concatenate([pc[1] for pc in pieces]),
        np.concatenate([pc[2] for pc in pieces]).astype(complex),
        np.concatenate([pc[3] for pc in pieces]),
    )


def stencil(term, grid: Grid, M: float, smooth: bool = False) -> Stencil:
    term = get_term(term)
    key = ("direct", term.multiplier, term.twisted, grid.num_modes, grid.period, float(M), smooth)
    if key not in _CACHE:
        kernel = MULTIPLIERS[term.multiplier][0]
        band = _band(grid)
        _CACHE[key] = _build(kernel, [band] * term.arity, grid, M, smooth, term.twisted)
    return _CACHE[key]


def clear_cache():
    _CACHE.clear()


def _accumulate(st: Stencil, slot_values, grid: Grid, t: float) -> np.ndarray:
    prod = st.mult * np.exp(1j * t * st.phase) if t != 0 else st.mult.copy()
    for vals, idx in zip(slot_values, st.idx):
        prod = prod * vals[idx]
    N = grid.num_modes
    return np.bincount(st.out, weights=prod.real, minlength=N) + 1j * np.bincount(
        st.out, weights=prod.imag, minlength=N
    )


def _check(term: NormalFormTermId, fields, M):
    if len(fields) != term.arity:
        raise ParameterError(f"{term.tag} takes {term.arity} fields, got {len(fields)}")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ParameterError("fields live on different grids")
    if term.divides and M < 1:
        raise ParameterError(f"{term.tag} divides by a phase and needs M >= 1, got {M}")
    return grid


def eval_term(term, fields, t: float = 0.0, M: float = 1.0, path: str = "direct",
              smooth: bool = False) -> SpectralField:
    """Evaluate a normal-form term on (twisted) fields at time ``t``."""
    term = get_term(term)
    grid = _check(term, fields, M)
    if path == "grouped" and term.tag.startswith("N3_"):
        return _eval_grouped(term, fields, t, M, smooth)
    if path not in ("direct", "grouped"):
        raise ParameterError(f"unknown evaluation path {path!r}")
    band_idx = _band(grid) % grid.num_modes
    st = stencil(term, grid, M, smooth)
    out = _accumulate(st, [f.coeffs[band_idx] for f in fields], grid, t)
    return SpectralField(grid, out, real=False)


BOUNDARY_TAGS = ("N1_0", "N2_10", "N2_20", "N2_30")


def boundary_term(term, fields, t: float, M: float, path: str = "direct") -> SpectralField:
    term = get_term(term)
    if term.tag not in BOUNDARY_TAGS:
        raise ParameterError(f"{term.tag} is not a boundary term")
    if M < 1:
        raise ParameterError(f"boundary terms need M >= 1, got {M}")
    return eval_term(term, fields, t, M, path)


# ---------------------------------------------------------------------------
# grouped evaluation of the quartic terms


def _reduced_kernel(j: int, k: int):
    m = M2[j]

    def kern(xi, a, b, c, M=1.0, smooth=False):
        if k == 1:  # (eta, xi_3, xi_4), eta = xi_12
            mv = m(xi, a, b, c, M, smooth)
            return -2.0 * np.where(mv != 0, mv / np.where(mv != 0, omega2(j, xi, a, b, c), 1), 0) * a * chi(a, smooth)
        if k == 2:  # (xi_1, eta, xi_4), eta = xi_23
            mv = m(xi, a, b, c, M, smooth)
            return np.where(mv != 0, mv / np.where(mv != 0, omega2(j, xi, a, b, c), 1), 0) * b
        mv = m(xi, a, b, c, M, smooth)  # (xi_1, xi_2, eta), eta = xi_34
        return np.where(mv != 0, mv / np.where(mv != 0, omega2(j, xi, a, b, c), 1), 0) * c

    return kern


def _grouped_stencil(j, k, grid, M, smooth) -> Stencil:
    key = ("grouped", j, k, grid.num_modes, grid.period, float(M), smooth)
    if key not in _CACHE:
        band = _band(grid)
        ext = np.arange(-2 * grid.max_mode, 2 * grid.max_mode + 1)
        ranges = {1: [ext, band, band], 2: [band, ext, band], 3: [band, band, ext]}[k]
        # phases are applied after untwisting, so none are stored
        _CACHE[key] = _build(_reduced_kernel(j, k), ranges, grid, M, smooth, (False,) * 3)
    return _CACHE[key]


def _eval_grouped(term, fields, t, M, smooth) -> SpectralField:
    grid = fields[0].grid
    j, k = int(term.tag[3]), int(term.tag[4])
    band = _band(grid)
    kk = band * grid.scale
    bidx = band % grid.num_modes
    v = [f.coeffs[bidx] * np.exp(-1j * omega(kk) * t) for f in fields]
    if k == 1:
        a = np.where(kk != 0, v[0] * chi(kk, smooth) / np.where(kk != 0, kk, 1.0), 0.0)
        b = v[1] * neg(kk) * kk
        slots = [np.convolve(a, b), v[2], v[3]]
    elif k == 2:
        slots = [v[0], np.convolve(v[1], v[2]), v[3]]
    else:
        slots = [v[0], v[1], np.convolve(v[2], v[3])]
    st = _grouped_stencil(j, k, grid, M, smooth)
    out = _accumulate(st, slots, grid, 0.0)
    out = out * np.exp(1j * omega(grid.k) * t)
    return SpectralField(grid, out, real=False)
