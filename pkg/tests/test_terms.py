import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bolab.gauge import gauge_forward
from bolab.normalform.multipliers import multiplier_value
from bolab.normalform.phases import omega
from bolab.normalform.terms import (
    TERMS,
    boundary_term,
    eval_term,
    get_term,
    stencil,
    twist_gauge,
    twist_solution,
    untwist_gauge,
    untwist_solution,
)
from bolab.spectral import Grid, ParameterError, SpectralField, sobolev_norm

from conftest import random_field


def complex_field(grid, rng, decay=0.2):
    c = np.exp(-decay * np.abs(grid.n)) * (rng.normal(size=grid.num_modes) + 1j * rng.normal(size=grid.num_modes))
    return SpectralField(grid, c, real=False)


def brute_force(tag, fields, t, M):
    """Loop over every tuple in the band and call the scalar multiplier."""
    term = get_term(tag)
    grid = fields[0].grid
    m = grid.max_mode
    out = np.zeros(grid.num_modes, complex)
    for ns in itertools.product(range(-m, m + 1), repeat=term.arity):
        xi = sum(ns)
        if abs(xi) > m:
            continue
        val = multiplier_value(term.multiplier, (xi,) + ns, M=M)
        if val == 0:
            continue
        phase = omega(xi) - sum(omega(n) for n, tw in zip(ns, term.twisted) if tw)
        prod = val * np.exp(1j * t * phase)
        for f, n in zip(fields, ns):
            prod *= f.coeffs[n % grid.num_modes]
        out[xi % grid.num_modes] += prod
    return out


@pytest.mark.parametrize("tag", ["N1", "N1_leM", "N1_0", "E_term", "N2_leM", "N2_10", "N2_30", "bold_N2_2"])
def test_sparse_sum_matches_brute_force(tag, rng):
    g = Grid(16)
    fields = [complex_field(g, rng) for _ in range(get_term(tag).arity)]
    got = eval_term(tag, fields, t=0.37, M=4.0)
    assert np.allclose(got.coeffs, brute_force(tag, fields, 0.37, 4.0), atol=1e-13)


def test_quartic_matches_brute_force(rng):
    g = Grid(8)
    fields = [complex_field(g, rng) for _ in range(4)]
    for tag in ("N3_11", "N3_23", "N3_33"):
        got = eval_term(tag, fields, t=0.2, M=1.0)
        assert np.allclose(got.coeffs, brute_force(tag, fields, 0.2, 1.0), atol=1e-13)


def physical_gauge_nonlinearity(w: SpectralField, u: SpectralField, size=1024):
    """-2 P+ dx[ dx^{-1} w * P- dx u ] from dense samples."""
    g = w.grid
    N = g.num_modes
    h = N // 2

    def synth(c):
        return np.fft.ifft(np.concatenate([c[:h], np.zeros(size - N, complex), c[h:]])) * size

    W = np.where(g.k > 0, w.coeffs / np.where(g.k == 0, 1, 1j * g.k), 0)
    du = np.where(g.k < 0, 1j * g.k * u.coeffs, 0)
    prod = np.fft.fft(synth(W) * synth(du)) / size
    pc = np.concatenate([prod[:h], prod[size - h:]])
    out = np.where(g.k > 0, -2j * g.k * pc, 0)
    out[h] = 0
    return out


def test_quadratic_term_matches_physical_nonlinearity():
    g = Grid(64)
    u = random_field(g, np.random.default_rng(5), decay=0.4, top=8)
    s = gauge_forward(u)
    ref = physical_gauge_nonlinearity(s.w, u)
    got = eval_term("N1", [s.w, u]).coeffs + eval_term("E_term", [s.expf, u]).coeffs
    assert np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(ref)
    # away from mode one the unsplit quadratic term alone carries everything
    off = g.n != 1
    assert np.allclose(eval_term("N1", [s.w, u]).coeffs[off], ref[off], atol=1e-12)


@pytest.mark.parametrize("j,k", [(j, k) for j in (1, 2, 3) for k in (1, 2, 3)])
def test_grouped_matches_direct(j, k, rng):
    g = Grid(32)
    fields = [complex_field(g, rng, 0.3) for _ in range(4)]
    d = eval_term(f"N3_{j}{k}", fields, t=0.13, M=4.0)
    r = eval_term(f"N3_{j}{k}", fields, t=0.13, M=4.0, path="grouped")
    assert np.linalg.norm(d.coeffs - r.coeffs) <= 1e-10 * max(np.linalg.norm(d.coeffs), 1e-300)


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.sampled_from(["N1_leM", "N2_20", "N2_leM"]), st.integers(0, 2))
def test_multilinear_in_each_slot(seed, tag, slot):
    rng = np.random.default_rng(seed)
    g = Grid(16)
    arity = get_term(tag).arity
    slot = slot % arity
    fields = [complex_field(g, rng) for _ in range(arity)]
    a, b = complex_field(g, rng), complex_field(g, rng)
    z = complex(rng.normal(), rng.normal())

    def with_slot(f):
        fs = list(fields)
        fs[slot] = f
        return eval_term(tag, fs, t=0.5, M=2.0).coeffs

    lhs = with_slot(SpectralField(g, a.coeffs * z + b.coeffs, False))
    rhs = z * with_slot(a) + with_slot(b)
    assert np.allclose(lhs, rhs, atol=1e-11)


@given(st.floats(-3, 3), st.integers(0, 1000))
def test_twists_invert(t, seed):
    rng = np.random.default_rng(seed)
    g = Grid(16, 5.0)
    f = random_field(g, rng)
    assert np.allclose(untwist_gauge(twist_gauge(f, t), t).coeffs, f.coeffs, atol=1e-14)
    assert np.allclose(untwist_solution(twist_solution(f, t), t).coeffs, f.coeffs, atol=1e-14)
    assert twist_solution(f, t).real
    assert sobolev_norm(twist_gauge(f, t), 0.0) == pytest.approx(sobolev_norm(f, 0.0))


def test_argument_errors(rng):
    g = Grid(16)
    f = complex_field(g, rng)
    with pytest.raises(ParameterError):
        get_term("N9")
    with pytest.raises(ParameterError):
        eval_term("N1", [f])
    with pytest.raises(ParameterError):
        eval_term("N1_0", [f, f], M=0.5)
    with pytest.raises(ParameterError):
        eval_term("N1", [f, complex_field(Grid(32), rng)])
    with pytest.raises(ParameterError):
        eval_term("N1", [f, f], path="fast")
    with pytest.raises(ParameterError):
        boundary_term("N1", [f, f], 0.0, 2.0)
    with pytest.raises(ParameterError):
        boundary_term("N1_0", [f, f], 0.0, 0.5)


def test_boundary_terms_flagged():
    tags = {t for t, term in TERMS.items() if term.boundary}
    assert tags == {"N1_0", "N2_10", "N2_20", "N2_30"}


def test_stencil_is_cached():
    g = Grid(16)
    assert stencil("N1", g, 1.0) is stencil("N1", g, 1.0)
    assert stencil("N1", g, 1.0).size > 0
