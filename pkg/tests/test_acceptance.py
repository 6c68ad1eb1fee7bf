"""One test per acceptance criterion, at the stated tolerances.

Each test prints a single ``criterion NN: PASS/FAIL`` line; the lines are
collected again in the terminal summary.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from bolab.experiments import InitialData, alpha, beta, regularity_gate, smoothing_scan
from bolab.gauge import gauge_forward, reconstruct_u, residual_order
from bolab.normalform.lattice import _scan_additivity, _scan_sigma, verify_lattice
from bolab.normalform.residual import normalform_residual
from bolab.normalform.terms import eval_term
from bolab.solver import SolverConfig, conservation_diagnostics, evolve, evolve_with_forcing
from bolab.spectral import (
    Grid,
    dyadic_scales,
    from_physical,
    hilbert,
    low_pass,
    lp_band,
    riesz_minus,
    riesz_plus,
    sobolev_norm,
    to_physical,
    zero_mode,
)

from conftest import random_field
from test_terms import complex_field, physical_gauge_nonlinearity

pytestmark = pytest.mark.acceptance


def test_01_spectral_identities(acceptance):
    t0 = time.perf_counter()
    exact, worst = True, 0.0
    rng = np.random.default_rng(1)
    for N in (8, 16, 32, 64, 128, 256, 1024):
        for period in (2 * np.pi, 1.0, 7.5):
            g = Grid(N, period)
            k = g.k
            exact &= np.array_equal(riesz_plus()(k) + riesz_minus()(k) + zero_mode()(k), np.ones(N))
            exact &= np.array_equal(hilbert()(k), -1j * riesz_plus()(k) + 1j * riesz_minus()(k))
            total = low_pass()(k)
            for K in dyadic_scales(g):
                total = total + lp_band(K)(k)
            exact &= np.array_equal(total[np.abs(g.n) <= max(dyadic_scales(g))],
                                    np.ones(int(np.sum(np.abs(g.n) <= max(dyadic_scales(g))))))
            f = random_field(g, rng, decay=0.05, mean=0.4)
            worst = max(worst, np.max(np.abs(from_physical(to_physical(f), g).coeffs - f.coeffs)))
    elapsed = time.perf_counter() - t0
    ok = bool(exact) and worst <= 1e-13 and elapsed < 5
    acceptance(1, ok, f"partitions exact={bool(exact)}, round trip {worst:.1e} (<= 1e-13), {elapsed:.2f} s (< 5 s)")
    assert ok


def test_02_resonance_factorization(acceptance):
    _scan_sigma(8)  # compile outside the timed region
    t0 = time.perf_counter()
    sup, bad = _scan_sigma(256)
    elapsed = time.perf_counter() - t0
    ok = int(bad.sum()) == 0 and int(sup.sum()) > 0 and elapsed < 30
    acceptance(2, ok, f"{int(sup.sum())} support points, {int(bad.sum())} violations, {elapsed:.2f} s (< 30 s)")
    assert ok


def test_03_phase_additivity(acceptance):
    _scan_additivity(4)
    t0 = time.perf_counter()
    b2, b3 = _scan_additivity(64)
    elapsed = time.perf_counter() - t0
    ok = int(b2.sum()) == 0 and int(b3.sum()) == 0 and elapsed < 60
    acceptance(3, ok, f"{int(b2.sum())} + {int(b3.sum())} violations over |xi| <= 64, {elapsed:.2f} s (< 60 s)")
    assert ok


def test_04_multiplier_consistency(acceptance):
    fams = {"sigma": 8, "additivity": 8, "factorization": 8, "constants": 16}
    bad, worst = [], 0.0
    for M in (1.0, 16.0):
        rep = verify_lattice(32, M=M, limits=fams)
        bad += [f"M={M:g}:{n}" for n, c in rep.checks.items() if c.violation_count]
        worst = max([worst] + [c.max_error for n, c in rep.checks.items() if n.endswith("_forms")])
    ok = not bad and worst <= 1e-12
    acceptance(4, ok, f"forms max rel err {worst:.1e} (<= 1e-12), support violations {bad or 'none'}, |xi| <= 32")
    assert ok


def test_05_convolution_oracle(acceptance):
    g = Grid(64)
    u = random_field(g, np.random.default_rng(5), decay=0.4, top=8)
    u = u * (1.0 / sobolev_norm(u, 0.25))
    s = gauge_forward(u)
    ref = physical_gauge_nonlinearity(s.w, u)
    # the unsplit quadratic term plus its mode-one companion
    got = eval_term("N1", [s.w, u], 0.0).coeffs + eval_term("E_term", [s.expf, u], 0.0).coeffs
    rel_n1 = np.linalg.norm(got - ref) / np.linalg.norm(ref)

    g32 = Grid(32)
    rng = np.random.default_rng(6)
    fields = [complex_field(g32, rng, 0.3) for _ in range(4)]
    rel_grouped = {}
    for tag in ("N3_33", "N3_11", "N3_21", "N3_31"):
        d = eval_term(tag, fields, 0.0, 16.0).coeffs
        r = eval_term(tag, fields, 0.0, 16.0, path="grouped").coeffs
        rel_grouped[tag] = np.linalg.norm(d - r) / np.linalg.norm(d)
    ok = rel_n1 <= 1e-10 and max(rel_grouped.values()) <= 1e-10
    acceptance(5, ok, f"quadratic vs physical {rel_n1:.1e} (N=64), grouped vs direct max "
                      f"{max(rel_grouped.values()):.1e} (N=32), tol 1e-10")
    assert ok


def test_06_solver_order(acceptance):
    g = Grid(64)

    def forcing(t):
        x = g.x
        return from_physical(-np.exp(-t) * np.cos(x - t) + np.exp(-2 * t) * np.sin(2 * (x - t)), g)

    errs = []
    dts = (1e-2, 5e-3, 2.5e-3)
    for dt in dts:
        tr = evolve_with_forcing(from_physical(np.cos(g.x), g), forcing, SolverConfig(dt=dt, T=1.0),
                                 store_every=10**6)
        errs.append(sobolev_norm(tr.field(-1) - from_physical(np.exp(-1.0) * np.cos(g.x - 1.0), g), 0.0))
    errs = np.array(errs)
    orders = np.log2(errs[:-1] / errs[1:])
    ok = bool(np.all((orders >= 3.8) & (orders <= 4.2)))
    acceptance(6, ok, f"observed orders {np.round(orders, 3).tolist()} in [3.8, 4.2]")
    assert ok


def test_07_conservation(acceptance):
    g = Grid(256)
    u0 = random_field(g, np.random.default_rng(7), decay=0.5, top=20, mean=0.3)
    u0 = u0 * (1.0 / sobolev_norm(u0, 1.0))
    tr = evolve(u0, SolverConfig(T=1.0), store_every=50)
    d = conservation_diagnostics(tr)
    ok = d["mean_drift"] <= 1e-12 and d["l2_drift"] <= 1e-8 and tr.times[-1] == pytest.approx(1.0)
    acceptance(7, ok, f"mean drift {d['mean_drift']:.1e} (<= 1e-12), L2 drift {d['l2_drift']:.1e} (<= 1e-8), "
                      f"N=256, dt={tr.config.dt:.2e}")
    assert ok


def test_08_gauge_round_trip(acceptance):
    worst = 0.0
    for N in (32, 64, 128):
        for seed in range(5):
            # random phases on the band n <= N/16, where e^{-iF} is resolved to rounding
            u = random_field(Grid(N), np.random.default_rng(seed), decay=0.3, top=max(N // 16, 1))
            u = u * (1.0 / sobolev_norm(u, 0.25))
            s = gauge_forward(u)
            back = reconstruct_u(s.w, s.F)
            worst = max(worst, sobolev_norm(back - u, 0.0) / sobolev_norm(u, 0.0))
    ok = worst <= 1e-9
    acceptance(8, ok, f"max relative round-trip error {worst:.1e} (<= 1e-9), N in 32/64/128")
    assert ok


def test_09_gauge_equation_residual(acceptance):
    g = Grid(64)
    tr = evolve(from_physical(np.cos(g.x), g), SolverConfig(dt=1e-3, T=0.2))
    res = residual_order(tr, (8, 4, 2))
    ok = min(res["orders"]) >= 1.9
    acceptance(9, ok, f"orders {np.round(res['orders'], 3).tolist()} (>= 1.9), residuals "
                      f"{['%.1e' % r for r in res['residual']]}")
    assert ok


def test_10_normal_form_identity(acceptance):
    t0 = time.perf_counter()
    g = Grid(32)
    u0 = InitialData("smooth", seed=0, modes=4, norm_s=0.25, norm_value=0.1).build(g)
    T = 0.1
    # the identity is exact for the full-band Galerkin truncation
    tr = evolve(u0, SolverConfig(dt=T / 128, T=T, dealias="none"), store_every=8)
    rels = []
    for k in (4, 2, 1):
        rels.append(normalform_residual(tr.subsample(k), M=16.0, s=0.25).final_relative)
    elapsed = time.perf_counter() - t0
    decreasing = all(b < a for a, b in zip(rels, rels[1:]))
    ok = rels[-1] <= 1e-6 and decreasing and elapsed < 600
    acceptance(10, ok, f"relative residuals {['%.1e' % r for r in rels]} under refinement (last <= 1e-6), "
                       f"{elapsed:.1f} s (< 600 s)")
    assert ok


def test_11_smoothing_contrast(acceptance):
    spec = InitialData("rough", seed=0, s=0.25)
    rep = smoothing_scan(spec, 0.25, 0.125, 0.5, resolutions=(128, 256), stable_tol=0.1, growth=1.25)
    r = rep.summary["ratios"][0]
    gauge_ok = 0.9 <= r["gauge_ratio"] <= 1.1
    comp_ok = r["comparator_ratio"] > 1.25
    ok = gauge_ok and comp_ok
    acceptance(11, ok, f"gauge ratio {r['gauge_ratio']:.3f} in [0.9, 1.1]: {gauge_ok}; "
                       f"comparator ratio {r['comparator_ratio']:.3f} > 1.25: {comp_ok}")
    assert ok


def test_12_exponent_identities(acceptance):
    checks = []
    for s in [Fraction(0), Fraction(1, 7), Fraction(1, 5), Fraction(1, 4), Fraction(3, 31)]:
        checks.append(alpha(s, 4) == (3 - 10 * s) / 8)
        checks.append(alpha(s, 8) == (3 - 18 * s) / 16)
        checks.append(alpha(s, 12) == (3 - 26 * s) / 24)
        for p in (2, 3, 4, Fraction(7, 2)):
            checks.append(beta(s, p) == (Fraction(3, 2) - s) * (Fraction(1, 4) - 1 / (2 * Fraction(p))) - s)
        checks.append(all(isinstance(v, Fraction) for v in (alpha(s, 4), beta(s, 4))))
    gate = regularity_gate(Fraction(1, 7))
    ok = all(checks) and gate < 0 and gate == Fraction(-17, 196)
    acceptance(12, ok, f"{sum(checks)}/{len(checks)} rational identities, gate(1/7) = {gate}")
    assert ok
