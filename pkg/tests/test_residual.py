import numpy as np
import pytest

from bolab.experiments import InitialData
from bolab.normalform.residual import normalform_residual, twisted_samples
from bolab.solver import SolverConfig, Trajectory, evolve
from bolab.spectral import Grid, ParameterError, PreconditionError, from_physical, sobolev_norm


def small_trajectory(store_every, N=32, T=0.1, steps=128):
    g = Grid(N)
    u0 = InitialData("smooth", seed=0, modes=4, norm_s=0.25, norm_value=0.1).build(g)
    return evolve(u0, SolverConfig(dt=T / steps, T=T, dealias="none"), store_every=store_every)


@pytest.fixture(scope="module")
def residuals():
    return {k: normalform_residual(small_trajectory(k), M=16.0, s=0.25) for k in (32, 16)}


def test_residual_shrinks_with_quadrature(residuals):
    a, b = residuals[32], residuals[16]
    assert b.final_relative < a.final_relative / 8
    assert b.final_relative < 1e-5
    assert np.all(a.lhs_norm > 0)


def test_report_fields(residuals):
    r = residuals[16]
    assert r.times[-1] == pytest.approx(0.1)
    assert len(r.times) == len(r.residual) == len(r.relative)
    d = r.as_dict()
    assert d["M"] == 16.0 and d["path"] == "direct"
    assert "N3_33" in d["term_norms"]


def test_grouped_path_agrees(residuals):
    r = normalform_residual(small_trajectory(32), M=16.0, s=0.25, path="grouped")
    assert r.final_residual == pytest.approx(residuals[32].final_residual, rel=1e-6)


def test_twisted_gauge_starts_at_data():
    tr = small_trajectory(64)
    t, wt, ut, Et = twisted_samples(tr)[0]
    assert t == 0.0
    assert np.allclose(ut.coeffs, tr.field(0).coeffs)
    assert np.all(wt.coeffs[wt.grid.k <= 0] == 0)


def test_argument_errors():
    tr = small_trajectory(64)
    with pytest.raises(ParameterError):
        normalform_residual(tr, M=0.5)
    short = Trajectory(tr.grid, tr.times[:2], tr.coeffs[:2], tr.config)
    with pytest.raises(PreconditionError):
        normalform_residual(short, M=1.0)
    uneven = Trajectory(tr.grid, np.array([0.0, 0.05, 0.07]), tr.coeffs[:3], tr.config)
    with pytest.raises(PreconditionError):
        normalform_residual(uneven, M=1.0)


def test_zero_data_gives_zero_residual():
    g = Grid(16)
    tr = evolve(from_physical(np.zeros(16), g), SolverConfig(dt=0.01, T=0.04))
    r = normalform_residual(tr, M=1.0)
    assert np.all(r.residual == 0) and np.all(r.relative == 0)
    assert sobolev_norm(tr.field(-1), 0.0) == 0
