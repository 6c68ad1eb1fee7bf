import json

import numpy as np
import pytest

from bolab.normalform import lattice
from bolab.normalform.lattice import _scan_additivity, _scan_sigma, verify_lattice
from bolab.normalform.multipliers import MULTIPLIERS
from bolab.normalform.phases import Omega


@pytest.fixture(scope="module")
def report():
    return verify_lattice(16, M=4)


def test_small_lattice_passes(report):
    assert report.passed, report.violations
    assert report.max_freq == 16 and report.M == 4.0
    for c in report.checks.values():
        assert c.violation_count == 0
        assert c.max_freq == 16


def test_every_family_is_present(report):
    names = set(report.checks)
    for must in ("sigma_factorization_and_sign", "omega2_additivity", "omega3_additivity",
                 "omega2_1_factorization", "omega_three_branch", "m3_11_forms", "m3_33_forms"):
        assert must in names
    assert any(n.startswith("support_") for n in names)
    assert report.constants


def test_sigma_support_count_by_enumeration():
    R = 12
    count = 0
    for x1 in range(-R, R + 1):
        for x2 in range(-R, R + 1):
            if x1 + x2 >= 2 and x1 >= 2 and x2 < 0 and abs(x1 + x2) <= R:
                assert Omega(x1 + x2, x1, x2) == 2 * (x1 + x2) * x2
                count += 1
    sup, bad = _scan_sigma(R)
    assert int(sup.sum()) == count and int(bad.sum()) == 0


def test_additivity_kernel_clean():
    b2, b3 = _scan_additivity(6)
    assert b2.sum() == 0 and b3.sum() == 0


def test_json_round_trip(report, tmp_path):
    path = tmp_path / "lat.json"
    report.to_json(path)
    d = json.loads(path.read_text())
    assert d == json.loads(json.dumps(report.as_dict()))
    assert d["passed"] is True
    assert set(d["checks"]) == set(report.checks)


def test_limits_cap_families():
    rep = verify_lattice(8, M=1, limits={"forms": 4, "sigma": 100})
    assert rep.checks["m3_11_forms"].max_freq == 4
    assert rep.checks["sigma_factorization_and_sign"].max_freq == 8
    with pytest.raises(ValueError):
        verify_lattice(8, limits={"everything": 4})
    with pytest.raises(ValueError):
        verify_lattice(7)


def test_broken_expanded_form_is_detected(monkeypatch):
    kern, arity, boundary = MULTIPLIERS["m3_11_expanded"]

    def broken(*xs, M=1.0):
        return kern(*xs, M=M) * (1 + 1e-6 * (xs[1] > 3))

    monkeypatch.setitem(MULTIPLIERS, "m3_11_expanded", (broken, arity, boundary))
    rep = verify_lattice(8, M=1, limits={"supports": 8, "constants": 8})
    c = rep.checks["m3_11_forms"]
    assert not rep.passed
    assert c.violation_count > 0 and c.max_error > 1e-7
    assert 0 < len(c.violations) <= 20
    assert np.all(np.array(c.violations)[:, 1] > 3)
    assert lattice.MULTIPLIERS is MULTIPLIERS
