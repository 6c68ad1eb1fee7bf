"""Exhaustive integer-lattice verification of the phase algebra and the
multiplier supports.

Phase identities are checked in exact int64 arithmetic by compiled loops;
multiplier supports, the agreement of the two quartic forms and the
extremal constants are checked with vectorized numpy over chunks.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .multipliers import MULTIPLIERS

# the TBB layer probed by default is too old on some systems and warns
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

MAX_LISTED = 20


@dataclass
class CheckResult:
    name: str
    max_freq: int
    support_points: int = 0
    violation_count: int = 0
    violations: list = field(default_factory=list)
    max_error: float = 0.0

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def add(self, tuples):
        tuples = np.asarray(tuples)
        self.violation_count += len(tuples)
        room = MAX_LISTED - len(self.violations)
        if room > 0:
            self.violations.extend([[int(v) for v in row] for row in tuples[:room]])


@dataclass
class LatticeReport:
    max_freq: int
    M: float
    checks: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def violations(self) -> list:
        return [(name, v) for name, c in self.checks.items() for v in c.violations]

    def as_dict(self) -> dict:
        return {
            "max_freq": self.max_freq,
            "M": self.M,
            "passed": self.passed,
            "runtime_seconds": self.runtime,
            "checks": {
                n: dict(asdict(c), passed=c.passed) for n, c in self.checks.items()
            },
            "constants": self.constants,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


# ---------------------------------------------------------------------------
# exact phase scans (compiled)


@numba.njit(inline="always")
def _w(x):
    return x * abs(x)


@numba.njit(inline="always")
def _Om(a, b, c):
    return _w(a) - _w(b) - _w(c)


@numba.njit(inline="always")
def _om2(j, a, b, c, d):
    if j == 1:
        return _Om(a, b + c, d) + _Om(b + c, b, c)
    return _Om(a, b, c + d) + _Om(c + d, c, d)


@numba.njit(inline="always")
def _om3(j, k, a, b, c, d, e):
    if k == 1:
        return _om2(j, a, b + c, d, e) + _Om(b + c, b, c)
    if k == 2:
        return _om2(j, a, b, c + d, e) + _Om(c + d, c, d)
    return _om2(j, a, b, c, d + e) + _Om(d + e, d, e)


@numba.njit(parallel=True, cache=True)
def _scan_sigma(R):
    """Factorization and sign of Omega on supp sigma (xi >= 2, xi_1 >= 2, xi_2 < 0)."""
    n = 2 * R + 1
    support = np.zeros(n, np.int64)
    bad = np.zeros(n, np.int64)
    for i in numba.prange(n):
        x1 = i - R
        for x2 in range(-R, R + 1):
            xi = x1 + x2
            if xi >= 2 and x1 >= 2 and x2 < 0:
                support[i] += 1
                om = _Om(xi, x1, x2)
                if om != 2 * xi * x2 or om >= 0:
                    bad[i] += 1
    return support, bad


@numba.njit(parallel=True, cache=True)
def _scan_additivity(R):
    """Counts of composition failures for omega2 (3 tuples) and omega3 (4 tuples),
    compared with omega(xi) - sum omega(xi_i)."""
    n = 2 * R + 1
    bad2 = np.zeros(n, np.int64)
    bad3 = np.zeros(n, np.int64)
    for i in numba.prange(n):
        x1 = i - R
        for x2 in range(-R, R + 1):
            for x3 in range(-R, R + 1):
                xi = x1 + x2 + x3
                tot = _w(xi) - _w(x1) - _w(x2) - _w(x3)
                for j in range(1, 4):
                    if _om2(j, xi, x1, x2, x3) != tot:
                        bad2[i] += 1
                for x4 in range(-R, R + 1):
                    y = xi + x4
                    tot4 = _w(y) - _w(x1) - _w(x2) - _w(x3) - _w(x4)
                    for j in range(1, 4):
                        for k in range(1, 4):
                            if _om3(j, k, y, x1, x2, x3, x4) != tot4:
                                bad3[i] += 1
    return bad2, bad3


@numba.njit(parallel=True, cache=True)
def _scan_factorizations(R):
    """Second-step factorized phases on their sign supports and the
    three-branch formula for Omega(xi_23, xi_2, xi_3) with xi_23 < 0."""
    n = 2 * R + 1
    sup = np.zeros((n, 4), np.int64)
    bad = np.zeros((n, 4), np.int64)
    for i in numba.prange(n):
        x1 = i - R
        for x2 in range(-R, R + 1):
            for x3 in range(-R, R + 1):
                xi = x1 + x2 + x3
                x12 = x1 + x2
                x23 = x2 + x3
                om = _w(xi) - _w(x1) - _w(x2) - _w(x3)
                if xi >= 2 and x1 >= 2 and x12 >= 2 and x2 < 0 and x3 < 0:
                    sup[i, 0] += 1
                    if om != 2 * xi * x3 + 2 * x12 * x2:
                        bad[i, 0] += 1
                if xi >= 2 and x1 >= 2 and x2 < 0 and x3 < 0:
                    sup[i, 1] += 1
                    if om != 2 * xi * x23 - 2 * x2 * x3:
                        bad[i, 1] += 1
                if xi >= 2 and x1 >= 2 and x2 < 0 and x3 >= 0 and x23 < 0:
                    sup[i, 2] += 1
                    if om != 2 * x12 * x23:
                        bad[i, 2] += 1
        # branch formula, indexed by x2 = i - R
        x2 = x1
        for x3 in range(-R, R + 1):
            x23 = x2 + x3
            if x23 < 0:
                sup[i, 3] += 1
                om = _Om(x23, x2, x3)
                if x2 < 0 and x3 < 0:
                    ref = -2 * x2 * x3
                elif x3 < 0:
                    ref = -2 * x2 * x23
                else:
                    ref = -2 * x3 * x23
                if om != ref:
                    bad[i, 3] += 1
    return sup, bad


def _failing_tuples(pred, R, arity, limit=MAX_LISTED):
    """Slow path used only when a compiled scan reports failures: list a few
    offending tuples."""
    out = []
    for t in np.ndindex(*(2 * R + 1,) * arity):
        xs = [v - R for v in t]
        if pred(*xs):
            out.append(xs)
            if len(out) >= limit:
                break
    return out


# ---------------------------------------------------------------------------
# multiplier scans (numpy)


def _tuples(R, arity, lead_min=None, chunk=2_000_000):
    """Yield arrays (xi, x1, ..., xk) over |x_i| <= R with xi = sum; optionally
    restrict x1 >= lead_min."""
    lo1 = -R if lead_min is None else max(-R, lead_min)
    r1 = np.arange(lo1, R + 1)
    rest = np.arange(-R, R + 1)
    sizes = [len(r1)] + [len(rest)] * (arity - 1)
    total = int(np.prod(sizes))
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        pos = np.unravel_index(flat, sizes)
        xs = [r1[pos[0]]] + [rest[p] for p in pos[1:]]
        yield (sum(xs),) + tuple(xs)


def _support_inequalities():
    """name -> (multiplier, arity, predicate that must hold on the support)."""
    a = np.abs
    return {
        "sigma": ("sigma", 2, lambda xi, x1, x2: (xi < x1) & (a(x2) < x1)),
        "m2_1": ("m2_1", 3, lambda xi, x1, x2, x3: (xi < x1 + x2) & (x1 + x2 < x1)
                 & (a(x3) < x1 + x2) & (a(x2) < x1)),
        "bold_N2_2": ("bold_N2_2", 3, lambda xi, x1, x2, x3: (xi < x1) & (a(x2 + x3) < x1)),
        "m3_23": ("m3_23", 4, lambda xi, x1, x2, x3, x4: (a(x2) < a(x2 + x3 + x4))
                  & (a(x3 + x4) < a(x2 + x3 + x4)) & (a(x2 + x3 + x4) < x1) & (xi < x1)),
        "m3_13": ("m3_13", 4, lambda xi, x1, x2, x3, x4: a(x3 + x4) < x1 + x2),
        "m3_32": ("m3_32", 4, lambda xi, x1, x2, x3, x4: (xi < x1) & (x4 < a(x2 + x3))),
        "m3_22": ("m3_22", 4, lambda xi, x1, x2, x3, x4: (a(x2 + x3) < a(x2 + x3 + x4))
                  & (a(x2 + x3 + x4) < x1) & (xi < x1)),
        "m3_12": ("m3_12", 4, lambda xi, x1, x2, x3, x4: (a(x2 + x3) < x1) & (xi < x1 + x2 + x3)),
        "m3_31": ("m3_31", 4, lambda xi, x1, x2, x3, x4: (a(x2) <= x1) & (x4 < a(x3))),
        "m3_11": ("m3_11", 4, lambda xi, x1, x2, x3, x4: (xi < x1 + x2 + x3) & (a(x4) < x1 + x2 + x3)),
    }


def _bound_templates():
    """name -> (multiplier, arity, claimed decay); the reported constant is
    ``sup |m| / decay`` over the support."""
    jb = lambda x: 1.0 + np.abs(x)
    a = np.abs
    return {
        "|N1| <= C xi |xi_2| / xi_1": ("N1", 2, lambda xi, x1, x2: xi * a(x2) / x1),
        "|N1_0| <= C / <xi_1>": ("N1_0", 2, lambda xi, x1, x2: 1.0 / jb(x1)),
        "|m2_1| <= C |xi_2| / xi_1": ("m2_1", 3, lambda xi, x1, x2, x3: a(x2) / x1),
        "|m2_2| <= C |xi_23| / xi_1": ("m2_2", 3, lambda xi, x1, x2, x3: a(x2 + x3) / x1),
        "|m2_3| <= C |xi_23| / xi_1": ("m2_3", 3, lambda xi, x1, x2, x3: a(x2 + x3) / x1),
        "|m3_33| <= C |xi_34| / (xi_1 |xi_12|)": (
            "m3_33", 4, lambda xi, x1, x2, x3, x4: a(x3 + x4) / (x1 * a(x1 + x2))),
        "|m3_13| <= C / <xi_1>": ("m3_13", 4, lambda xi, x1, x2, x3, x4: 1.0 / jb(x1)),
        "|m3_23| <= C / <xi_1>": ("m3_23", 4, lambda xi, x1, x2, x3, x4: 1.0 / jb(x1)),
        "|m3_22| <= C / <xi>": ("m3_22", 4, lambda xi, x1, x2, x3, x4: 1.0 / jb(xi)),
        "|m3_12| <= C / <xi_1>": ("m3_12", 4, lambda xi, x1, x2, x3, x4: 1.0 / jb(x1)),
        "|m3_32| <= C / <xi_1>": ("m3_32", 4, lambda xi, x1, x2, x3, x4: 1.0 / jb(x1)),
        "|m3_31| <= C / <xi_123>": ("m3_31", 4, lambda xi, x1, x2, x3, x4: 1.0 / jb(x1 + x2 + x3)),
        "|m3_21| <= C |xi_2| / xi_1": ("m3_21", 4, lambda xi, x1, x2, x3, x4: a(x2) / x1),
        "|m3_11| <= C |xi_2| / xi_1": ("m3_11", 4, lambda xi, x1, x2, x3, x4: a(x2) / x1),
    }


def verify_lattice(max_freq: int, M: float = 1.0, limits: dict | None = None,
                   rel_tol: float = 1e-12) -> LatticeReport:
    """Run every lattice check with ``|xi_i| <= max_freq``.

    ``limits`` may cap the range of individual families (keys ``sigma``,
    ``additivity``, ``factorization``, ``supports``, ``forms``,
    ``constants``); the report records the range actually scanned.
    """
    if max_freq < 8:
        raise ValueError("max_freq must be at least 8")
    lim = {k: max_freq for k in ("sigma", "additivity", "factorization", "supports", "forms", "constants")}
    if limits:
        for k, v in limits.items():
            if k not in lim:
                raise ValueError(f"unknown lattice family {k!r}")
            lim[k] = min(int(v), max_freq)
    t0 = time.perf_counter()
    rep = LatticeReport(max_freq, float(M))

    R = lim["sigma"]
    sup, bad = _scan_sigma(R)
    c = CheckResult("sigma_factorization_and_sign", R, int(sup.sum()))
    if bad.sum():
        c.add(_failing_tuples(lambda x1, x2: x1 + x2 >= 2 and x1 >= 2 and x2 < 0 and (
            (x1 + x2) ** 2 - x1 * x1 + x2 * x2 != 2 * (x1 + x2) * x2 or (x1 + x2) * x2 >= 0), R, 2))
        c.violation_count = int(bad.sum())
    rep.checks[c.name] = c

    R = lim["additivity"]
    bad2, bad3 = _scan_additivity(R)
    c2 = CheckResult("omega2_additivity", R, 3 * (2 * R + 1) ** 3)
    c2.violation_count = int(bad2.sum())
    c3 = CheckResult("omega3_additivity", R, 9 * (2 * R + 1) ** 4)
    c3.violation_count = int(bad3.sum())
    rep.checks[c2.name] = c2
    rep.checks[c3.name] = c3

    R = lim["factorization"]
    sup, bad = _scan_factorizations(R)
    for col, name in enumerate(("omega2_1_factorization", "omega2_2_factorization",
                                "omega2_3_factorization", "omega_three_branch")):
        cc = CheckResult(name, R, int(sup[:, col].sum()))
        cc.violation_count = int(bad[:, col].sum())
        rep.checks[name] = cc

    # support inequalities on the implemented multipliers
    R = lim["supports"]
    for name, (mname, arity, pred) in _support_inequalities().items():
        kern = MULTIPLIERS[mname][0]
        cc = CheckResult(f"support_{name}", R)
        for xs in _tuples(R, arity, lead_min=2):
            m = kern(*xs, M=M)
            on = m != 0
            cc.support_points += int(on.sum())
            ok = pred(*[x[on] for x in xs])
            if not ok.all():
                cc.add(np.stack([x[on][~ok] for x in xs], axis=1))
        rep.checks[cc.name] = cc

    # compositional vs expanded quartic multipliers
    R = lim["forms"]
    for j in (1, 2, 3):
        for k in (1, 2, 3):
            comp = MULTIPLIERS[f"m3_{j}{k}"][0]
            expd = MULTIPLIERS[f"m3_{j}{k}_expanded"][0]
            cc = CheckResult(f"m3_{j}{k}_forms", R)
            for xs in _tuples(R, 4, lead_min=2):
                a, b = comp(*xs, M=M), expd(*xs, M=M)
                on = (a != 0) | (b != 0)
                cc.support_points += int(on.sum())
                err = np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
                cc.max_error = max(cc.max_error, float(err.max(initial=0.0)))
                badm = on & (err > rel_tol)
                if badm.any():
                    cc.add(np.stack([x[badm] for x in xs], axis=1))
            rep.checks[cc.name] = cc

    R = lim["constants"]
    for label, (mname, arity, decay) in _bound_templates().items():
        kern = MULTIPLIERS[mname][0]
        best = 0.0
        for xs in _tuples(R, arity, lead_min=2):
            m = np.abs(kern(*xs, M=M))
            on = m != 0
            if on.any():
                d = decay(*[x[on].astype(float) for x in xs])
                best = max(best, float(np.max(m[on] / d)))
        rep.constants[label] = {"value": best, "finite": bool(np.isfinite(best)), "max_freq": R}

    rep.runtime = time.perf_counter() - t0
    return rep
