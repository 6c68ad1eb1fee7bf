"""Measurements: nonlinear smoothing of the gauge variable, refined
Strichartz scaling per dyadic band, and differences of two numerical
solutions.  Every scan returns a ScanReport whose rows can be written as CSV
(fixed schema) and JSON (rows plus full configuration)."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .gauge import gauge_forward, mass_phase_rate, reduce_mean
from .solver import ResolutionWarning, SolverConfig, Trajectory, default_dt, evolve
from .spectral import (
    Grid,
    ParameterError,
    PreconditionError,
    SpectralField,
    apply_symbol,
    bo_propagator,
    lebesgue_norm,
    lp_band,
    schrodinger_propagator,
    sobolev_norm,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scan_type", "seed", "N", "s", "delta_or_p", "t_or_band", "value", "comparator", "ratio")
SEED_CAP = 1 << 14  # phases are drawn for this many modes so low modes agree across N


# ---------------------------------------------------------------------------
# exponents


def alpha(s, p):
    """Line exponent ``(3/2 - s)/p - s``; exact for int or Fraction input."""
    return (Fraction(3, 2) - s) / p - s


def beta(s, p):
    """Torus exponent ``(3/2 - s)(1/4 - 1/(2p)) - s``."""
    return (Fraction(3, 2) - s) * (Fraction(1, 4) - Fraction(1, 2) / p) - s


def regularity_gate(s, delta=0):
    """``s^2 - 6s + 3/4 + delta(3/2 - s)``; the argument needs it negative."""
    return s * s - 6 * s + Fraction(3, 4) + delta * (Fraction(3, 2) - s)


@dataclass(frozen=True)
class ExponentSpec:
    s: object
    p: object

    @property
    def alpha(self):
        return alpha(self.s, self.p)

    @property
    def beta(self):
        return beta(self.s, self.p)


# ---------------------------------------------------------------------------
# initial data


DATA_KINDS = ("zero", "cos", "smooth", "rough", "packet")


@dataclass(frozen=True)
class InitialData:
    """Seeded initial data.  ``rough`` has random phases with
    ``|c_n| = amplitude <n>^{-(s + 1/2)} n^{-eps}`` on ``1 <= n < N/3``;
    ``packet`` fills the dyadic band ``band/2 < n <= band``; ``smooth`` uses
    ``|c_n| = amplitude 2^{-n}`` for ``n <= modes``.  When ``norm_value`` is set
    the data is rescaled to that ``H^{norm_s}`` norm."""

    kind: str = "cos"
    amplitude: float = 1.0
    seed: int = 0
    s: float = 0.25
    eps: float = 0.01
    band: int = 32
    modes: int = 4
    norm_s: float = 0.0
    norm_value: float | None = None

    def __post_init__(self):
        if self.kind not in DATA_KINDS:
            raise ParameterError(f"unknown initial data kind {self.kind!r}; expected one of {DATA_KINDS}")

    def _phases(self, count):
        if count > SEED_CAP:
            raise ParameterError(f"at most {SEED_CAP} seeded modes are supported")
        rng = np.random.default_rng(self.seed)
        return np.exp(2j * np.pi * rng.random(SEED_CAP))[:count]

    def build(self, grid: Grid) -> SpectralField:
        modes = {}
        if self.kind == "cos":
            modes = {1: 0.5 * self.amplitude, -1: 0.5 * self.amplitude}
        elif self.kind == "smooth":
            ph = self._phases(self.modes)
            for n in range(1, self.modes + 1):
                modes[n] = self.amplitude * 2.0**-n * ph[n - 1]
        elif self.kind == "rough":
            top = (grid.num_modes - 1) // 3
            n = np.arange(1, top + 1)
            mag = self.amplitude * (1.0 + n) ** -(self.s + 0.5) * n ** -self.eps
            modes = dict(zip(n.tolist(), mag * self._phases(top)))
        elif self.kind == "packet":
            if self.band > grid.max_mode:
                raise ParameterError(f"packet band {self.band} exceeds the grid")
            n = np.arange(self.band // 2 + 1, self.band + 1)
            ph = self._phases(self.band)[n - 1]
            modes = dict(zip(n.tolist(), self.amplitude / np.sqrt(len(n)) * ph))
        for n in [m for m in modes if m > 0]:
            modes[-n] = np.conj(modes[n])
        u = SpectralField.from_modes(grid, modes, real=True)
        if self.norm_value is not None:
            cur = sobolev_norm(u, self.norm_s)
            if cur > 0:
                u = u * (self.norm_value / cur)
        return u

    @classmethod
    def from_dict(cls, d: dict) -> "InitialData":
        names = {f for f in cls.__dataclass_fields__}
        extra = set(d) - names
        if extra:
            raise ParameterError(f"unknown initial data keys {sorted(extra)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


@dataclass
class ScanReport:
    scan_type: str
    seed: int
    config: dict
    rows: list = field(default_factory=list)  # dicts with CSV_COLUMNS plus provenance
    summary: dict = field(default_factory=dict)

    def add(self, N, s, delta_or_p, t_or_band, value, comparator=float("nan"), ratio=float("nan"), **prov):
        row = dict(scan_type=self.scan_type, seed=self.seed, N=N, s=s, delta_or_p=delta_or_p,
                   t_or_band=t_or_band, value=float(value), comparator=float(comparator),
                   ratio=float(ratio))
        row.update(prov)
        self.rows.append(row)

    @property
    def passed(self) -> bool:
        return all(self.summary.get("passed", {}).values())

    def as_dict(self) -> dict:
        return {"scan_type": self.scan_type, "seed": self.seed, "config": self.config,
                "rows": self.rows, "summary": self.summary}

    @classmethod
    def from_dict(cls, d: dict) -> "ScanReport":
        return cls(d["scan_type"], d["seed"], d["config"], list(d["rows"]), dict(d["summary"]))

    def csv_text(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in self.rows:
            wr.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def emit_report(report: ScanReport, path, fmt: str = "both") -> list[Path]:
    """Write ``path`` with suffix ``.csv`` and/or ``.json``; returns the files."""
    if fmt not in ("csv", "json", "both"):
        raise ParameterError(f"unknown report format {fmt!r}")
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    out = []
    if fmt in ("csv", "both"):
        p = base.with_suffix(".csv")
        p.write_text(report.csv_text(), encoding="utf-8")
        out.append(p)
    if fmt in ("json", "both"):
        p = base.with_suffix(".json")
        p.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True, default=_json_default) + "\n",
                     encoding="utf-8")
        out.append(p)
    return out


def load_report(path) -> ScanReport:
    return ScanReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# helpers


def scan_dt(u0: SpectralField) -> float:
    """A quarter of the default step: rough data grows in sup norm and the
    default blows up on it."""
    return 0.25 * default_dt(u0)


def _run(u0: SpectralField, T: float, dt: float | None, store_every: int, scheme="IFRK4") -> Trajectory:
    dt = dt if dt is not None else scan_dt(u0)
    with warnings.catch_warnings():
        # rough data is unresolved by construction
        warnings.simplefilter("ignore", ResolutionWarning)
        return evolve(u0, SolverConfig(scheme=scheme, dt=dt, T=T), store_every=store_every)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _spec_dict(spec: InitialData) -> dict:
    return asdict(spec)


# ---------------------------------------------------------------------------
# smoothing


def _smoothing_one(spec: InitialData, N: int, s: float, delta: float, T: float, dt, store_every, period):
    grid = Grid(N, period)
    u0 = spec.build(grid)
    if abs(u0.coeffs[0]) > 0:
        raise PreconditionError("smoothing_scan needs zero-mean initial data")
    traj = _run(u0, T, dt, store_every)
    rate = mass_phase_rate(u0)
    w0 = gauge_forward(u0).w
    sigma = s + delta
    out = []
    for i, t in enumerate(traj.times):
        u = traj.field(i)
        w = gauge_forward(u, phase=rate * t).w
        gd = sobolev_norm(w - apply_symbol(w0, schrodinger_propagator(t)), sigma)
        cd = sobolev_norm(u - apply_symbol(u0, bo_propagator(t)), sigma)
        out.append((float(t), gd, cd))
    return out, traj.config.dt


def smoothing_scan(u0_spec: InitialData, s: float, delta: float, T: float, resolutions=(128, 256),
                   dt: float | None = None, store_every: int = 8, period: float = 2 * np.pi,
                   workers: int = 1, stable_tol: float = 0.1, growth: float = 1.25) -> ScanReport:
    """Sup over stored times of ``||w(t) - e^{it dx^2} w0||_{H^{s+delta}}``
    against the ungauged ``||u(t) - e^{-tH dx^2} u0||_{H^{s+delta}}`` per
    resolution, and their ratios across consecutive resolutions."""
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if not (1 / 7 <= s <= 0.25):
        log.info("s=%g is outside the range [1/7, 1/4] covered by the theory", s)
    resolutions = list(resolutions)
    rep = ScanReport("smoothing", u0_spec.seed, {
        "u0": _spec_dict(u0_spec), "s": s, "delta": delta, "T": T, "resolutions": resolutions,
        "dt": dt, "store_every": store_every, "period": period,
    })
    results = _map(lambda N: _smoothing_one(u0_spec, N, s, delta, T, dt, store_every, period),
                   resolutions, workers)
    sups = []
    for N, (series, used_dt) in zip(resolutions, results):
        for t, gd, cd in series:
            rep.add(N, s, delta, t, gd, cd, gd / cd if cd > 0 else float("nan"),
                    trajectory=f"N{N}", norm=f"H^{s + delta:g}", dt=used_dt)
        sups.append((max(g for _, g, _ in series), max(c for _, _, c in series)))
    ratios = []
    for (N1, a), (N2, b) in zip(zip(resolutions, sups), zip(resolutions[1:], sups[1:])):
        ratios.append({
            "N_coarse": N1, "N_fine": N2,
            "gauge_ratio": b[0] / a[0] if a[0] > 0 else float("nan"),
            "comparator_ratio": b[1] / a[1] if a[1] > 0 else float("nan"),
        })
    rep.summary = {
        "sup_gauge_difference": {str(N): g for N, (g, _) in zip(resolutions, sups)},
        "sup_comparator": {str(N): c for N, (_, c) in zip(resolutions, sups)},
        "ratios": ratios,
        "tolerances": {"gauge_ratio_within": stable_tol, "comparator_ratio_above": growth},
        "passed": {
            "gauge_stable": all(abs(r["gauge_ratio"] - 1) <= stable_tol for r in ratios),
            "comparator_grows": all(r["comparator_ratio"] > growth for r in ratios),
        },
    }
    return rep


def largest_stable_delta(u0_spec: InitialData, s: float, deltas, T: float, resolutions=(128, 256),
                         tol: float = 0.1, **kw):
    """Largest ``delta`` whose gauge-difference ratios all lie within ``1 +- tol``.
    Returns ``(delta or None, {delta: report})``."""
    best, reports = None, {}
    for d in sorted(deltas):
        rep = smoothing_scan(u0_spec, s, d, T, resolutions, **kw)
        reports[d] = rep
        if all(abs(r["gauge_ratio"] - 1) <= tol for r in rep.summary["ratios"]):
            best = d
    return best, reports


# ---------------------------------------------------------------------------
# refined Strichartz


def _lp_time(values, times, p):
    """``(int |f|^p dt)^{1/p}`` by the trapezoidal rule on stored samples."""
    if len(times) < 2:
        return 0.0
    return float(trapezoid(np.asarray(values) ** p, times) ** (1.0 / p))


def strichartz_scan(u0_spec: InitialData, s: float, p: float, T: float, dyadic_bands=None,
                    N: int = 128, dt: float | None = None, store_every: int = 4,
                    period: float = 2 * np.pi) -> ScanReport:
    """Per dyadic band ``K``: ``||P_K u||_{L^p([0,T] x T)}`` and the quotient
    ``Q(K) = measured / (T^{1/p} K^{beta(s,p)} (||P_K u||_{L^inf H^s} + ||u||^2_{L^inf H^s}))``."""
    if not 2 <= p <= 4:
        raise ParameterError(f"the torus estimate needs 2 <= p <= 4, got {p}")
    if not 0 <= s <= 0.25:
        raise ParameterError(f"the torus estimate needs 0 <= s <= 1/4, got {s}")
    if store_every > 8:
        raise ParameterError("time norms need a store interval of at most 8 steps")
    grid = Grid(N, period)
    u0 = u0_spec.build(grid)
    traj = _run(u0, T, dt, store_every)
    fields = traj.fields()
    if dyadic_bands is None:
        dyadic_bands = [K for K in (2**j for j in range(1, 20)) if K <= grid.max_mode]
    b = beta(s, p)
    sup_u = max(sobolev_norm(f, s) for f in fields)
    rep = ScanReport("strichartz", u0_spec.seed, {
        "u0": _spec_dict(u0_spec), "s": s, "p": p, "T": T, "bands": list(dyadic_bands), "N": N,
        "dt": traj.config.dt, "store_every": store_every, "period": period, "beta": b,
    })
    qs, meas = [], []
    for K in dyadic_bands:
        pieces = [apply_symbol(f, lp_band(K)) for f in fields]
        vals = [lebesgue_norm(g, p) for g in pieces]
        m = _lp_time(vals, traj.times, p)
        sup_k = max(sobolev_norm(g, s) for g in pieces)
        denom = T ** (1.0 / p) * K**b * (sup_k + sup_u**2)
        q = m / denom if denom > 0 else float("nan")
        rep.add(N, s, p, K, m, denom, q, trajectory=f"N{N}", norm=f"L^{p:g}_tx(P_{K})")
        qs.append(q)
        meas.append(m)
    ks = np.array(dyadic_bands, dtype=float)
    pos = np.array(meas) > 0
    slope = float(np.polyfit(np.log(ks[pos]), np.log(np.array(meas)[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    finite = [q for q in qs if math.isfinite(q)]
    rep.summary = {"max_Q": max(finite) if finite else float("nan"), "slope": slope, "beta": b,
                   "passed": {"Q_finite": len(finite) == len(qs)}}
    return rep


# ---------------------------------------------------------------------------
# differences of two numerical solutions


def _common_store(cfg: SolverConfig, samples: int) -> int:
    nsteps = int(round(cfg.T / cfg.dt))
    if abs(nsteps * cfg.dt - cfg.T) > 1e-9 * cfg.T or nsteps % samples:
        raise ParameterError(f"T/dt = {cfg.T / cfg.dt:g} must be an integer multiple of samples={samples}")
    return nsteps // samples


def difference_scan(u0_spec: InitialData, scheme_pair, T: float, s: float = 0.0, N: int = 64,
                    samples: int = 10, period: float = 2 * np.pi) -> ScanReport:
    """Evolve the same data under two solver configurations and record
    ``||u1 - u2||_{H^s}``, ``||w1 - w2||_{H^s}``, ``||F1 - F2||_{L^inf}`` at
    common times; ``ratio`` is the gauge over the solution difference."""
    c1, c2 = [c if isinstance(c, SolverConfig) else SolverConfig(**dict(c, T=T)) for c in scheme_pair]
    c1, c2 = SolverConfig(c1.scheme, c1.dt, c1.dealias, T), SolverConfig(c2.scheme, c2.dt, c2.dealias, T)
    grid = Grid(N, period)
    u0 = u0_spec.build(grid)
    v0, shift = reduce_mean(u0)
    trajs = []
    for cfg in (c1, c2):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            trajs.append(evolve(u0, cfg, store_every=_common_store(cfg, samples)))
    rate = mass_phase_rate(v0)
    rep = ScanReport("difference", u0_spec.seed, {
        "u0": _spec_dict(u0_spec), "configs": [asdict(c1), asdict(c2)], "T": T, "s": s, "N": N,
        "samples": samples, "period": period,
    })
    cmax, rmax = 0.0, 0.0
    series = {"u": [], "w": [], "F": [], "u_L2": []}
    for i, t in enumerate(trajs[0].times):
        st = [gauge_forward(shift.apply(tr.field(i), t), phase=rate * t) for tr in trajs]
        du = st[0].u - st[1].u
        un = sobolev_norm(du, s)
        wn = sobolev_norm(st[0].w - st[1].w, s)
        fn = lebesgue_norm(st[0].F - st[1].F, np.inf)
        l2 = sobolev_norm(du, 0.0)
        ratio = wn / un if un > 0 else float("nan")
        rep.add(N, s, 0.0, float(t), un, wn, ratio, trajectory="pair", norm=f"H^{s:g}",
                F_sup=fn, u_L2=l2)
        series["u"].append(un)
        series["w"].append(wn)
        series["F"].append(fn)
        series["u_L2"].append(l2)
        if l2 > 0:
            cmax = max(cmax, fn / l2)
        if un > 0:
            rmax = max(rmax, wn / un)
    rep.summary = {
        "max_u_difference": max(series["u"]),
        "max_w_difference": max(series["w"]),
        "max_F_difference": max(series["F"]),
        "F_over_L2_constant": cmax,
        "max_w_over_u": rmax,
    }
    return rep
