"""Command-line entry point.

Every command accepts ``--config FILE`` (JSON with a ``version`` field);
explicit flags override values from the file.  Exit status is 0 when the
run passes its check, 1 when a check fails or the computation breaks down,
and 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

CONFIG_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("bolab")


class UsageError(Exception):
    pass


# per-command defaults; a config file may set exactly these keys
_DATA = {"u0": "cos", "amplitude": 1.0, "seed": 0, "norm_s": 0.0, "norm_value": None, "band": 32,
         "modes": 4}
DEFAULTS = {
    "solve": dict(_DATA, N=64, period=2 * np.pi, T=1.0, dt=None, scheme="IFRK4",
                  dealias="two_thirds", store_every=1, out="trajectory.bolab"),
    "gauge-check": dict(_DATA, N=64, period=2 * np.pi, T=0.2, dt=1e-3, strides=[8, 4, 2],
                        min_order=1.9, unphased=False, out="gauge_check.json"),
    "verify-lattice": {"max_freq": 16, "M": 4.0, "limits": {}, "out": "lattice.json"},
    "nf-residual": dict(_DATA, u0="smooth", norm_s=0.25, norm_value=0.1, N=32, period=2 * np.pi, T=0.1,
                        dt=None, dealias="none", store_every=8, M=16.0, s=0.0, delta=0.0, path="direct",
                        tol=1e-6, out="nf_residual.json"),
    "smoothing": dict(_DATA, u0="rough", s=0.25, delta=0.125, T=0.5, resolutions=[128, 256],
                      dt=None, store_every=8, stable_tol=0.1, growth=1.25, out="smoothing",
                      format="both"),
    "strichartz": dict(_DATA, u0="packet", s=0.25, p=4.0, T=0.5, bands=None, N=128, dt=None,
                       store_every=4, out="strichartz", format="both"),
    "difference": dict(_DATA, u0="smooth", N=64, T=1.0, s=0.0, samples=10,
                       configs=[{"scheme": "IFRK4", "dt": 0.01}, {"scheme": "IFRK4", "dt": 0.005}],
                       out="difference", format="both"),
}
META_KEYS = {"version", "command"}


# ---------------------------------------------------------------------------
# configuration


def _coerce(key, value, default):
    if value is None or default is None:
        return value
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int) and not isinstance(default, bool):
            if isinstance(value, float) and not value.is_integer():
                raise TypeError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, str):
            if key == "u0" and isinstance(value, dict):
                return value
            if not isinstance(value, str):
                raise TypeError
            return value
        if isinstance(default, list) and not isinstance(value, list):
            raise TypeError
        if isinstance(default, dict) and not isinstance(value, dict):
            raise TypeError
    except (TypeError, ValueError):
        raise UsageError(f"config field {key!r}: expected {type(default).__name__}, got {value!r}") from None
    return value


def load_config(path, command: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    if data.get("version") != CONFIG_VERSION:
        raise UsageError(f"{path}: field 'version' must be {CONFIG_VERSION}, got {data.get('version')!r}")
    if "command" in data and data["command"] != command:
        raise UsageError(f"{path}: config is for {data['command']!r}, not {command!r}")
    allowed = DEFAULTS[command]
    unknown = sorted(set(data) - set(allowed) - META_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown field(s) {unknown} for {command}")
    return {k: _coerce(k, v, allowed[k]) for k, v in data.items() if k not in META_KEYS}


def resolve(command: str, args: argparse.Namespace) -> dict:
    cfg = {k: (list(v) if isinstance(v, list) else dict(v) if isinstance(v, dict) else v)
           for k, v in DEFAULTS[command].items()}
    if getattr(args, "config", None):
        cfg.update(load_config(args.config, command))
    for k in DEFAULTS[command]:
        if hasattr(args, k):
            cfg[k] = getattr(args, k)
    return cfg


def _initial_data(cfg):
    from .experiments import InitialData
    from .spectral import ParameterError

    u0 = cfg["u0"]
    try:
        if isinstance(u0, dict):
            return InitialData.from_dict(u0)
        extra = {"s": cfg["s"]} if "s" in cfg else {}
        return InitialData(kind=u0, amplitude=cfg["amplitude"], seed=cfg["seed"], band=cfg["band"],
                           modes=cfg["modes"], norm_s=cfg["norm_s"], norm_value=cfg["norm_value"], **extra)
    except (ParameterError, TypeError) as e:
        raise UsageError(f"config field 'u0': {e}") from None


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _set_threads(n):
    if n is None:
        env = os.environ.get("BOLAB_THREADS")
        if not env:
            return None
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"BOLAB_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError(f"thread count must be positive, got {n}")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n


# ---------------------------------------------------------------------------
# commands


def _trajectory(cfg, store_every=1):
    from .solver import SolverConfig, default_dt, evolve
    from .spectral import Grid

    grid = Grid(cfg["N"], cfg["period"])
    u0 = _initial_data(cfg).build(grid)
    dt = cfg["dt"] if cfg.get("dt") is not None else default_dt(u0)
    scfg = SolverConfig(scheme=cfg.get("scheme", "IFRK4"), dt=dt,
                        dealias=cfg.get("dealias", "two_thirds"), T=cfg["T"])
    return evolve(u0, scfg, store_every=store_every)


def cmd_solve(cfg, threads=None) -> int:
    from .solver import save_trajectory

    traj = _trajectory(cfg, cfg["store_every"])
    save_trajectory(traj, cfg["out"])
    log.info("wrote %s (%d records, %s)", cfg["out"], len(traj), traj.diagnostics)
    return EXIT_OK


def cmd_gauge_check(cfg, threads=None) -> int:
    from .gauge import reduce_mean, residual_order
    from .solver import Trajectory

    traj = _trajectory(cfg)
    _, shift = reduce_mean(traj.field(0))
    zc = np.array([shift.apply(traj.field(i), t).coeffs for i, t in enumerate(traj.times)])
    traj = Trajectory(traj.grid, traj.times, zc, traj.config, traj.diagnostics)
    res = residual_order(traj, cfg["strides"], phased=not cfg["unphased"])
    ok = all(o >= cfg["min_order"] for o in res["orders"])
    _write_json(cfg["out"], dict(res, config=cfg, passed=ok))
    print(f"gauge residual orders {['%.3f' % o for o in res['orders']]} -> {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_lattice(cfg, threads=None) -> int:
    from .normalform.lattice import verify_lattice

    rep = verify_lattice(cfg["max_freq"], cfg["M"], cfg["limits"] or None)
    rep.to_json(cfg["out"])
    nviol = sum(c.violation_count for c in rep.checks.values())
    print(f"lattice max_freq={cfg['max_freq']} M={cfg['M']:g}: {len(rep.checks)} checks, {nviol} violations")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_nf_residual(cfg, threads=None) -> int:
    from .normalform.residual import normalform_residual
    from .solver import SolverConfig, evolve
    from .spectral import Grid

    grid = Grid(cfg["N"], cfg["period"])
    u0 = _initial_data(cfg).build(grid)
    dt = cfg["dt"] if cfg["dt"] is not None else cfg["T"] / 128
    # the identity holds for the full-band truncation, so no 2/3 projection by default
    traj = evolve(u0, SolverConfig(dt=dt, dealias=cfg["dealias"], T=cfg["T"]), store_every=cfg["store_every"])
    rep = normalform_residual(traj, cfg["M"], cfg["s"], cfg["delta"], cfg["path"])
    ok = rep.final_relative <= cfg["tol"]
    _write_json(cfg["out"], dict(rep.as_dict(), config=cfg, passed=ok))
    print(f"normal-form relative residual {rep.final_relative:.3e} (tol {cfg['tol']:g}) -> {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _emit(rep, cfg):
    from .experiments import emit_report

    files = emit_report(rep, cfg["out"], cfg["format"])
    flags = rep.summary.get("passed", {})
    print(f"{rep.scan_type}: wrote {', '.join(map(str, files))}; checks {flags or 'none'}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_smoothing(cfg, threads=None) -> int:
    from .experiments import smoothing_scan

    rep = smoothing_scan(_initial_data(cfg), cfg["s"], cfg["delta"], cfg["T"], cfg["resolutions"],
                         dt=cfg["dt"], store_every=cfg["store_every"], workers=threads or 1,
                         stable_tol=cfg["stable_tol"], growth=cfg["growth"])
    return _emit(rep, cfg)


def cmd_strichartz(cfg, threads=None) -> int:
    from .experiments import strichartz_scan

    rep = strichartz_scan(_initial_data(cfg), cfg["s"], cfg["p"], cfg["T"], cfg["bands"], N=cfg["N"],
                          dt=cfg["dt"], store_every=cfg["store_every"])
    return _emit(rep, cfg)


def cmd_difference(cfg, threads=None) -> int:
    from .experiments import difference_scan
    from .solver import SolverConfig

    if len(cfg["configs"]) != 2:
        raise UsageError("difference needs exactly two solver configs")
    try:
        pair = [SolverConfig(**dict(c, T=cfg["T"])) for c in cfg["configs"]]
    except TypeError as e:
        raise UsageError(f"config field 'configs': {e}") from None
    rep = difference_scan(_initial_data(cfg), pair, cfg["T"], cfg["s"], N=cfg["N"], samples=cfg["samples"])
    return _emit(rep, cfg)


COMMANDS = {
    "solve": cmd_solve,
    "gauge-check": cmd_gauge_check,
    "verify-lattice": cmd_verify_lattice,
    "nf-residual": cmd_nf_residual,
    "smoothing": cmd_smoothing,
    "strichartz": cmd_strichartz,
    "difference": cmd_difference,
}


# ---------------------------------------------------------------------------
# argument parsing


def _limit(text):
    key, _, val = text.partition("=")
    if not val:
        raise argparse.ArgumentTypeError(f"expected FAMILY=VALUE, got {text!r}")
    return key, int(val)


def _dt(text):
    scheme, _, dt = text.partition(":")
    if not dt:
        raise argparse.ArgumentTypeError(f"expected SCHEME:DT, got {text!r}")
    return {"scheme": scheme, "dt": float(dt)}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = argparse.ArgumentParser(prog="bolab", description="Benjamin-Ono gauge and normal-form laboratory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=True, fmt=False):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--threads", type=int, help="worker cap (also BOLAB_THREADS)")
        p.add_argument("--out", default=S)
        if fmt:
            p.add_argument("--format", choices=("csv", "json", "both"), default=S)
        if data:
            p.add_argument("--u0", default=S, help="zero, cos, smooth, rough or packet")
            p.add_argument("--amplitude", type=float, default=S)
            p.add_argument("--seed", type=int, default=S)
            p.add_argument("--band", type=int, default=S)
            p.add_argument("--modes", type=int, default=S)
            p.add_argument("--norm-s", dest="norm_s", type=float, default=S)
            p.add_argument("--norm-value", dest="norm_value", type=float, default=S)

    def grid(p):
        p.add_argument("--N", type=int, default=S)
        p.add_argument("--period", type=float, default=S)

    p = sub.add_parser("solve", help="evolve initial data and write a trajectory file")
    common(p)
    grid(p)
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--dt", type=float, default=S)
    p.add_argument("--scheme", default=S)
    p.add_argument("--dealias", default=S)
    p.add_argument("--store-every", dest="store_every", type=int, default=S)

    p = sub.add_parser("gauge-check", help="order of the gauge-equation residual")
    common(p)
    grid(p)
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--dt", type=float, default=S)
    p.add_argument("--strides", type=int, nargs="+", default=S)
    p.add_argument("--min-order", dest="min_order", type=float, default=S)
    p.add_argument("--unphased", action="store_true", default=S)

    p = sub.add_parser("verify-lattice", help="exhaustive integer checks of phases and multipliers")
    common(p, data=False)
    p.add_argument("--max-freq", dest="max_freq", type=int, default=S)
    p.add_argument("--M", type=float, default=S)
    p.add_argument("--limit", dest="limits", type=_limit, action="append", default=S,
                   help="cap one check family, e.g. forms=32")

    p = sub.add_parser("nf-residual", help="integrated normal-form identity")
    common(p)
    grid(p)
    for name in ("T", "dt", "M", "s", "delta", "tol"):
        p.add_argument(f"--{name}", type=float, default=S)
    p.add_argument("--store-every", dest="store_every", type=int, default=S)
    p.add_argument("--path", choices=("direct", "grouped"), default=S)
    p.add_argument("--dealias", default=S)

    p = sub.add_parser("smoothing", help="gauge smoothing versus the ungauged comparator")
    common(p, fmt=True)
    for name in ("s", "delta", "T", "dt"):
        p.add_argument(f"--{name}", type=float, default=S)
    p.add_argument("--resolutions", type=int, nargs="+", default=S)
    p.add_argument("--store-every", dest="store_every", type=int, default=S)
    p.add_argument("--stable-tol", dest="stable_tol", type=float, default=S)
    p.add_argument("--growth", type=float, default=S)

    p = sub.add_parser("strichartz", help="dyadic L^p space-time norms")
    common(p, fmt=True)
    for name in ("s", "p", "T", "dt"):
        p.add_argument(f"--{name}", type=float, default=S)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--bands", type=int, nargs="+", default=S)
    p.add_argument("--store-every", dest="store_every", type=int, default=S)

    p = sub.add_parser("difference", help="two solver configurations on the same data")
    common(p, fmt=True)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--s", type=float, default=S)
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--pair", dest="configs", type=_dt, nargs=2, default=S, metavar="SCHEME:DT")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .solver import InstabilityError
    from .spectral import ParameterError, PreconditionError

    try:
        threads = _set_threads(args.threads)
        cfg = resolve(args.command, args)
        if isinstance(cfg.get("limits"), list):
            cfg["limits"] = dict(cfg["limits"])
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](cfg, threads)
    except UsageError as e:
        print(f"bolab {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, PreconditionError) as e:
        print(f"bolab {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InstabilityError as e:
        print(f"bolab {args.command}: {e}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as e:
        print(f"bolab {args.command}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
