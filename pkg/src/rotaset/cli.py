"""Command-line front end.

    rotaset estimate --builtin dissipative --grid 200 --schedule 1,10,100,1000
    rotaset experiment unlock --out runs/unlock

Exit codes: 0 ok, 2 configuration error, 3 map definition error,
4 numerical failure (search, packing, or an experiment missing its expected verdict).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .circle import CANONICAL, CircleLift, IdentityCase, NonMonotone, classify_rational_circle, \
    rotation_interval
from .conservative import ConservativeParams, DiskPackingFailed, UnsupportedMap, \
    build_example_conservative, build_unlocked_conservative
from .dissipative import DissipativeParams, SearchFailed, SupportOverlap, build_example, \
    build_unlocked, swapped
from .expr import build, build_from_text, load_map_file
from .fixed_points import NearZeroOnCircle, find_fixed_points, lefschetz_index
from .geometry import distance_to_polygon
from .maps import LiftedMap, MapDefinitionError, RationalVector, minus
from .report import g17, hull_csv, hulls_svg, summary_text
from .rotation import DEFAULT_BAND, Verdict, classify_rational, mz_estimate

EXIT_OK, EXIT_CONFIG, EXIT_MAP, EXIT_NUMERIC = 0, 2, 3, 4

BUILTIN_ALIASES = {
    "dissipative": "example_dissipative",
    "conservative": "example_conservative",
    "dissipative_unlocked": "unlocked_dissipative",
    "conservative_unlocked": "unlocked_conservative",
}

DEFAULTS = {
    "grid": 200,
    "schedule": [1, 10, 100, 1000],
    "seed": 0,
    "out": "rotaset_out",
    "workers": os.cpu_count() or 1,
    "cell": 0.05,
    "radius": 0.05,
    "center": [0.0, 0.0],
    "push_radius": 0.02,
    "lock_shift": 0.01,
    "N": 10_000,
    "circle_grid": 256,
}
# tolerances differ per command
TOL_DEFAULTS = {"estimate": DEFAULT_BAND, "classify": DEFAULT_BAND, "fixed-points": 1e-9,
                "index": 1e-9, "circle": 1e-3, "experiment": DEFAULT_BAND}
EXPERIMENTS = ("lock", "unlock", "lock_cons", "unlock_cons")


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------------

def _int_list(text):
    try:
        return [int(t) for t in str(text).replace(" ", "").split(",") if t]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text, n):
    vals = text if isinstance(text, (list, tuple)) else str(text).replace(" ", "").split(",")
    try:
        out = [float(v) for v in vals]
    except ValueError:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}") from None
    if len(out) != n:
        raise ConfigError(f"expected {n} numbers, got {text!r}")
    return out


def parse_rho(text) -> RationalVector:
    vals = text if isinstance(text, (list, tuple)) else _int_list(text)
    if len(vals) != 3:
        raise ConfigError(f"rho must be p,r,q, got {text!r}")
    try:
        return RationalVector(int(vals[0]), int(vals[1]), int(vals[2]))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def resolve_config(args: argparse.Namespace) -> dict:
    """Flags win over the JSON config file, which wins over the defaults."""
    cfg = dict(DEFAULTS)
    cfg["tol"] = TOL_DEFAULTS[args.command]
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(cfg) - {"map", "builtin", "rho", "p", "q"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "func"):
            cfg[key] = val
    if os.environ.get("ROTASET_OUT"):
        cfg["out"] = os.environ["ROTASET_OUT"]

    if isinstance(cfg["schedule"], str):
        cfg["schedule"] = _int_list(cfg["schedule"])
    sched = [int(n) for n in cfg["schedule"]]
    if not sched or sched[0] < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ConfigError("schedule must be increasing positive depths")
    cfg["schedule"] = sched
    for key in ("grid", "workers", "N", "circle_grid"):
        if int(cfg[key]) != cfg[key] or int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be a positive integer")
        cfg[key] = int(cfg[key])
    if cfg["grid"] < 2:
        raise ConfigError("grid must be >= 2")
    for key in ("tol", "cell", "radius", "push_radius", "lock_shift"):
        if not float(cfg[key]) > 0:
            raise ConfigError(f"{key} must be positive")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    cfg["center"] = _float_list(cfg["center"], 2)
    if cfg.get("map") and cfg.get("builtin"):
        raise ConfigError("give either --map or --builtin, not both")
    return cfg


def builtin_text(name: str) -> str:
    """'translation v=(0.3 0.7)' -> 'translation(v=(0.3 0.7))'; full expressions pass through."""
    head, _, rest = name.strip().partition(" ")
    if "(" in head:
        return name.strip()
    return f"{BUILTIN_ALIASES.get(head, head)}({rest})"


def load_map(cfg: dict):
    if cfg.get("map"):
        try:
            return build(load_map_file(cfg["map"]))
        except OSError as e:
            raise ConfigError(f"cannot read map file: {e}") from None
    if cfg.get("builtin"):
        return build_from_text(builtin_text(cfg["builtin"]))
    raise ConfigError("no map given (use --map FILE or --builtin NAME)")


def _torus_map(cfg) -> LiftedMap:
    f = load_map(cfg)
    if not isinstance(f, LiftedMap):
        raise MapDefinitionError("this command needs a torus map")
    return f


def _out_dir(cfg) -> Path:
    p = Path(cfg["out"])
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def _estimate(f, cfg):
    return mz_estimate(f, cfg["grid"], cfg["schedule"], cfg["seed"], workers=cfg["workers"])


def _write_estimate(est, out: Path, prefix: str = "", mark=None, queries=()):
    for n, h in est.hulls:
        _write(out / f"{prefix}hull_depth_{n}.csv", hull_csv(n, h))
    _write(out / f"{prefix}hulls.svg", hulls_svg(est, mark))
    _write(out / f"{prefix}summary.txt", summary_text(est, queries))


# -- commands ----------------------------------------------------------------------

def cmd_estimate(cfg) -> int:
    f = _torus_map(cfg)
    est = _estimate(f, cfg)
    queries, mark = [], None
    if cfg.get("rho"):
        rho = parse_rho(cfg["rho"])
        mark = rho.vector
        queries.append((f"{rho.p},{rho.r},{rho.q}", classify_rational(est, rho, cfg["tol"]).value))
    _write_estimate(est, _out_dir(cfg), mark=mark, queries=queries)
    deep = est.deepest
    print(f"depth {est.schedule[-1]}: {len(deep.vertices)} vertices, area {g17(deep.area())}")
    return EXIT_OK


def cmd_classify(cfg) -> int:
    if not cfg.get("rho"):
        raise ConfigError("classify needs --rho p,r,q")
    rho = parse_rho(cfg["rho"])
    f = _torus_map(cfg)
    est = _estimate(f, cfg)
    verdict = classify_rational(est, rho, cfg["tol"])
    out = _out_dir(cfg)
    key = f"{rho.p},{rho.r},{rho.q}"
    _write_estimate(est, out, mark=rho.vector, queries=[(key, verdict.value)])
    _write(out / "classification.txt",
           f"rho {key}\nband {g17(cfg['tol'])}\nverdict {verdict.value}\n")
    print(verdict.value)
    return EXIT_OK


def cmd_fixed_points(cfg) -> int:
    rho = parse_rho(cfg.get("rho") or "0,0,1")
    f = _torus_map(cfg)
    res = find_fixed_points(f, rho, cfg["cell"], cfg["tol"])
    out = _out_dir(cfg)
    _write(out / "fixed_points.csv", "x,y,p,r,q,residual\n" + "".join(
        f"{g17(r.z.x)},{g17(r.z.y)},{rho.p},{rho.r},{rho.q},{g17(r.residual)}\n"
        for r in res.records))
    _write(out / "unresolved.csv", "x,y,half_side\n" + "".join(
        f"{g17(c.center.x)},{g17(c.center.y)},{g17(c.half)}\n" for c in res.unresolved))
    print(f"{len(res.records)} fixed points, {len(res.unresolved)} unresolved cells")
    return EXIT_NUMERIC if res.budget_exhausted else EXIT_OK


def cmd_index(cfg) -> int:
    rho = parse_rho(cfg.get("rho") or "0,0,1")
    f = _torus_map(cfg)
    k = lefschetz_index(f, rho, cfg["center"], cfg["radius"])
    cx, cy = cfg["center"]
    _write(_out_dir(cfg) / "index.txt",
           f"center {g17(cx)} {g17(cy)}\nradius {g17(cfg['radius'])}\n"
           f"rho {rho.p},{rho.r},{rho.q}\nindex {k}\n")
    print(k)
    return EXIT_OK


def _circle_lift(cfg) -> CircleLift:
    if cfg.get("builtin") in CANONICAL:
        return CANONICAL[cfg["builtin"]][0]
    f = load_map(cfg)
    if not isinstance(f, CircleLift):
        raise MapDefinitionError("circle needs a circle map such as circle_trig(...)")
    return f


def cmd_circle(cfg) -> int:
    f = _circle_lift(cfg)
    p, q = int(cfg.get("p") or 0), int(cfg.get("q") or 1)
    if q < 1:
        raise ConfigError("q must be positive")
    cls = classify_rational_circle(f, p, q, cfg["circle_grid"], cfg["tol"])
    iv = rotation_interval(f, N=cfg["N"])
    out = _out_dir(cfg)
    _write(out / "circle_g.csv", cls.to_csv())
    _write(out / "circle_summary.txt",
           f"map {f.name}\np {p}\nq {q}\nverdict {cls.verdict.value}\n"
           f"g_min {g17(cls.g_min)}\ng_max {g17(cls.g_max)}\ngrid {cls.grid}\n"
           f"variation {g17(cls.variation)}\n"
           f"rotation_interval {g17(iv.lo)} {g17(iv.hi)}\ngrid_slack {g17(iv.grid_slack)}\n")
    print(cls.verdict.value)
    return EXIT_OK


def _experiment_maps(name, cfg):
    """(baseline map, perturbed map, expected verdict, extra report lines)."""
    cons = name.endswith("_cons")
    if cons:
        params = ConservativeParams()
        base = build_example_conservative(params)
    else:
        params = DissipativeParams()
        base = build_example(params)
    extra = []
    if name.startswith("lock"):
        t = cfg["lock_shift"]
        return base, minus(base, (-t, -t)), Verdict.OUTSIDE, [f"shift {g17(t)}"], None
    if cons:
        g, pair = build_unlocked_conservative(params, cfg["push_radius"])
    else:
        g, pair = build_unlocked(params, cfg["push_radius"])
    q, q2 = pair.q, swapped(pair).q
    extra += [f"push_radius {g17(cfg['push_radius'])}", f"q {q}", f"q_prime {q2}"]
    return base, g, Verdict.INTERIOR, extra, (q, q2)


def run_experiment(name: str, cfg: dict) -> tuple[bool, str]:
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    base, g, expected, extra, qs = _experiment_maps(name, cfg)
    rho0 = RationalVector(0, 0, 1)
    est0 = _estimate(base, cfg)
    est1 = _estimate(g, cfg)
    verdict0 = classify_rational(est0, rho0, cfg["tol"])
    verdict = classify_rational(est1, rho0, cfg["tol"])
    lines = [f"experiment {name}", f"grid {cfg['grid']}",
             f"schedule {','.join(map(str, cfg['schedule']))}", f"seed {cfg['seed']}",
             f"band {g17(cfg['tol'])}", *extra,
             f"baseline_verdict {verdict0.value}"]
    ok = verdict == expected
    if expected is Verdict.OUTSIDE:
        fp = find_fixed_points(g, rho0, cfg["cell"])
        lines += [f"fixed_points {len(fp.records)}", f"unresolved {len(fp.unresolved)}"]
        ok = ok and not fp.records and not fp.unresolved
    else:
        q, q2 = qs
        deep = est1.deepest
        for label, v in (("minus_x", (-1 / q, 0.0)), ("minus_y", (0.0, -1 / q2)),
                         ("e1", (1.0, 0.0)), ("e2", (0.0, 1.0))):
            lines.append(f"distance_{label} {g17(distance_to_polygon(deep, v))}")
    lines += [f"expected {expected.value}", f"observed {verdict.value}",
              f"status {'PASS' if ok else 'FAIL'}"]
    out = _out_dir(cfg)
    _write_estimate(est0, out, "baseline_", mark=(0.0, 0.0))
    _write_estimate(est1, out, "perturbed_", mark=(0.0, 0.0),
                    queries=[("0,0,1", verdict.value)])
    text = "\n".join(lines) + "\n"
    _write(out / f"verdict_{name}.txt", text)
    return ok, text


def cmd_experiment(cfg) -> int:
    ok, text = run_experiment(cfg["name"], cfg)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_NUMERIC


# -- entry point -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--map", help="map expression file (.map)")
    src.add_argument("--builtin", help="built-in map, e.g. 'dissipative' or 'translation v=(0.3 0.7)'")
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--grid", type=int, help="seed grid points per axis")
    p.add_argument("--schedule", type=_int_list, help="iteration depths, e.g. 1,10,100,1000")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="output directory (ROTASET_OUT overrides)")
    p.add_argument("--workers", type=int)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotaset", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="nested hulls of mean displacements")
    _common(p)
    p.add_argument("--rho", help="rational vector p,r,q to mark and classify")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("classify", help="classify a rational vector against the estimate")
    _common(p)
    p.add_argument("--rho", help="p,r,q")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("fixed-points", help="zeros of f^q - Id - (p, r)")
    _common(p)
    p.add_argument("--rho", help="p,r,q (default 0,0,1)")
    p.add_argument("--cell", type=float, help="initial cell side")
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("index", help="winding number of the displacement on a circle")
    _common(p)
    p.add_argument("--rho", help="p,r,q (default 0,0,1)")
    p.add_argument("--center", help="x,y")
    p.add_argument("--radius", type=float)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("circle", help="sign test of f^q - p - Id for a circle map")
    _common(p)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--N", type=int, help="iterations for the rotation interval")
    p.set_defaults(func=cmd_circle)

    p = sub.add_parser("experiment", help="lock / unlock pipelines on the built-in examples")
    _common(p)
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--push-radius", dest="push_radius", type=float)
    p.add_argument("--cell", type=float)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(cfg)
    except ConfigError as e:
        print(f"rotaset: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MapDefinitionError as e:
        print(f"rotaset: map error: {e}", file=sys.stderr)
        return EXIT_MAP
    except (DiskPackingFailed, SearchFailed, SupportOverlap, NearZeroOnCircle, IdentityCase,
            NonMonotone, UnsupportedMap) as e:
        print(f"rotaset: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
