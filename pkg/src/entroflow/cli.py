"""Command-line entry point: ``entroflow <command> [flags]``.

Exit codes: 0 when every check passes, 1 when a mathematical violation is
found, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .entropy import cal_H_p, entropy_p
from .errors import EntroflowError, UsageError
from .evolution import sample_trajectory
from .field import SpectralField, default_dense_grid, estimate_bounds, synthesize
from .hermite import default_quad_order, gauss_hermite_rule
from .inequalities import (
    check_all,
    decay_experiment,
    decay_table_csv,
    envelope_violations,
    random_admissible,
    sharpness_scan,
)
from .potential import PotentialSpec, discretize, spectrum

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "d": 1, "degree": None, "quad_order": None, "n": None, "p": "1", "eps": 0.3, "amps": None,
    "k": None, "family": "bump", "t0": 0.0, "t1": 2.0, "t_steps": 41, "seed": 0, "seeds": None,
    "sweeps": 10, "potential": "harmonic", "points": 2001, "m": 6, "half_width": None,
    "out": "entroflow-out", "workers": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(sp):
    sp.add_argument("--config", help="JSON file with flag values; explicit flags win")
    sp.add_argument("--out", help="output directory")


def _field_flags(sp):
    sp.add_argument("--d", type=int, help="space dimension")
    sp.add_argument("--degree", type=int, help="maximal total degree")
    sp.add_argument("--quad-order", dest="quad_order", type=int)
    sp.add_argument("--n", type=int, help="moment order (required, flag or config)")
    sp.add_argument("--p", help="comma separated exponents in [1, 2]")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--seed", type=int)


def _time_flags(sp):
    sp.add_argument("--t0", type=float)
    sp.add_argument("--t1", type=float)
    sp.add_argument("--t-steps", dest="t_steps", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entroflow", description="Entropy decay laboratory for Ornstein-Uhlenbeck flows.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.commands = sub.choices

    sp = sub.add_parser("simulate", help="evolve seeded admissible data and export the trajectory")
    _common(sp)
    _field_flags(sp)
    _time_flags(sp)
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("inequality", help="sweep the functional inequalities on random fields")
    _common(sp)
    _field_flags(sp)
    sp.add_argument("--sweeps", type=int)

    sp = sub.add_parser("decay", help="fit decay rates and test the envelopes")
    _common(sp)
    _field_flags(sp)
    _time_flags(sp)
    sp.add_argument("--seeds", help="comma separated seeds (overrides --seed)")

    sp = sub.add_parser("sharpness", help="tightness of the improved log-Sobolev bound")
    _common(sp)
    sp.add_argument("--n", type=int, help="moment order (required, flag or config)")
    sp.add_argument("--k", help="comma separated multi-index with |k| = n (default: (n,))")
    sp.add_argument("--amps", help="comma separated decreasing amplitude ladder")
    sp.add_argument("--family", choices=["bump", "polynomial"])
    sp.add_argument("--quad-order", dest="quad_order", type=int)

    sp = sub.add_parser("spectrum", help="lowest eigenvalues of a general-potential operator")
    _common(sp)
    sp.add_argument("--potential", help="preset name: harmonic or double_well")
    sp.add_argument("--d", type=int)
    sp.add_argument("--points", type=int, help="grid points per axis")
    sp.add_argument("-m", type=int, dest="m", help="number of eigenpairs")
    sp.add_argument("--half-width", dest="half_width", type=float, help="box half width L")

    sp = sub.add_parser("plot", help="emit a plotting script for a CSV report")
    sp.add_argument("report", help="CSV written by another command")
    sp.add_argument("--out", help="script path (default: report path with .py suffix)")
    sp.add_argument("--n", type=int, default=2, help="moment order for the envelope line")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the JSON config file and explicit flags (in increasing priority)."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for key, val in vars(args).items():
        if val is not None and key != "config":
            cfg[key] = val
    if cfg.get("n") is None and args.command in ("simulate", "inequality", "decay", "sharpness"):
        raise UsageError("--n is required")
    return cfg


def _floats(text, name) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--{name} expects a comma separated list of numbers") from exc


def _ints(text, name) -> list:
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise UsageError(f"--{name} expects integers")
    return [int(v) for v in vals]


def _validate(cfg):
    if cfg["d"] not in (1, 2, 3):
        raise UsageError("--d must be 1, 2 or 3")
    if cfg.get("n") is not None and cfg["n"] < 1:
        raise UsageError("--n must be >= 1")
    ps = _floats(cfg["p"], "p")
    if not ps or any(not 1.0 <= p <= 2.0 for p in ps):
        raise UsageError("--p values must lie in [1, 2]")
    if not 0.0 <= cfg["eps"] < 1.0:
        raise UsageError("--eps must lie in [0, 1)")
    if cfg["t_steps"] < 8 or cfg["t1"] <= cfg["t0"] or cfg["t0"] < 0:
        raise UsageError("time grid needs 0 <= t0 < t1 and at least 8 steps")
    cfg["p"] = ps
    if cfg["degree"] is None and cfg.get("n") is not None:
        cfg["degree"] = cfg["n"] + 2
    if cfg["degree"] is not None and cfg.get("n") is not None and cfg["degree"] < cfg["n"]:
        raise UsageError("--degree must be >= --n")
    return cfg


def _t_grid(cfg):
    return np.linspace(cfg["t0"], cfg["t1"], cfg["t_steps"])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    """UTF-8 JSON with sorted keys; floats use the shortest round-trip repr."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _initial_field(cfg):
    if cfg["eps"] == 0.0:
        return None, SpectralField.constant(cfg["d"], cfg["degree"])
    af = random_admissible(cfg["n"], cfg["eps"], cfg["degree"], cfg["seed"], cfg["d"], cfg["quad_order"])
    return af, af.field


def cmd_simulate(cfg) -> int:
    af, f0 = _initial_field(cfg)
    quad = cfg["quad_order"] or default_quad_order(cfg["degree"])
    traj = sample_trajectory(f0, _t_grid(cfg), cfg["p"], quad, cfg["workers"])
    rule = gauss_hermite_rule(quad, cfg["d"])
    bounds = estimate_bounds(f0, default_dense_grid(cfg["d"], cfg["degree"], rule), rule)
    n = cfg["n"]
    summary = {
        "seed": cfg["seed"], "n": n, "eps": cfg["eps"], "dimension": cfg["d"], "max_degree": cfg["degree"],
        "quad_order": quad, "recipe": "constant" if af is None else "random_admissible",
        "H_1_0": cal_H_p(bounds, 1.0), "E_p_0": {}, "H_p_0": {}, "fitted_rates": {}, "envelopes": {},
    }
    ok = True
    e1 = traj.column("E_1")
    _, bad = envelope_violations(traj.times, e1, n / summary["H_1_0"])
    summary["envelopes"]["E_1_n_over_H1"] = not bool(bad.any())
    ok &= summary["envelopes"]["E_1_n_over_H1"]
    for p in cfg["p"]:
        key = format(p, "g")
        summary["E_p_0"][key] = entropy_p(synthesize(f0, rule), p)
        summary["H_p_0"][key] = cal_H_p(bounds, p)
        if af is None:
            summary["fitted_rates"][key] = None
            summary["envelopes"][key] = {"trivial": True}
            continue
        fit = decay_experiment(af, p, traj.times, n=n)
        summary["fitted_rates"][key] = fit.fitted_rate
        summary["envelopes"][key] = dict(fit.envelopes)
        ok &= fit.envelope_ok
    out = Path(cfg["out"])
    write_atomic(out / "trajectory.csv", traj.to_csv())
    write_atomic(out / "summary.json", dumps(summary))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_inequality(cfg) -> int:
    if cfg["eps"] == 0.0:
        raise UsageError("--eps must be positive for inequality sweeps")
    if cfg["sweeps"] < 1:
        raise UsageError("--sweeps must be >= 1")
    reports = []
    for i in range(cfg["sweeps"]):
        af = random_admissible(cfg["n"], cfg["eps"], cfg["degree"], cfg["seed"] + i, cfg["d"], cfg["quad_order"])
        reports += [r.to_dict() for r in check_all(af, cfg["n"], cfg["p"])]
    write_atomic(Path(cfg["out"]) / "inequality.json", dumps(reports))
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_VIOLATION


def cmd_decay(cfg) -> int:
    if cfg["eps"] == 0.0:
        raise UsageError("--eps must be positive for decay fits")
    seeds = _ints(cfg["seeds"], "seeds") if cfg["seeds"] is not None else [cfg["seed"]]
    fits = []
    for s in seeds:
        af = random_admissible(cfg["n"], cfg["eps"], cfg["degree"], s, cfg["d"], cfg["quad_order"])
        fits += [decay_experiment(af, p, _t_grid(cfg), n=cfg["n"]) for p in cfg["p"]]
    write_atomic(Path(cfg["out"]) / "decay.csv", decay_table_csv(fits))
    return EXIT_OK if all(f.envelope_ok for f in fits) else EXIT_VIOLATION


def cmd_sharpness(cfg) -> int:
    n = cfg["n"]
    k = tuple(_ints(cfg["k"], "k")) if cfg["k"] is not None else (n,)
    amps = _floats(cfg["amps"] if cfg["amps"] is not None else "0.2,0.1,0.05,0.02,0.01", "amps")
    scan = sharpness_scan(n, k, amps, cfg["family"], cfg["quad_order"])
    write_atomic(Path(cfg["out"]) / "sharpness.csv", scan.to_csv())
    return EXIT_OK


def cmd_spectrum(cfg) -> int:
    if cfg["d"] not in (1, 2):
        raise UsageError("general potentials support --d 1 or 2")
    pot = PotentialSpec(cfg["d"], cfg["potential"])
    op = discretize(pot, cfg["points"], cfg["half_width"])
    spec = spectrum(op, cfg["m"], gap_tol=1e-6 if cfg["d"] == 1 else "auto")
    write_atomic(Path(cfg["out"]) / "spectrum.csv", spec.to_csv())
    return EXIT_OK


_PLOT_KINDS = {
    "trajectory": {"t", "E_1", "H_1"},
    "sharpness": {"amplitude", "tightness"},
    "decay": {"fitted_rate", "rate_4_over_pK"},
    "spectrum": {"eigenvalue", "degeneracy_group"},
}

_PLOT_HEAD = '''"""Plot script generated by entroflow from {src}."""
import csv
import math

import matplotlib.pyplot as plt

with open({src!r}, newline="") as fh:
    rows = list(csv.DictReader(fh))


def col(name):
    return [float(r[name]) for r in rows if r[name] not in ("", "nan")]


fig, ax = plt.subplots()
'''

_PLOT_BODY = {
    "trajectory": '''t, e1, h1 = col("t"), col("E_1"), col("H_1")
n = {n}
ax.semilogy(t, e1, "o-", label="E_1(t)")
ax.semilogy(t, [e1[0] * math.exp(-n * s / h1[0]) for s in t], "--", label="E_1(0) exp(-n t / H_1[w0])")
ax.set_xlabel("t")
ax.set_ylabel("entropy")
''',
    "sharpness": '''a, tight = col("amplitude"), col("tightness")
ax.semilogx(a, tight, "o-", label="tightness")
ax.axhline(1.0, color="k", linestyle=":", label="asymptote")
ax.invert_xaxis()
ax.set_xlabel("amplitude")
ax.set_ylabel("E_1 n / (H_1 I_1)")
''',
    "decay": '''idx = range(len(rows))
for name in ("fitted_rate", "rate_2lambda", "rate_4_over_pK", "rate_np_over_Hp"):
    ax.plot(list(idx), col(name), "o", label=name)
ax.set_xlabel("row")
ax.set_ylabel("rate")
''',
    "spectrum": '''ax.plot(col("index"), col("eigenvalue"), "o", label="eigenvalue")
ax.set_xlabel("index")
ax.set_ylabel("lambda")
''',
}

_PLOT_TAIL = '''ax.legend()
fig.savefig({target!r})
'''


def cmd_plot(report, out=None, n=2) -> int:
    path = Path(report)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            first = next(reader, None)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise UsageError(f"cannot read report {report}: {exc}") from exc
    if not header or first is None:
        raise UsageError(f"report {report} is empty")
    if len(first) != len(header):
        raise UsageError(f"report {report} is malformed")
    kind = next((k for k, cols in _PLOT_KINDS.items() if cols <= set(header)), None)
    if kind is None:
        raise UsageError(f"report {report} has an unknown schema")
    src = str(path.resolve())
    script = (_PLOT_HEAD.format(src=src) + _PLOT_BODY[kind].format(n=n)
              + _PLOT_TAIL.format(target=str(path.with_suffix(".png").resolve())))
    write_atomic(Path(out) if out else path.with_suffix(".py"), script)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "inequality": cmd_inequality,
    "decay": cmd_decay,
    "sharpness": cmd_sharpness,
    "spectrum": cmd_spectrum,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "plot":
            return cmd_plot(args.report, args.out, args.n)
        try:
            cfg = resolve(args)
        except UsageError:
            parser.commands[args.command].print_usage(sys.stderr)
            raise
        if args.command not in ("spectrum", "sharpness"):
            _validate(cfg)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"entroflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EntroflowError as exc:
        print(f"entroflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
