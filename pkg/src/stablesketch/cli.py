"""``stablesketch`` command-line interface.

Exit codes: 0 success, 2 usage error, 3 domain/validity error, 4 I/O error.
Every option may also come from a ``--config`` file of ``key = value`` lines;
flags given on the command line win.
"""

import argparse
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bounds, calibration, estimators, experiments, projector
from ._validation import DomainError, check_int, check_uint64

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


# option name -> (type, default); ``None`` default means "not set"
_GLOBAL = {
    "seed": (int, None),
    "alpha": (float, None),
    "k": (str, None),
    "beta": (str, None),
    "mu": (float, 1.0),
    "mode": (str, projector.DENSE),
    "output": (str, "-"),
}

_COMMAND_OPTS = {
    "gen": {"n": (int, 1), "D": (int, None), "eta": (float, 2.0)},
    "sketch": {"input": (str, None), "D": (int, None), "row": (int, None), "empty": (bool, False)},
    "update": {"sketch": (str, None), "updates": (str, "-"), "accumulation": (str, projector.FAST)},
    "estimate": {"method": (str, estimators.GM), "calibration": (str, None)},
    "bounds": {"epsilon": (float, None), "k0": (int, 100)},
    "plan": {"n": (int, None), "epsilon": (float, None), "delta": (float, 0.05)},
    "experiment": {
        "eta": (float, 2.0), "D": (str, None), "beta_rule": (str, "D-power:0.5"),
        "trials": (int, 10_000), "n_jobs": (int, 1),
    },
    "calibrate-median": {"draws": (int, calibration.DEFAULT_DRAWS), "cache": (str, None)},
}


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_option(parser, name, typ):
    flag = "--" + name.replace("_", "-")
    if typ is bool:
        parser.add_argument(flag, dest=name, action="store_const", const=True, default=None)
    else:
        parser.add_argument(flag, dest=name, default=None)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="file of 'key = value' lines")
    for name, (typ, _) in _GLOBAL.items():
        _add_option(common, name, typ)

    parser = argparse.ArgumentParser(prog="stablesketch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gen": "write n x D symmetric Pareto(eta, 1) vectors as CSV",
        "sketch": "project CSV vectors (or an empty vector) into sketch files",
        "update": "apply a '<index> <delta>' update stream to a sketch",
        "estimate": "estimate the l_alpha distance between two sketches",
        "bounds": "tail-bound constants at (alpha, epsilon, k0)",
        "plan": "sample size k for n points at accuracy epsilon, failure delta",
        "experiment": "run a synthetic Monte Carlo experiment to CSV",
        "calibrate-median": "Monte Carlo median constant for the median estimator",
    }
    for cmd, opts in _COMMAND_OPTS.items():
        p = sub.add_parser(cmd, parents=[common], help=helps[cmd])
        for name, (typ, _) in opts.items():
            _add_option(p, name, typ)
        if cmd == "estimate":
            p.add_argument("sketches", nargs=2, metavar="SKETCH")
        elif cmd == "experiment":
            p.add_argument("name", choices=experiments.EXPERIMENTS)
    return parser


def resolve(args):
    """Merge flags, config file and defaults into a plain dict of typed values."""
    config = read_config(args.config) if args.config else {}
    opts = {**_GLOBAL, **_COMMAND_OPTS[args.command]}
    unknown = set(config) - set(opts)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for name, (typ, default) in opts.items():
        value = getattr(args, name, None)
        if value is None:
            value = config.get(name)
        if value is None:
            out[name] = default
            continue
        try:
            if typ is bool:
                out[name] = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
            elif typ is int:
                out[name] = int(value)
            else:
                out[name] = typ(value)
        except ValueError:
            raise UsageError(f"bad value for {name}: {value!r}") from None
    return out


def _require(opts, *names):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _int_list(text):
    """``10,20,30`` or ``start:stop:step`` (inclusive stop)."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def _int(text, name):
    try:
        return check_int(int(str(text).strip()), name, minimum=1)
    except ValueError:
        raise UsageError(f"bad integer for {name}: {text!r}") from None


def _open_out(path):
    if path in (None, "-"):
        return _Stdout()
    return open(path, "w")


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()


def _write_rows(opts, columns, rows, header):
    with _open_out(opts["output"]) as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {value}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def read_vectors(path):
    """Numeric CSV, one vector per row; ``#`` lines are comments."""
    src = sys.stdin if path == "-" else path
    try:
        data = np.loadtxt(src, delimiter=",", comments="#", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise DomainError(f"cannot parse vector CSV {path}: {exc}") from None
    if data.size == 0:
        raise DomainError(f"no vectors in {path}")
    return data


def _spec(opts, D):
    _require(opts, "seed", "alpha", "k")
    mode = opts["mode"]
    beta = 1.0
    if mode == projector.SPARSE:
        if opts["beta"] in (None, "auto"):
            beta = float(D) ** -0.5
        else:
            beta = float(opts["beta"])
    return projector.ProjectionSpec(
        opts["alpha"], _int(opts["k"], "k"), D, opts["seed"], mode, beta, opts["mu"]
    )


# -- commands ------------------------------------------------------------------


def cmd_gen(opts):
    _require(opts, "seed", "D")
    data = experiments.pareto_data(opts["n"], opts["D"], opts["eta"], check_uint64(opts["seed"], "seed"))
    header = {"command": "gen", "n": opts["n"], "D": opts["D"], "eta": opts["eta"], "seed": opts["seed"]}
    with _open_out(opts["output"]) as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {value}\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def cmd_sketch(opts):
    if opts["output"] in (None, "-"):
        raise UsageError("sketch needs --output PATH for the binary sketch file")
    if opts["empty"]:
        _require(opts, "D")
        spec = _spec(opts, opts["D"])
        projector.save_sketch(opts["output"], projector.Sketch.zeros(spec), spec)
        return
    _require(opts, "input")
    data = read_vectors(opts["input"])
    D = data.shape[1] if opts["D"] is None else opts["D"]
    spec = _spec(opts, D)
    if opts["row"] is not None:
        if not 0 <= opts["row"] < data.shape[0]:
            raise DomainError(f"row {opts['row']} out of range 0..{data.shape[0] - 1}")
        rows = [(opts["row"], Path(opts["output"]))]
    elif data.shape[0] == 1:
        rows = [(0, Path(opts["output"]))]
    else:
        out = Path(opts["output"])
        rows = [(i, out.with_name(f"{out.stem}.{i}{out.suffix}")) for i in range(data.shape[0])]
    for i, path in rows:
        projector.save_sketch(path, projector.project_vector(spec, data[i]), spec)


def cmd_update(opts):
    _require(opts, "sketch")
    sketch, spec = projector.load_sketch(opts["sketch"])
    if opts["updates"] == "-":
        idx, deltas = projector.read_update_stream(sys.stdin)
    else:
        with open(opts["updates"]) as fh:
            idx, deltas = projector.read_update_stream(fh)
    sketch.apply_updates(spec, idx, deltas, accumulation=opts["accumulation"])
    out = opts["sketch"] if opts["output"] in (None, "-") else opts["output"]
    projector.save_sketch(out, sketch, spec)


def cmd_estimate(opts):
    a, spec_a = projector.load_sketch(opts["sketches"][0])
    b, spec_b = projector.load_sketch(opts["sketches"][1])
    if spec_a != spec_b:
        raise DomainError("sketches were built under different projection specs")
    table = calibration.read_calibration(opts["calibration"] or calibration.default_cache_path())
    beta = spec_a.beta if spec_a.sparse else None
    est = estimators.estimate(
        projector.sketch_diff(a, b).values, spec_a.alpha, opts["method"],
        beta=beta, mu=spec_a.mu, calibration=table,
    )
    sd = math.nan if est.theoretical_sd is None else est.theoretical_sd
    header = {"command": "estimate", "a": opts["sketches"][0], "b": opts["sketches"][1],
              "mode": spec_a.mode, "seed": spec_a.seed}
    _write_rows(opts, ["method", "alpha", "k", "estimate", "theoretical_sd", "sparse_normalized"],
                [(est.method, spec_a.alpha, est.k, est.value, sd, est.sparse_normalized)], header)


def cmd_bounds(opts):
    _require(opts, "alpha", "epsilon")
    k = None if opts["k"] is None else _int(opts["k"], "k")
    r = bounds.bound_report(opts["alpha"], opts["epsilon"], opts["k0"], k)
    columns = ["alpha", "epsilon", "k0", "c_alpha", "m_right", "m_left", "g_right", "g_left"]
    row = [r.alpha, r.epsilon, r.k0, r.c_alpha, r.m_right, r.m_left, r.g_right, r.g_left]
    if k is not None:
        columns += ["k", "right_prob", "left_prob"]
        row += [k, r.right_prob(), r.left_prob()]
    _write_rows(opts, columns, [row], {"command": "bounds"})


def cmd_plan(opts):
    _require(opts, "n", "epsilon", "alpha")
    plan = bounds.plan_sample_size(opts["n"], opts["epsilon"], opts["delta"], opts["alpha"])
    header = {"command": "plan", "n": opts["n"], "epsilon": opts["epsilon"],
              "delta": opts["delta"], "alpha": opts["alpha"]}
    _write_rows(opts, ["k", "k0", "failure_bound", "m_right", "m_left"],
                [(plan.k, plan.k0, plan.failure_bound, plan.report.m_right, plan.report.m_left)], header)


def cmd_experiment(opts):
    _require(opts, "seed")
    kw = {"name": opts["name"], "seed": opts["seed"], "eta": opts["eta"], "beta_rule": opts["beta_rule"],
          "trials": opts["trials"], "n_jobs": opts["n_jobs"], "mu": opts["mu"], "output": opts["output"]}
    if opts["alpha"] is not None:
        kw["alpha"] = opts["alpha"]
    if opts["D"] is not None:
        kw["D"] = _int_list(opts["D"])
    if opts["k"] is not None:
        kw["k"] = _int_list(opts["k"])
    elif opts["name"] in ("fig9-ratio", "fig10-mle"):
        kw["k"] = list(range(5, 102, 2)) if opts["name"] == "fig9-ratio" else list(range(3, 101))
    experiments.run_to_file(experiments.ExperimentConfig(**kw))


def cmd_calibrate_median(opts):
    _require(opts, "seed", "alpha")
    cache = opts["cache"] or calibration.default_cache_path()
    entry = calibration.calibrate_median(opts["alpha"], opts["draws"], opts["seed"])
    calibration.write_calibration(cache, [entry])
    _write_rows(opts, list(asdict(entry)), [tuple(asdict(entry).values())],
                {"command": "calibrate-median", "cache": cache})


_COMMANDS = {
    "gen": cmd_gen,
    "sketch": cmd_sketch,
    "update": cmd_update,
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "plan": cmd_plan,
    "experiment": cmd_experiment,
    "calibrate-median": cmd_calibrate_median,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        opts = resolve(args)
        for extra in ("sketches", "name"):
            if hasattr(args, extra):
                opts[extra] = getattr(args, extra)
        _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"stablesketch: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except projector.SketchFormatError as exc:
        print(f"stablesketch: bad sketch file: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"stablesketch: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"stablesketch: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
