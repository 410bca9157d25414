"""Command-line front end.

Subcommands map one-to-one onto the canned experiment runners, plus
`approximate` for fitting user samples from a file.  Options may also be
supplied through a plain key=value config file; explicit command-line
flags win over file values.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ExperimentConfig,
    RUNNERS,
    SWEEP_GAMMAS,
    run_approximate,
)

_DEFAULT_BASIS = {
    "aliasing": "fourier",
    "weight-sweep": "chebyshev",
    "compare": "legendre",
    "diagnostics": "legendre",
    "approximate": "legendre",
}


def _int_list(text: str):
    return tuple(int(tok) for tok in str(text).split(",") if tok.strip())


def _float_list(text):
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _load_config(path) -> dict:
    """key=value pairs, one per line; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("bad config line %r" % raw.strip())
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _add_common(sp: argparse.ArgumentParser, command: str, file_vals: dict,
                ) -> None:
    def dflt(dest, fallback):
        return file_vals.get(dest, fallback)

    sp.add_argument("--config", default=None,
                    help="key=value file supplying option defaults")
    sp.add_argument("--basis", default=dflt("basis", _DEFAULT_BASIS[command]),
                    help="legendre | chebyshev | fourier | jacobi:a,b")
    sp.add_argument("--points", default=dflt("points", "equispaced"),
                    help="equispaced | jittered | uniform_random | "
                         "chebyshev | file | file:PATH")
    sp.add_argument("--points-file", default=dflt("points_file", None),
                    help="point file used with --points file")
    sp.add_argument("--n", default=dflt("n", "10,20,40,80"),
                    help="comma-separated sample counts")
    sp.add_argument("--m", default=dflt("m", "5,8"),
                    help="comma-separated block sizes (diagnostics)")
    sp.add_argument("--k", default=dflt("k", "4n"),
                    help="truncation rule: 4n | choose | an integer")
    sp.add_argument("--gamma", default=dflt("gamma", "0.5"),
                    help="weight growth exponent")
    sp.add_argument("--gammas",
                    default=dflt("gammas",
                                 ",".join("%g" % g for g in SWEEP_GAMMAS)),
                    help="comma-separated exponent grid (weight-sweep)")
    sp.add_argument("--epsilon", default=dflt("epsilon", "0.5"),
                    help="singular-value margin for --k choose")
    sp.add_argument("--eta", default=dflt("eta", "0"),
                    help="noise-ball radius; 0 solves the equality problem")
    sp.add_argument("--noise",
                    default=dflt("noise",
                                 "1e-8" if command == "compare" else "0"),
                    help="uniform perturbation magnitude")
    sp.add_argument("--seed", default=dflt("seed", "0"), help="master seed")
    sp.add_argument("--amplitude", default=dflt("amplitude", "1.0"),
                    help="jitter amplitude in cell widths")
    sp.add_argument("--resolution", default=dflt("resolution", "10000"),
                    help="evaluation grid size for error measurement")
    sp.add_argument("--out", default=dflt("out", "."),
                    help="output directory")
    sp.add_argument("--relax-weights", action="store_const", const=True,
                    default=dflt("relax_weights", False),
                    help="allow weights below the sup-norm floor")
    sp.add_argument("--functions", default=dflt("functions", None),
                    help="comma-separated test function ids")


def build_parser(file_vals: dict | None = None) -> argparse.ArgumentParser:
    file_vals = file_vals or {}
    ap = argparse.ArgumentParser(
        prog="wl1approx",
        description="Function approximation from scattered data by "
                    "weighted l1 minimization and least squares.")
    sub = ap.add_subparsers(dest="command", required=True)
    for command in ("aliasing", "weight-sweep", "compare", "diagnostics"):
        sp = sub.add_parser(command)
        _add_common(sp, command, file_vals)
    sp = sub.add_parser("approximate")
    _add_common(sp, "approximate", file_vals)
    sp.add_argument("samples", help="two-column file of t and y values")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    experiment = args.command.replace("-", "_")
    points = args.points
    points_file = args.points_file
    if points.startswith("file:"):
        points_file = points.split(":", 1)[1]
        points = "file"
    functions = None
    if args.functions:
        functions = tuple(tok.strip() for tok in args.functions.split(",")
                          if tok.strip())
    return ExperimentConfig(
        experiment=experiment,
        basis=args.basis,
        points=points,
        points_file=points_file,
        n_list=_int_list(args.n),
        m_list=_int_list(args.m),
        gamma_list=_float_list(args.gammas),
        gamma=float(args.gamma),
        k_rule=str(args.k),
        epsilon=float(args.epsilon),
        eta=float(args.eta),
        noise=float(args.noise),
        seed=int(args.seed),
        out_dir=args.out,
        eval_resolution=int(args.resolution),
        relax_weights=_bool(args.relax_weights),
        amplitude=float(args.amplitude),
        functions=functions,
    )


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if args.config:
        # File values become defaults, then explicit flags win on re-parse.
        args = build_parser(_load_config(args.config)).parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "approximate":
            paths = run_approximate(cfg, args.samples)
        else:
            paths = RUNNERS[cfg.experiment](cfg)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    for name in sorted(paths):
        print("%s %s" % (name, paths[name]))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
