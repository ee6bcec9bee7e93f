"""Command-line entry point: ``epochdd <subcommand> [flags]``.

Exit codes: 0 on success, 1 on invalid configuration or input, 2 on a
numerical failure (divergence, degenerate Gram matrix, failed SVD).
Output files are written under ``--out`` only.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from ._random import check_seed, make_rng
from ._validation import log_grid
from .exceptions import ConfigError, NumericalError
from .gd import StepsizeSchedule, risk_expression
from .io import write_columns
from .jacobian_analysis import layer_split_svd
from .kernels import gram_matrix, gram_to_csv, spectrum
from .linear_model import LinearModelSpec
from .stepsize import optimal_stepsizes, u_min_value
from .two_layer import init_params, jacobian, train


def _seed(text):
    try:
        return check_seed(int(text))
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}: need an unsigned 64-bit integer")


def _read_json(path, key):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", key=key) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}", key=key) from None


def _load_spec(path):
    if path is None:
        raise ConfigError("--spec is required", key="spec")
    data = _read_json(path, "spec")
    if not isinstance(data, dict):
        raise ConfigError("spec file must hold a JSON object", key="spec")
    for key in ("feature_stds", "theta_star"):
        if key not in data:
            raise ConfigError(f"spec file is missing {key!r}", key=key)
    unknown = set(data) - {"d", "feature_stds", "theta_star", "noise_std"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown spec key {key!r}", key=key)
    try:
        return LinearModelSpec.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid spec: {exc}", key="spec") from None


def _load_etas(path, d):
    if path is None:
        raise ConfigError("--etas is required", key="etas")
    data = _read_json(path, "etas")
    etas = data.get("etas") if isinstance(data, dict) else data
    if etas is None:
        raise ConfigError("etas file must hold a list or an object with key 'etas'", key="etas")
    try:
        schedule = StepsizeSchedule(etas)
        schedule.check_dim(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid etas: {exc}", key="etas") from None
    return schedule


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"{flag} is required", key=name)


def _positive(args, *names):
    for name in names:
        value = getattr(args, name)
        if value is not None and value <= 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive", key=name)


def _experiment(name, args):
    if args.config is not None:
        config = experiments.load_config(args.config, name=name)
        overrides = dict(config.overrides)
    else:
        overrides = {}
    if getattr(args, "scale", None) is not None:
        overrides["scale"] = args.scale
    config = experiments.ExperimentConfig(name, overrides, args.seed, args.out)
    experiments.run(config)


def cmd_fig2(args):
    _experiment("fig2", args)


def cmd_fig3(args):
    _experiment("fig3", args)


def cmd_appendix_a(args):
    _experiment("appendix_a", args)


def cmd_risk_curve(args):
    _require(args, "n", "t_max")
    _positive(args, "n", "t_max")
    spec = _load_spec(args.spec)
    schedule = _load_etas(args.etas, spec.d)
    curve = risk_expression(spec, schedule, args.n, log_grid(args.t_max))
    curve.to_csv(Path(args.out) / "risk_curve.csv")


def cmd_optimal_stepsizes(args):
    _require(args, "n", "t_target")
    _positive(args, "n", "t_target")
    spec = _load_spec(args.spec)
    try:
        schedule = optimal_stepsizes(spec, args.n, args.t_target)
    except ValueError as exc:
        raise ConfigError(str(exc), key="spec") from None
    write_columns(
        Path(args.out) / "stepsizes.csv",
        {
            "i": np.arange(1, spec.d + 1),
            "eta": schedule.etas,
            "u_min": [u_min_value(spec, args.n, i) for i in range(1, spec.d + 1)],
        },
    )


def _network_data(args):
    p = dict(experiments.FIG3_DEFAULTS)
    p = {key: value for key, (value, _) in p.items()}
    p.update(d=args.d, decay_ratio=args.decay_ratio, n_train=args.n, n_test=args.n_test,
             noise_std=args.noise_std)
    return experiments.fig3_data(p, args.seed)


def cmd_train_two_layer(args):
    _positive(args, "d", "k", "n", "n_test", "decay_ratio", "t_max")
    _positive(args, "omega", "nu", "eta_w", "eta_v")
    (x, y), test_set, init_seed = _network_data(args)
    params = init_params(args.d, args.k, args.omega, args.nu, init_seed)
    _, log = train(params, x, y, args.eta_w, args.eta_v, args.t_max, log_grid(args.t_max), test_set)
    log.to_csv(Path(args.out) / "train_log.csv")


def cmd_gram(args):
    _positive(args, "d", "n")
    if args.omega < 0 or args.nu < 0:
        raise ConfigError("--omega and --nu must be nonnegative", key="omega")
    rng = make_rng(args.seed)
    x = rng.standard_normal((args.n, args.d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = x @ np.full(args.d, 1.0 / np.sqrt(args.d))
    gram = gram_matrix(x, args.omega, args.nu)
    out = Path(args.out)
    gram_to_csv(gram, out / "gram.csv")
    spectrum(gram, y).to_csv(out / "spectrum.csv")


def cmd_jacobian_split(args):
    _positive(args, "d", "k", "n", "decay_ratio", "omega", "nu")
    args.n_test, args.noise_std = 1, 0.0
    (x, _), _, init_seed = _network_data(args)
    params = init_params(args.d, args.k, args.omega, args.nu, init_seed)
    if x.shape[0] > args.d * args.k + args.k:
        raise ConfigError("--n must not exceed d*k + k", key="n")
    split = layer_split_svd(jacobian(params, x), args.d, args.k)
    split.to_csv(Path(args.out) / "jac_split.csv")


def _common(p):
    p.add_argument("--seed", type=_seed, default=0,
                   help="64-bit seed fixing all randomness [default: 0]")
    p.add_argument("--out", default="out", help="output directory [default: ./out]")
    p.add_argument("--format", choices=["csv"], default="csv",
                   help="output format; CSV with 17 significant digits [default]")


def _network_flags(p, k_default):
    p.add_argument("--d", type=int, default=10, help="input dimension [DERIVED: 10]")
    p.add_argument("--k", type=int, default=k_default, help=f"hidden width [default: {k_default}]")
    p.add_argument("--n", type=int, default=100, help="training examples [DERIVED: 100]")
    p.add_argument("--decay-ratio", type=float, default=0.8,
                   help="feature stds decay as ratio**i [DERIVED: 0.8]")
    p.add_argument("--omega", type=float, default=1.0, help="first-layer init scale [PAPER: 1]")
    p.add_argument("--nu", type=float, default=1.0, help="second-layer init scale [PAPER: 1]")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epochdd",
        description="Epoch-wise double descent: risk curves, stepsize alignment, kernel analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig2", help="two-feature U-curves before and after alignment")
    _common(p)
    p.add_argument("--config", help="JSON overrides (see experiments.FIG2_DEFAULTS)")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="two-layer network with equal vs per-layer stepsizes")
    _common(p)
    p.add_argument("--config", help="JSON overrides (see experiments.FIG3_DEFAULTS)")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("appendix-a", help="Monte-Carlo risk vs closed-form risk")
    _common(p)
    p.add_argument("--config", help="JSON overrides (see experiments.APPENDIX_A_DEFAULTS)")
    p.add_argument("--scale", type=float,
                   help="multiply d=700 [PAPER] by this factor; 0.1 gives d=70 [default: 1]")
    p.set_defaults(func=cmd_appendix_a)

    p = sub.add_parser("risk-curve", help="closed-form risk curve for a spec and schedule")
    _common(p)
    p.add_argument("--spec", help="JSON with d, feature_stds, theta_star, noise_std")
    p.add_argument("--etas", help="JSON list of per-feature stepsizes (or {'etas': [...]})")
    p.add_argument("--n", type=int, help="number of training examples")
    p.add_argument("--t-max", type=int, help="last iteration; grid is log-spaced, 40 per decade")
    p.set_defaults(func=cmd_risk_curve)

    p = sub.add_parser("optimal-stepsizes", help="stepsizes aligning every U-curve minimum")
    _common(p)
    p.add_argument("--spec", help="JSON with d, feature_stds, theta_star, noise_std")
    p.add_argument("--n", type=int, help="number of training examples")
    p.add_argument("--t-target", type=float, help="iteration where all minima should fall")
    p.set_defaults(func=cmd_optimal_stepsizes)

    p = sub.add_parser("train-two-layer", help="train the two-layer ReLU network once")
    _common(p)
    _network_flags(p, 256)
    p.add_argument("--n-test", type=int, default=1000, help="test examples [DERIVED: 1000]")
    p.add_argument("--noise-std", type=float, default=0.0, help="label noise [PAPER: 0]")
    p.add_argument("--eta-w", type=float, default=8e-5, help="first-layer stepsize [PAPER: 8e-5]")
    p.add_argument("--eta-v", type=float, default=8e-5,
                   help="second-layer stepsize [PAPER: 8e-5 same, 1e-6 per-layer]")
    p.add_argument("--t-max", type=int, default=1000, help="iterations [default: 1000]")
    p.set_defaults(func=cmd_train_two_layer)

    p = sub.add_parser("gram", help="expected Gram matrix of random unit-norm points")
    _common(p)
    p.add_argument("--d", type=int, default=10, help="input dimension [default: 10]")
    p.add_argument("--n", type=int, default=8, help="number of points [default: 8]")
    p.add_argument("--omega", type=float, default=1.0, help="first-layer init scale [PAPER: 1]")
    p.add_argument("--nu", type=float, default=1.0, help="second-layer init scale [PAPER: 1]")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("jacobian-split", help="layer split of the Jacobian at initialisation")
    _common(p)
    _network_flags(p, 256)
    p.set_defaults(func=cmd_jacobian_split)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; usage errors are config errors here
        return 0 if exc.code == 0 else 1
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        args.func(args)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"error{key}: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [out]: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
