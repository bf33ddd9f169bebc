"""Command-line interface.

Subcommands: fit, encode, decode, distortion, sweep, rate-experiment,
approx-trend, baseline, plus sample for materializing synthetic datasets.
All randomness is seeded; identical arguments produce byte-identical
output files.  Experiment subcommands also accept a JSON config file
(--config); explicit flags win over config values.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .datagen import (
    GeneratorSpec,
    normalize,
    read_dataset,
    read_points_csv,
    sample,
    write_dataset,
    write_points_csv,
)
from .errors import DomainError
from .experiment import (
    RateExperimentConfig,
    run_approximation_trend,
    run_baseline_comparison,
    run_eta_sweep_experiment,
    run_rate_experiment,
    write_baseline_csv,
    write_csv,
    write_rate_csv,
    write_sweep_csv,
    write_trend_csv,
)
from .oracle import DiscreteDistribution
from .reconstruction import (
    RateSchedule,
    decode,
    empirical_distortion,
    fit,
    load_codebook,
    save_codebook,
    sweep,
)
from .stats import Dataset
from .tree import CellId


def _load_data(path: str, do_normalize: bool) -> Dataset:
    if path.endswith(".csv"):
        pts = read_points_csv(path)
        if do_normalize:
            return normalize(pts)
        return Dataset(pts)
    data = read_dataset(path)
    if do_normalize:
        return normalize(data.points)
    return data


def _generator_from_args(args) -> GeneratorSpec:
    bounds = None
    if getattr(args, "density_bounds", None):
        p1, p2 = (float(t) for t in args.density_bounds.split(","))
        bounds = (p1, p2)
    return GeneratorSpec(
        kind=args.generator,
        ambient_dim=args.dim,
        seed=args.seed,
        density_bounds=bounds,
    )


def _schedule_from_args(args, dim: int) -> RateSchedule:
    branching = 1 << dim
    if getattr(args, "theoretical_constant", False):
        return RateSchedule.with_theoretical_constant(branching, args.gamma, args.beta)
    return RateSchedule(branching, args.gamma, args.beta, args.threshold_constant)


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _apply_config(args, parser_defaults: dict) -> None:
    """Fill args from a JSON config for every flag still at its default."""
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise SystemExit(f"unknown config key {key!r}")
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=1.5, help="depth exponent (> 1)")
    p.add_argument("--beta", type=float, default=1.0, help="confidence exponent (> 0)")
    p.add_argument(
        "--threshold-constant",
        type=float,
        default=1.5,
        help="calibration constant c in eta_n = sqrt((gamma+beta) ln n / (c n))",
    )
    p.add_argument(
        "--theoretical-constant",
        action="store_true",
        help="use the analysis constant c_a = 1/(128(a+1)) instead",
    )


def _cmd_fit(args) -> int:
    data = _load_data(args.data, args.normalize)
    schedule = _schedule_from_args(args, data.dim)
    quantizer = fit(data, args.eta, schedule)
    save_codebook(quantizer, args.output)
    print(f"fit: {len(quantizer.leaves)} leaves at eta={args.eta} -> {args.output}")
    return 0


def _cmd_encode(args) -> int:
    q = load_codebook(args.codebook)
    data = _load_data(args.data, args.normalize)
    if data.dim != q.dim:
        raise SystemExit(f"data dim {data.dim} != codebook dim {q.dim}")
    depths, codes = q.assign(data.points)
    from . import kernels

    rows = []
    for depth in sorted(set(int(d) for d in depths)):
        sel = depths == depth
        idx = kernels.morton_decode(codes[sel], depth, q.dim)
        block = np.column_stack([np.full(int(sel.sum()), depth, dtype=np.int64), idx])
        rows.append((np.flatnonzero(sel), block))
    out = np.empty((data.n, 1 + q.dim), dtype=np.int64)
    for where, block in rows:
        out[where] = block
    header = ["depth"] + [f"k{j}" for j in range(q.dim)]
    write_csv(args.output, header, out.tolist())
    print(f"encode: {data.n} points -> {args.output}")
    return 0


def _cmd_decode(args) -> int:
    q = load_codebook(args.codebook)
    ids = np.loadtxt(args.ids, delimiter=",", skiprows=1, ndmin=2, dtype=np.int64)
    if ids.shape[1] != 1 + q.dim:
        raise SystemExit(f"id rows must have 1+{q.dim} integers")
    vectors = np.empty((ids.shape[0], q.dim))
    for i, row in enumerate(ids):
        vectors[i] = decode(q, CellId(int(row[0]), tuple(int(v) for v in row[1:])))
    write_points_csv(args.output, vectors)
    print(f"decode: {ids.shape[0]} ids -> {args.output}")
    return 0


def _cmd_distortion(args) -> int:
    q = load_codebook(args.codebook)
    data = _load_data(args.data, args.normalize)
    value = empirical_distortion(q, data)
    write_csv(args.output, ["n", "distortion"], [(data.n, value)])
    print(f"distortion: {value!r} over n={data.n}")
    return 0


def _cmd_sweep(args) -> int:
    etas = _float_list(args.etas)
    if args.data:
        data = _load_data(args.data, args.normalize)
        schedule = _schedule_from_args(args, data.dim)
        rows = [
            (eta, leaves, train)
            for eta, _, leaves, train in sweep(data, etas, schedule)
        ]
        write_sweep_csv(rows, args.output, with_holdout=False)
    else:
        spec = _generator_from_args(args)
        rows = run_eta_sweep_experiment(
            spec,
            args.n,
            etas,
            gamma=args.gamma,
            beta=args.beta,
            threshold_constant=args.threshold_constant,
            holdout_n=args.holdout_n,
        )
        write_sweep_csv(rows, args.output, with_holdout=True)
    print(f"sweep: {len(rows)} rows -> {args.output}")
    return 0


def _cmd_rate_experiment(args, defaults) -> int:
    _apply_config(args, defaults)
    spec = _generator_from_args(args)
    if args.theoretical_constant:
        constant = RateSchedule.with_theoretical_constant(1 << args.dim).threshold_constant
    else:
        constant = args.threshold_constant
    cfg = RateExperimentConfig(
        generator=spec,
        n_grid=tuple(_int_list(args.n_grid)),
        gamma=args.gamma,
        beta=args.beta,
        holdout_n=args.holdout_n,
        trials=args.trials,
        seed=args.seed,
        threshold_constant=constant,
    )
    result = run_rate_experiment(cfg)
    write_rate_csv(result, args.output)
    print(f"rate-experiment: fitted_slope={result.fitted_slope!r} -> {args.output}")
    return 0


def _uniform_grid_atoms(count: int, dim: int) -> DiscreteDistribution:
    per_axis = max(1, round(count ** (1.0 / dim)))
    axes = [(np.arange(per_axis) + 0.5) / per_axis] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    return DiscreteDistribution(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))


def _cmd_approx_trend(args, defaults) -> int:
    _apply_config(args, defaults)
    if args.atoms_csv:
        raw = read_points_csv(args.atoms_csv)
        if args.weighted:
            dist = DiscreteDistribution(raw[:, :-1], raw[:, -1])
        else:
            dist = DiscreteDistribution(raw, np.full(raw.shape[0], 1.0 / raw.shape[0]))
    else:
        dist = _uniform_grid_atoms(args.uniform_atoms, args.dim)
    rows, slope = run_approximation_trend(dist, _float_list(args.etas))
    write_trend_csv(rows, args.output)
    print(f"approx-trend: fitted_slope={slope!r} -> {args.output}")
    return 0


def _cmd_baseline(args, defaults) -> int:
    _apply_config(args, defaults)
    spec = _generator_from_args(args)
    rows = run_baseline_comparison(
        spec,
        args.n,
        _float_list(args.etas),
        gamma=args.gamma,
        beta=args.beta,
        threshold_constant=args.threshold_constant,
        holdout_n=args.holdout_n,
    )
    write_baseline_csv(rows, args.output)
    print(f"baseline: {len(rows)} matched rows -> {args.output}")
    return 0


def _cmd_sample(args) -> int:
    spec = _generator_from_args(args)
    data = sample(spec, args.n)
    if args.output.endswith(".csv"):
        write_points_csv(args.output, data.points)
    else:
        write_dataset(args.output, data)
    print(f"sample: {data.n} points ({spec.kind}, dim {spec.ambient_dim}) -> {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rectree",
        description="Multi-scale vector quantization on dyadic partition trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        p.add_argument("--data", required=True, help="dataset (.rtds binary or .csv)")
        p.add_argument(
            "--normalize",
            action="store_true",
            help="map ingested data into the unit cube before use",
        )

    p = sub.add_parser("fit", help="fit a quantizer at one threshold")
    add_data_flags(p)
    p.add_argument("--eta", type=float, required=True)
    _add_schedule_flags(p)
    p.add_argument("--output", required=True, help="codebook JSON path")

    p = sub.add_parser("encode", help="map points to leaf cell ids")
    p.add_argument("--codebook", required=True)
    add_data_flags(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("decode", help="map leaf cell ids to code vectors")
    p.add_argument("--codebook", required=True)
    p.add_argument("--ids", required=True, help="CSV from the encode subcommand")
    p.add_argument("--output", required=True)

    p = sub.add_parser("distortion", help="mean squared reconstruction error")
    p.add_argument("--codebook", required=True)
    add_data_flags(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("sweep", help="quantizers over a list of thresholds")
    p.add_argument("--data", help="dataset file; alternative to --generator")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--generator", choices=["uniform_cube", "density_cube", "circle", "sphere", "swiss_roll"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--holdout-n", type=int, default=None)
    p.add_argument("--density-bounds", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--etas", required=True, help="comma-separated thresholds")
    _add_schedule_flags(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("rate-experiment", help="distortion vs n with the eta_n schedule")
    p.add_argument("--config", help="JSON config; flags override")
    p.add_argument("--generator", default="uniform_cube",
                   choices=["uniform_cube", "density_cube", "circle", "sphere", "swiss_roll"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n-grid", default=",".join(str(2**k) for k in range(8, 17)))
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--holdout-n", type=int, default=None)
    p.add_argument("--density-bounds", default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_schedule_flags(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("approx-trend", help="exact oracle approximation error vs eta")
    p.add_argument("--config", help="JSON config; flags override")
    p.add_argument("--uniform-atoms", type=int, default=4096)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--atoms-csv", default=None)
    p.add_argument("--weighted", action="store_true",
                   help="treat the last CSV column as atom weights")
    p.add_argument("--etas", default=",".join(repr(2.0**-k) for k in range(1, 9)))
    p.add_argument("--output", required=True)

    p = sub.add_parser("baseline", help="tree vs k-means at matched codebook sizes")
    p.add_argument("--config", help="JSON config; flags override")
    p.add_argument("--generator", default="uniform_cube",
                   choices=["uniform_cube", "density_cube", "circle", "sphere", "swiss_roll"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--holdout-n", type=int, default=None)
    p.add_argument("--density-bounds", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--etas", required=True)
    _add_schedule_flags(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("sample", help="materialize a synthetic dataset")
    p.add_argument("--generator", required=True,
                   choices=["uniform_cube", "density_cube", "circle", "sphere", "swiss_roll"])
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density-bounds", default=None)
    p.add_argument("--output", required=True, help=".rtds binary or .csv")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = {
        action.dest: action.default
        for sp in parser._subparsers._group_actions
        for action in sp.choices[args.command]._actions
    }
    try:
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "encode":
            return _cmd_encode(args)
        if args.command == "decode":
            return _cmd_decode(args)
        if args.command == "distortion":
            return _cmd_distortion(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "rate-experiment":
            return _cmd_rate_experiment(args, defaults)
        if args.command == "approx-trend":
            return _cmd_approx_trend(args, defaults)
        if args.command == "baseline":
            return _cmd_baseline(args, defaults)
        if args.command == "sample":
            return _cmd_sample(args)
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
