"""Command-line front end.

Subcommands: generate-graph, simulate, invert, bound, experiment. Outputs go
to --out, else the config's out_dir, else $SOCLEARN_OUT, else ./out. Exit
codes: 0 success, 2 configuration problem, 3 unusable or insufficient data,
4 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    GraphGenerationError,
    NumericalError,
    SocLearnError,
)
from .forward import (
    iter_psi_jsonl,
    read_trace_csv,
    read_trace_json,
    run_simulation,
    write_psi_jsonl,
    write_trace_csv,
    write_trace_json,
)
from .graphs import generate_erdos_renyi, perron_vector, write_matrix_csv, write_matrix_json
from .harness import (
    load_experiment_config,
    run_experiment,
    social_learning_accuracy,
    write_metrics_csv,
    write_metrics_json,
)
from .inverse import (
    InverseConfig,
    estimate_hypothesis_sets,
    estimate_trace_r,
    informativeness,
    project_left_stochastic,
    run_inverse,
    theorem_bound_table,
)
from .serde import dump_json, format_float, load_json


def _out_dir(flag_value, config_value=None) -> str:
    out = flag_value or config_value or os.environ.get("SOCLEARN_OUT") or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _load_config(path, overrides=None):
    try:
        return load_experiment_config(path, overrides)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def _write_array_csv(arr, path, label: str) -> None:
    arr = np.asarray(arr, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"# {label} rows={arr.shape[0]} cols={arr.shape[1]}\n")
        for row in arr:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def cmd_generate_graph(args) -> int:
    matrix = generate_erdos_renyi(args.n, args.p, seed=args.seed, max_retries=args.retries)
    out = _out_dir(args.out)
    write_matrix_csv(matrix, os.path.join(out, "combination_matrix.csv"))
    write_matrix_json(matrix, os.path.join(out, "combination_matrix.json"))
    report = {
        "n": matrix.n_agents,
        "p": args.p,
        "seed": args.seed,
        "strongly_connected": True,
        "in_degrees": matrix.in_degrees(),
        "perron": perron_vector(matrix),
    }
    dump_json(report, os.path.join(out, "graph_report.json"))
    print(f"wrote combination matrix for n={matrix.n_agents} to {out}")
    return 0


def cmd_simulate(args) -> int:
    overrides = {"delta": args.delta, "iterations": args.iterations, "seed": args.seed}
    config = _load_config(args.config, overrides)
    trace = run_simulation(
        config.matrix,
        config.models,
        config.truths,
        config.delta,
        config.iterations,
        seed=config.seed,
    )
    out = _out_dir(args.out, config.out_dir)
    write_trace_csv(trace, os.path.join(out, "trace.csv"))
    write_trace_json(trace, os.path.join(out, "trace.json"))
    write_psi_jsonl(trace, os.path.join(out, "psi.jsonl"))
    if trace.iterations > 0:
        acc = social_learning_accuracy(trace, config.truths, config.accuracy_window)
        print(f"simulated {trace.iterations} iterations, trailing accuracy {acc:.4f}")
    else:
        print("simulated 0 iterations (empty trace)")
    print(f"wrote trace files to {out}")
    return 0


def _load_trace_source(args):
    """Returns (source for run_inverse, delta or None)."""
    path = args.trace
    if not os.path.exists(path):
        raise DataError(f"cannot read trace: no such file {path}")
    try:
        if path.endswith(".jsonl"):
            return iter_psi_jsonl(path), None
        if path.endswith(".json"):
            trace = read_trace_json(path)
        else:
            trace = read_trace_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read trace: {exc}") from exc
    return trace, trace.delta


def cmd_invert(args) -> int:
    source, trace_delta = _load_trace_source(args)
    defaults = {}
    if args.config:
        try:
            defaults = dict(load_json(args.config).get("inverse", {}))
        except (OSError, ValueError, AttributeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for key, val in (
        ("step_mu", args.step_mu),
        ("batch_m", args.batch_m),
        ("tol", args.tol),
        ("max_iter", args.max_iter),
    ):
        if val is not None:
            defaults[key] = val
    cfg = InverseConfig(**defaults)
    delta = args.delta if args.delta is not None else trace_delta
    if delta is None:
        raise ConfigError("this trace format carries no delta; pass --delta")

    result = run_inverse(source, cfg, delta=delta)
    reference = None if args.majority is None else {args.majority}
    estimate = estimate_hypothesis_sets(informativeness(result.l_est), reference)

    out = _out_dir(args.out)
    _write_array_csv(result.a_est, os.path.join(out, "a_est.csv"), "weight-estimate")
    _write_array_csv(result.l_est, os.path.join(out, "l_est.csv"), "log-ratio-estimate")
    dump_json(
        {
            "delta": result.delta,
            "step_mu": cfg.step_mu,
            "batch_m": cfg.batch_m,
            "pushes": result.pushes,
            "updates": result.updates,
            "converged": result.converged,
            "stop_reason": result.stop_reason,
            "a_est": result.a_est,
            "a_est_projected_cosmetic": project_left_stochastic(result.a_est),
            "l_est": result.l_est,
            "final_step_norm": result.a_step_norms[-1],
        },
        os.path.join(out, "inverse_report.json"),
    )
    agents = []
    for k, s in enumerate(estimate.theta_sets):
        entry = {
            "agent": k,
            "theta_set": sorted(s),
            "positive_counts": estimate.positive_counts[k],
        }
        if estimate.malicious is not None:
            entry["malicious_flag"] = estimate.malicious[k]
        agents.append(entry)
    dump_json({"agents": agents}, os.path.join(out, "hypothesis_report.json"))
    print(f"inverse run: {result.updates} updates, stop reason {result.stop_reason}")
    print(f"wrote estimates to {out}")
    return 0


def cmd_bound(args) -> int:
    config = _load_config(args.config, {"batch_m": args.batch_m})
    trace_r = estimate_trace_r(config.models, config.truths, seed=0)
    table = theorem_bound_table(
        config.models, config.truths, config.inverse.batch_m, trace_r
    )
    entries = {
        f"{k}:{j}": {"value": e.value, "residual_orders": list(e.residual_orders)}
        for (k, j), e in table.items()
    }
    if args.metrics:
        try:
            freqs = load_json(args.metrics)["aggregate"]["wrong_inclusion_freq"]
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"cannot read metrics report: {exc}") from exc
        for key, entry in entries.items():
            if key in freqs:
                entry["empirical_freq"] = freqs[key]
                if entry["value"] < 1.0:
                    entry["holds"] = bool(freqs[key] <= entry["value"])
    out = _out_dir(args.out, config.out_dir)
    dump_json(
        {"batch_m": config.inverse.batch_m, "trace_r": trace_r, "entries": entries},
        os.path.join(out, "bound_report.json"),
    )
    informative = sum(1 for e in entries.values() if e["value"] < 1.0)
    print(f"{len(entries)} bound entries, {informative} below one; trace_r={trace_r:.6g}")
    print(f"wrote bound report to {out}")
    return 0


def cmd_experiment(args) -> int:
    overrides = {"seed": args.seed, "trials": args.trials, "out_dir": args.out}
    config = _load_config(args.config, overrides)
    report = run_experiment(config, workers=args.workers)
    out = _out_dir(args.out, config.out_dir)
    write_metrics_json(report, os.path.join(out, "metrics.json"))
    write_metrics_csv(report, os.path.join(out, "metrics.csv"))
    agg = report.aggregate
    print(
        f"{config.trials} trials: accuracy {agg['learning_accuracy']['mean']:.4f}, "
        f"detection {agg['detection_fraction']['mean']:.4f}, "
        f"l_error {agg['l_error']['mean']:.6g}"
    )
    print(f"wrote metrics to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soclearn",
        description="Social-learning simulation and inverse estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-graph", help="sample a strongly connected agent graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--retries", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate_graph)

    p = sub.add_parser("simulate", help="run the forward learning dynamics")
    p.add_argument("--config", required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("invert", help="estimate weights and log-ratios from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--step-mu", type=float, default=None)
    p.add_argument("--batch-M", dest="batch_m", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--majority", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("bound", help="tabulate the error-probability bound")
    p.add_argument("--config", required=True)
    p.add_argument("--batch-M", dest="batch_m", type=int, default=None)
    p.add_argument("--metrics", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("experiment", help="run seeded trials and aggregate metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, GraphGenerationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except SocLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
