"""Subcommand front end: simulate | ingest | encode | fit | evaluate | compare.

A run is driven by a JSON config plus flag overrides; every CSV output opens
with commented provenance lines (command, package version, seed, config) so
results are reproducible from the header alone.  Exit codes: 0 success,
1 numerical failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covariates import build_raw_covariates, encode_path, fit_encoder, sample_and_lag
from .estimator import (
    EnvCoefficients,
    EstimatorError,
    FitConfig,
    FitResult,
    accumulate,
    alternate_fit,
    box_budget,
    fit_kernel,
    solve_b,
)
from .evaluator import (
    ModelIntegrityError,
    ModelSpec,
    compare,
    log_likelihood,
    time_rescaling_residuals,
)
from .ingest import ParseError, conflate, extract_events, load_streams, parse_lobster, save_streams
from .kernel import KernelParams, ParameterBounds
from .simulator import SimDesign, UnstableDesignError, fp_fn, simulate
from .streams import CovariatePath, EventStream

VARIANTS = ("E", "H01", "H02", "H1", "H2", "H1L", "H2L")


class UsageError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    with open(p) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid config JSON: {exc}") from exc


def _provenance(command: str, cfg: dict) -> str:
    lines = [f"# obhawkes {command} v{__version__}"]
    for key in sorted(cfg):
        lines.append(f"# {key}={json.dumps(cfg[key])}")
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, header_lines: str, columns: list[str], rows: list[list]) -> None:
    with open(path, "w") as f:
        f.write(header_lines)
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    K = int(cfg.get("K", 3))
    if K <= 0:
        raise UsageError("K must be positive")
    n_active = int(cfg.get("n_active", min(3, K)))
    b_value = float(cfg.get("b_value", 2.0 / 3.0))
    b0 = np.zeros(K)
    b0[:n_active] = b_value
    kernel = cfg.get("kernel", {"c": 1.0, "d": [1.0], "a": [2.0]})
    params = KernelParams(kernel["c"], np.asarray(kernel["d"]), np.asarray(kernel["a"]))
    n_jumps = cfg.get("n_jumps", 100_000)
    horizon = cfg.get("horizon_s")
    reps = int(cfg.get("reps", 1))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    do_fit = bool(cfg.get("fit", True))
    budget = cfg.get("budget", "K")
    mult = float(args.mult if args.mult is not None else cfg.get("mult", 1.0))
    out = _out_dir(args)
    prov = _provenance("simulate", {**cfg, "seed": seed, "mult": mult})

    cols = (
        [f"b{k}" for k in range(K)]
        + ["c", "d", "a", "err_0.1", "err_0.05", "fn", "l1_rel", "iterations"]
    )
    rows: list[list] = []
    for rep in range(reps):
        design = SimDesign(params, b0, seed=seed + rep, n_jumps=n_jumps, horizon_s=horizon)
        events, path = simulate(design)
        events.save_csv(out / f"events_{rep:03d}.csv")
        path.save_csv(out / f"covariates_{rep:03d}.csv")
        if not do_fit:
            continue
        B = float(K) if budget == "K" else float(budget)
        config = FitConfig(
            L=params.L,
            budget=None if budget == "heuristic" else B,
            budget_policy="heuristic" if budget == "heuristic" else "fixed",
            mult=mult,
            max_iterations=int(cfg.get("max_iterations", 4)),
        )
        fit = alternate_fit(path, events, config)
        with open(out / f"fit_{rep:03d}.json", "w") as f:
            json.dump(fit.to_dict(), f, indent=1)
        m = fp_fn(fit.env.b, b0, alphas=(0.1, 0.05))
        p = fit.params
        rows.append(
            list(fit.env.b)
            + [p.c, float(np.mean(p.d)), float(np.mean(p.a)),
               m.error_counts[0.1], m.error_counts[0.05], m.fn, m.l1, fit.iterations]
        )
    if rows:
        avg = [float(np.mean([r[i] for r in rows])) for i in range(len(cols))]
        _write_csv(out / "metrics.csv", prov, ["rep"] + cols,
                   [[i] + r for i, r in enumerate(rows)] + [["avg"] + avg])
    print(f"simulate: {reps} path(s) written to {out}")
    return 0


# ---------------------------------------------------------------------------
# ingest


def cmd_ingest(args) -> int:
    if not args.message or not args.orderbook:
        raise UsageError("ingest needs --message and --orderbook files")
    books, trades = parse_lobster(args.message, args.orderbook, instrument=args.instrument)
    books = conflate(books)
    trades = conflate(trades)
    out = _out_dir(args)
    save_streams(out / "streams.npz", books, trades)
    events, dropped = extract_events(trades, books, side=args.side, kind=args.kind)
    events.save_csv(out / f"events_{args.side}_{args.kind}.csv")
    print(
        f"ingest: {books.m} book updates, {trades.m} trades, "
        f"{events.n} {args.side}/{args.kind} events ({dropped} dropped) -> {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# encode


def cmd_encode(args) -> int:
    cfg = _load_config(args.config)
    streams = Path(args.streams or (Path(args.out_dir) / "streams.npz"))
    if not streams.exists():
        raise UsageError(f"streams file not found: {streams}")
    books, trades = load_streams(streams)
    events, dropped = extract_events(trades, books, side=args.side, kind=args.kind)
    raw = build_raw_covariates(
        books.times_ns,
        books.bid_sz,
        books.ask_sz,
        books.bid_px[:, 0] / 1e4,
        books.ask_px[:, 0] / 1e4,
        trades.times_ns,
        trades.signed_sizes,
        n_imbalance_levels=min(3, books.levels),
    )
    lagged, lag_dropped = sample_and_lag(raw, events.times_ns)
    spec = fit_encoder(lagged)
    path = encode_path(lagged, spec)
    out = _out_dir(args)
    events.save_csv(out / f"events_{args.side}_{args.kind}.csv")
    path.save_csv(out / f"encoded_{args.side}_{args.kind}.csv")
    with open(out / f"encoder_{args.side}_{args.kind}.json", "w") as f:
        json.dump(
            {"names": list(spec.names), "breakpoints": [list(b) for b in spec.breakpoints],
             "include_constant": spec.include_constant},
            f, indent=1,
        )
    print(
        f"encode: {events.n} events, {path.dim} features "
        f"({dropped + lag_dropped} rows dropped) -> {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# fit


def _load_data(args) -> tuple[EventStream, CovariatePath]:
    if not args.events or not args.covariates:
        raise UsageError("need --events and --covariates files")
    for p in (args.events, args.covariates):
        if not Path(p).exists():
            raise UsageError(f"input file not found: {p}")
    events = EventStream.load_csv(args.events)
    path = CovariatePath.load_csv(args.covariates, lagged=True)
    return events, path


def fit_variant(
    variant: str,
    path: CovariatePath,
    events: EventStream,
    cfg: dict,
    mult: float = 1.0,
) -> dict:
    """Fit one member of the model family and return its serializable form."""
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant {variant!r}")
    bounds = ParameterBounds.simulation()
    if "bounds" in cfg:
        b = cfg["bounds"]
        bounds = ParameterBounds(tuple(b["c"]), tuple(b["d"]), tuple(b["a"]))
    if variant in ("H01", "H02"):
        L = 1 if variant == "H01" else 2
        params, info = fit_kernel(
            events, bounds=bounds, L=L, profile_scale=True, reparam=True
        )
        return {"variant": variant, "kernel": {"c": params.c, "d": params.d.tolist(),
                                               "a": params.a.tolist()}, "info": info}
    if variant == "E":
        acc = accumulate(path.restrict(events.t0_ns, events.t1_ns), events)
        beta, B = box_budget(acc)
        box = float(cfg.get("box_mult", 10.0)) * abs(beta)
        env = solve_b(acc, budget=None, box=box, nonneg=True)
        return {"variant": variant, "dim": int(env.b.size),
                "coefficients": [[int(i), float(x)] for i, x in enumerate(env.b) if x],
                "box": box}
    L = 1 if variant in ("H1", "H1L") else 2
    linear = variant.endswith("L")
    policy = cfg.get("budget_policy", "box" if linear else "heuristic")
    config = FitConfig(
        L=L,
        bounds=bounds,
        budget=cfg.get("budget"),
        budget_policy="fixed" if cfg.get("budget") is not None else policy,
        mult=mult,
        box_mult=float(cfg.get("box_mult", 10.0)) if linear else None,
        nonneg=not linear,
        max_iterations=int(cfg.get("max_iterations", 10)),
    )
    fit = alternate_fit(path, events, config)
    out = fit.to_dict()
    out["variant"] = variant
    return out


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    events, path = _load_data(args)
    mult = float(args.mult if args.mult is not None else cfg.get("mult", 1.0))
    out = _out_dir(args)
    variants = [args.variant] if args.variant else list(cfg.get("variants", ["H1"]))
    for variant in variants:
        result = fit_variant(variant, path, events, cfg, mult)
        with open(out / f"fit_{variant}.json", "w") as f:
            json.dump(result, f, indent=1)
        print(f"fit: {variant} -> {out / f'fit_{variant}.json'}")
    return 0


# ---------------------------------------------------------------------------
# evaluate / compare


def load_model(path) -> ModelSpec:
    with open(path) as f:
        data = json.load(f)
    variant = data["variant"]
    if variant in ("H01", "H02"):
        k = data["kernel"]
        params = KernelParams(k["c"], np.asarray(k["d"]), np.asarray(k["a"])).normalized()
        return ModelSpec(variant, params=params)
    if variant == "E":
        b = np.zeros(data["dim"])
        for i, x in data["coefficients"]:
            b[i] = x
        return ModelSpec(variant, b=b)
    fit = FitResult.from_dict(data)
    return ModelSpec(variant, params=fit.eval_params, b=fit.env.b)


def cmd_evaluate(args) -> int:
    if not args.model:
        raise UsageError("evaluate needs --model fit file")
    events, path = _load_data(args)
    spec = load_model(args.model)
    window = _window(args, events)
    L = log_likelihood(spec, events, path, window=window)
    residuals, ks_stat, ks_p = time_rescaling_residuals(spec, events, path, window=window)
    out = _out_dir(args)
    prov = _provenance("evaluate", {"model": str(args.model), "variant": spec.variant})
    _write_csv(out / f"evaluate_{spec.variant}.csv", prov,
               ["model", "loglik", "n", "ks_stat", "ks_pvalue"],
               [[spec.name, L, residuals.size, ks_stat, ks_p]])
    print(f"evaluate: {spec.name} loglik={L:.4f} KS p={ks_p:.4g}")
    return 0


def _window(args, events) -> tuple[int, int] | None:
    if args.test_start is None:
        return None
    t0 = int(float(args.test_start) * 1e9)
    t1 = events.t1_ns if args.test_end is None else int(float(args.test_end) * 1e9)
    return t0, t1


def cmd_compare(args) -> int:
    if not args.model or not args.model2:
        raise UsageError("compare needs --model and --model2 fit files")
    events, path = _load_data(args)
    spec1 = load_model(args.model)
    spec2 = load_model(args.model2)
    window = _window(args, events)
    result = compare(spec1, spec2, events, path, window=window)
    out = _out_dir(args)
    prov = _provenance("compare", {"model1": str(args.model), "model2": str(args.model2)})
    row = result.to_row(side=args.side)
    _write_csv(out / f"compare_{spec1.name}_{spec2.name}.csv", prov,
               list(row.keys()), [list(row.values())])
    verdict = "degenerate" if result.degenerate else f"statistic={result.statistic:.4f}"
    print(f"compare: {spec1.name} vs {spec2.name} {verdict}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obhawkes",
        description="Order-book-modulated Hawkes processes: simulate, ingest, fit, compare.",
    )
    parser.add_argument("--version", action="version", version=f"obhawkes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--side", choices=("buy", "sell"), default="buy")
        p.add_argument("--kind", choices=("any", "large"), default="any")
        p.add_argument("--mult", type=float, help="budget-heuristic multiplier")

    p = sub.add_parser("simulate", help="generate paths and optionally fit them")
    common(p)

    p = sub.add_parser("ingest", help="parse and conflate a message/book CSV pair")
    common(p)
    p.add_argument("--message", help="message CSV (gzip ok)")
    p.add_argument("--orderbook", help="order book CSV (gzip ok)")
    p.add_argument("--instrument", type=int, default=0)

    p = sub.add_parser("encode", help="build and one-hot encode covariates")
    common(p)
    p.add_argument("--streams", help="ingested streams.npz")

    p = sub.add_parser("fit", help="fit model variants to events + covariates")
    common(p)
    p.add_argument("--events", help="event times CSV")
    p.add_argument("--covariates", help="encoded covariate CSV")
    p.add_argument("--variant", choices=VARIANTS)

    p = sub.add_parser("evaluate", help="log-likelihood and residual diagnostics")
    common(p)
    p.add_argument("--events")
    p.add_argument("--covariates")
    p.add_argument("--model", help="fit JSON file")
    p.add_argument("--test-start", help="test window start, seconds")
    p.add_argument("--test-end", help="test window end, seconds")

    p = sub.add_parser("compare", help="studentized out-of-sample likelihood ratio")
    common(p)
    p.add_argument("--events")
    p.add_argument("--covariates")
    p.add_argument("--model", help="fit JSON for model 1")
    p.add_argument("--model2", help="fit JSON for model 2")
    p.add_argument("--test-start")
    p.add_argument("--test-end")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "encode": cmd_encode,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EstimatorError, UnstableDesignError, ModelIntegrityError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
