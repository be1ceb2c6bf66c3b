"""Command-line front end.

Subcommands: ``decode``, ``refine``, ``bunch``, ``bounds``,
``counterexample s2|s4``, ``simulate protein|gaussian``.  Every output is
CSV with a '#'-prefixed metadata header carrying the model hash, the seed
(where one is used), and the effective configuration.  Exit code 0 on
success, 2 on configuration or validation errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .bounds import verify_bounds, viterbi_bounds
from .inference import (
    InadmissibleError,
    forward_backward,
    pmap,
    viterbi,
)
from .model import load_model, model_hash, read_observations, validate
from .refine import (
    RefinementConfig,
    TRACE_FIELDS,
    bunch_refine,
    iterative_refine,
    trace_rows,
)

__all__ = ["main"]


def _read_state_path(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return np.array([int(ln) for ln in lines], dtype=np.int64)


def _parse_pins(text: str) -> list[tuple[int, int]]:
    pins = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        t, _, w = chunk.partition(":")
        pins.append((int(t), int(w)))
    return pins


def _load_valid_model(path):
    spec = load_model(path)
    report = validate(spec)
    if not report.ok:
        raise ValueError("invalid model: " + "; ".join(report.problems))
    return spec


def _cmd_decode(args) -> int:
    spec = _load_valid_model(args.model)
    obs = read_observations(args.obs, spec)
    pins = _parse_pins(args.pins) if args.pins else None
    tables = forward_backward(spec, obs, pins)
    v = viterbi(spec, obs, pins)
    g = pmap(spec, obs, pins)
    rows = [
        {
            "t": t,
            "state": s,
            "probability": float(tables.smoothing[t, s]),
            "viterbi_state": int(v[t]),
            "pmap_state": int(g[t]),
        }
        for t in range(tables.length)
        for s in range(tables.num_states)
    ]
    experiments.write_table(
        args.out,
        ("t", "state", "probability", "viterbi_state", "pmap_state"),
        rows,
        {
            "model_hash": model_hash(spec),
            "seed": "none",
            "config": f"pins={args.pins or 'none'} log_likelihood={tables.log_likelihood!r}",
        },
    )
    return 0


def _cmd_refine(args) -> int:
    spec = _load_valid_model(args.model)
    obs = read_observations(args.obs, spec)
    truth = _read_state_path(args.truth) if args.truth else None
    config = RefinementConfig(
        delta=args.delta,
        max_iterations=args.max_iter,
        mode="peep" if args.mode == "peep" else "pmap",
        true_path=truth,
        allow_large_delta=args.allow_large_delta,
    )
    _, trace = iterative_refine(spec, obs, config)
    experiments.write_table(
        args.out,
        TRACE_FIELDS,
        trace_rows(trace),
        {
            "model_hash": model_hash(spec),
            "seed": "none",
            "config": f"delta={args.delta} max_iter={args.max_iter} mode={args.mode}",
        },
    )
    return 0


def _cmd_bunch(args) -> int:
    spec = _load_valid_model(args.model)
    obs = read_observations(args.obs, spec)
    truth = _read_state_path(args.truth) if args.truth else None
    result = bunch_refine(
        spec,
        obs,
        delta=args.delta,
        count=args.count,
        mode="peep" if args.mode == "peep" else "pmap",
        true_path=truth,
    )
    m = result.metrics
    row = {
        "m": len(result.pins),
        "errors": m.errors,
        "expected_errors": m.expected_errors,
        "rho_min_cond": m.rho_min_cond,
        "rho_min_uncond": m.rho_min_uncond,
        "log_posterior": m.log_posterior,
        "admissible": result.admissible,
    }
    experiments.write_table(
        args.out,
        ("m", "errors", "expected_errors", "rho_min_cond", "rho_min_uncond",
         "log_posterior", "admissible"),
        [row],
        {
            "model_hash": model_hash(spec),
            "seed": "none",
            "config": f"delta={args.delta} count={args.count} mode={args.mode}",
        },
    )
    return 0


def _cmd_bounds(args) -> int:
    spec = _load_valid_model(args.model)
    if args.verify:
        obs = read_observations(args.verify, spec)
        check = verify_bounds(spec, obs)
        n = len(check.rho)
        classes = {"first": 0, "last": n - 1}
        rows = []
        for name in ("first", "interior", "last"):
            if name == "interior":
                sel = np.arange(1, n - 1)
            else:
                sel = np.array([classes[name]])
            if len(sel) == 0:
                continue
            rows.append(
                {
                    "position_class": name,
                    "bound": float(check.bounds[sel[0]]),
                    "min_observed_rho": float(check.rho[sel].min()),
                    "margin": float(check.margins[sel].min()),
                }
            )
        config_note = f"verify={args.verify} violations={check.violations}"
    else:
        report = viterbi_bounds(spec)
        rows = [
            {"position_class": "first", "bound": report.first_bound,
             "min_observed_rho": None, "margin": None},
            {"position_class": "interior", "bound": report.interior_bound,
             "min_observed_rho": None, "margin": None},
            {"position_class": "last", "bound": report.last_bound,
             "min_observed_rho": None, "margin": None},
        ]
        config_note = "verify=none"
    experiments.write_table(
        args.out,
        ("position_class", "bound", "min_observed_rho", "margin"),
        rows,
        {"model_hash": model_hash(spec), "seed": "none", "config": config_note},
    )
    return 0


def _cmd_counterexample(args) -> int:
    if args.which == "s2":
        rep = experiments.counterexample_small_prob(args.m)
        rows = [
            {
                "m": rep.m,
                "viterbi_expected_shape": bool(
                    np.array_equal(rep.viterbi_path, [0] * rep.m + [1])
                ),
                "smoothing_at_switch": rep.smoothing_at_switch,
                "closed_form": rep.closed_form,
            }
        ]
        fields = ("m", "viterbi_expected_shape", "smoothing_at_switch", "closed_form")
        spec = experiments.small_probability_model()
        config = f"m={args.m}"
    else:
        cfg = experiments.PeepingConfig(m=args.m, epsilon=args.eps, bump=args.delta)
        rep = experiments.unsuccessful_peeping_report(cfg)
        rows = [
            {
                "m": cfg.m,
                "epsilon": cfg.epsilon,
                "bump": cfg.bump,
                "lhs": rep.lhs,
                "rhs": rep.rhs,
                "peeping_harmful": rep.peeping_harmful,
                "pin_probability": rep.pin_prob,
                "pin_probability_limit": rep.pin_prob_limit,
                "accuracy_gap": rep.accuracy_gap,
            }
        ]
        fields = (
            "m", "epsilon", "bump", "lhs", "rhs", "peeping_harmful",
            "pin_probability", "pin_probability_limit", "accuracy_gap",
        )
        spec = experiments.peeping_model(cfg.epsilon, cfg.bump)
        config = f"m={args.m} eps={args.eps} delta={args.delta}"
    experiments.write_table(
        args.out, fields, rows,
        {"model_hash": model_hash(spec), "seed": "none", "config": config},
    )
    return 0


def _cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    if args.which == "protein":
        schedule = None
        if args.schedule:
            schedule = tuple(int(x) for x in args.schedule.split(","))
        elif args.threshold is not None:
            schedule = args.threshold
        experiments.run_protein_experiment(
            seed=args.seed, schedule=schedule, n=args.n, out_dir=out_dir
        )
    else:
        deltas = tuple(float(x) for x in args.deltas.split(","))
        experiments.run_gaussian_experiment(
            replicates=args.replicates,
            n=args.n,
            deltas=deltas,
            seed=args.seed,
            out_dir=out_dir,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmmseg",
        description="HMM segmentation: decoding, alignment adjustment, bounds, case studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="Viterbi/PMAP paths and smoothing probabilities")
    p.add_argument("model")
    p.add_argument("obs")
    p.add_argument("--pins", help="comma-separated t:state pairs", default=None)
    p.add_argument("--out", default="decode.csv")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("refine", help="iterative adjustment of the Viterbi alignment")
    p.add_argument("model")
    p.add_argument("obs")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--mode", choices=("pmap", "peep"), default="pmap")
    p.add_argument("--truth", help="true state path file (one index per line)")
    p.add_argument("--allow-large-delta", action="store_true")
    p.add_argument("--out", default="refine.csv")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("bunch", help="bunch adjustment of the Viterbi alignment")
    p.add_argument("model")
    p.add_argument("obs")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--delta", type=float)
    group.add_argument("--count", type=int)
    p.add_argument("--mode", choices=("pmap", "peep"), default="pmap")
    p.add_argument("--truth")
    p.add_argument("--out", default="bunch.csv")
    p.set_defaults(func=_cmd_bunch)

    p = sub.add_parser("bounds", help="classification-probability lower bounds")
    p.add_argument("model")
    p.add_argument("--verify", help="observation file to check the bounds against")
    p.add_argument("--out", default="bounds.csv")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("counterexample", help="deterministic counterexample reproducers")
    which = p.add_subparsers(dest="which", required=True)
    s2 = which.add_parser("s2", help="vanishing classification probability")
    s2.add_argument("--m", type=int, required=True)
    s2.add_argument("--out", default="counterexample_s2.csv")
    s2.set_defaults(func=_cmd_counterexample)
    s4 = which.add_parser("s4", help="peeping that lowers the expected accuracy")
    s4.add_argument("--m", type=int, required=True)
    s4.add_argument("--eps", type=float, required=True)
    s4.add_argument("--delta", type=float, required=True,
                    help="density bump of state 1 on atom y")
    s4.add_argument("--out", default="counterexample_s4.csv")
    s4.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("simulate", help="replicate studies")
    which = p.add_subparsers(dest="which", required=True)
    prot = which.add_parser("protein", help="six-state protein model case study")
    prot.add_argument("--seed", type=int, required=True)
    prot.add_argument("--n", type=int, default=1000)
    prot.add_argument("--schedule", help="comma-separated replacement counts")
    prot.add_argument("--threshold", type=float, help="threshold-based run instead")
    prot.add_argument("--out-dir", default="protein_out")
    prot.set_defaults(func=_cmd_simulate)
    gauss = which.add_parser("gaussian", help="two-state Gaussian replicate study")
    gauss.add_argument("--seed", type=int, required=True)
    gauss.add_argument("--replicates", type=int, default=100)
    gauss.add_argument("--n", type=int, default=1000)
    gauss.add_argument("--deltas", default="0.2,0.25,0.3")
    gauss.add_argument("--out-dir", default="gaussian_out")
    gauss.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, InadmissibleError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
