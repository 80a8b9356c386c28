"""Command-line surface: capacity solves, simulation campaigns, invariant
suites, and estimation demos.

Conventions
-----------
* results go to stdout, diagnostics to stderr;
* every run writes a manifest.json into the output directory, and every
  result file names its manifest;
* `rerun <manifest>` reproduces the result files byte for byte (only the
  timing fields of the manifest itself differ);
* exit codes: 0 ok, 1 failed verification, 2 malformed input, 3 enumeration
  cap exceeded, 4 solver did not converge (report still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import SolverConfig, compute_Cn
from .causal import uniform_policy
from .channel import (
    CompoundFamily,
    FeedbackMap,
    identity_feedback,
    load_family,
    no_feedback,
)
from .codetree import Codebook, CodeTree, sample_codebook, tree_size
from .errors import CapExceededError, ValidationError
from .estimation import empirical_violation_rate, two_phase_scheme
from .presets import load_preset
from .simulate import TrialConfig, example1_config, example1_row, run_trials
from .util import LN2
from .verify import run_suites

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    argv: list
    config: dict
    seed: int
    out_dir: str
    version: str
    metrics: dict  # timing and iteration counts; excluded from reproducibility

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "argv": list(self.argv),
            "config": self.config,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "version": self.version,
            "metrics": self.metrics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            subcommand=d["subcommand"],
            argv=list(d["argv"]),
            config=dict(d["config"]),
            seed=int(d["seed"]),
            out_dir=d["out_dir"],
            version=d["version"],
            metrics=dict(d.get("metrics", {})),
        )


def _write_manifest(out: Path, subcommand: str, argv, config: dict, seed: int, metrics: dict) -> None:
    m = RunManifest(
        subcommand=subcommand,
        argv=list(argv),
        config=config,
        seed=seed,
        out_dir=str(out),
        version=__version__,
        metrics=metrics,
    )
    (out / MANIFEST_NAME).write_text(json.dumps(m.to_dict(), indent=2) + "\n")


def _write_json(out: Path, name: str, payload: dict) -> None:
    body = {"manifest": MANIFEST_NAME}
    body.update(payload)
    (out / name).write_text(json.dumps(body, indent=2) + "\n")


def _write_csv(out: Path, name: str, header: list, rows: list) -> None:
    with (out / name).open("w", newline="") as fh:
        fh.write(f"# manifest: {MANIFEST_NAME}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_argv(args, names: list) -> list:
    argv = [args.subcommand]
    for name in names:
        val = getattr(args, name.replace("-", "_"))
        if val is not None:
            argv.extend([f"--{name}", str(val)])
    return argv


def _resolve_family(args) -> tuple[CompoundFamily, dict]:
    if getattr(args, "family", None):
        return load_family(args.family), {"family_path": args.family}
    if getattr(args, "preset", None):
        return load_preset(args.preset), {"preset": args.preset}
    raise ValidationError("provide --family <file> or --preset <name>")


def _resolve_feedback(spec: str, outputs) -> FeedbackMap:
    if spec == "identity":
        return identity_feedback(outputs)
    if spec == "none":
        return no_feedback(outputs)
    if spec.startswith("table:"):
        path = spec.split(":", 1)[1]
        with open(path) as fh:
            return FeedbackMap.from_dict(json.load(fh))
    raise ValidationError("feedback must be 'identity', 'none', or 'table:<file>'")


def cmd_capacity(args) -> int:
    t0 = time.monotonic()
    family, fam_cfg = _resolve_family(args)
    fb = _resolve_feedback(args.feedback, family.members[0].outputs)
    cfg = SolverConfig(seed=args.seed)
    report = compute_Cn(family, fb, args.n, cfg)
    out = _out_dir(args)
    config = dict(fam_cfg, n=args.n, feedback=args.feedback, seed=args.seed)
    metrics = {
        "wall_clock_s": time.monotonic() - t0,
        "iterations": report.diagnostics.iterations,
        "restarts": report.diagnostics.restarts,
    }
    _write_manifest(out, "capacity", args.effective_argv, config, args.seed, metrics)
    _write_json(out, "capacity_report.json", report.to_dict())
    _write_csv(
        out,
        "convergence.csv",
        ["iteration", "value_nats_per_symbol"],
        list(enumerate(report.diagnostics.value_history, start=1)),
    )
    c, hat = report.C_n_nats, report.hatC_n_nats
    print(f"C_{args.n}    = {c:.9f} nats/symbol = {c / LN2:.9f} bits/symbol")
    print(f"hatC_{args.n} = {hat:.9f} nats/symbol = {hat / LN2:.9f} bits/symbol")
    print(f"worst case (initial state, member) = {report.worst_case}")
    if not report.diagnostics.converged:
        print("solver did not reach the convergence tolerance", file=sys.stderr)
        return 4
    return 0


def _constant_codebook(n: int, x_card: int, z_card: int, m_count: int) -> Codebook:
    if m_count > x_card:
        raise ValidationError("constant codebook supports at most |X| messages")
    size = tree_size(n, z_card)
    trees = tuple(
        CodeTree(depth=n, x_card=x_card, z_card=z_card, symbols=np.full(size, k, dtype=np.int64))
        for k in range(m_count)
    )
    return Codebook(trees=trees)


def _simulate_config(args) -> tuple[TrialConfig, dict]:
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    if "family" in file_cfg:
        family = CompoundFamily.from_list(file_cfg["family"])
        fam_cfg = {"family": "inline"}
    elif "family_path" in file_cfg:
        family = load_family(file_cfg["family_path"])
        fam_cfg = {"family_path": file_cfg["family_path"]}
    else:
        family, fam_cfg = _resolve_family(args)
    n = args.n if args.n is not None else file_cfg.get("n")
    if n is None:
        raise ValidationError("simulate needs --n or an 'n' entry in the config")
    trials = args.trials if args.trials is not None else file_cfg.get("trials", 10_000)
    seed = args.seed if args.seed is not None else file_cfg.get("seed", 0)
    fb_spec = args.feedback if args.feedback is not None else file_cfg.get("feedback", "identity")
    fb = _resolve_feedback(fb_spec, family.members[0].outputs)
    m_count = file_cfg.get("messages", 2)
    decoder = file_cfg.get("decoder", "ml")
    true_label = file_cfg.get("true_label", family.labels[0])
    cb_spec = file_cfg.get("codebook", "constant")
    first = family.members[0]
    if cb_spec == "constant":
        cb = _constant_codebook(n, first.n_inputs, fb.z_card, m_count)
    elif isinstance(cb_spec, dict) and "sample_seed" in cb_spec:
        rng = np.random.default_rng(int(cb_spec["sample_seed"]))
        cb = sample_codebook(uniform_policy(n, first.n_inputs, fb.z_card), m_count, rng)
    else:
        raise ValidationError("codebook must be 'constant' or {'sample_seed': int}")
    cfg = TrialConfig(
        family=family,
        true_label=true_label,
        codebook=cb,
        feedback=fb,
        decoder=decoder,
        trials=trials,
        seed=seed,
        s0=file_cfg.get("s0"),
    )
    config = dict(
        fam_cfg,
        n=n,
        trials=trials,
        seed=seed,
        feedback=fb_spec,
        messages=m_count,
        decoder=decoder,
        true_label=true_label,
        codebook=cb_spec,
    )
    return cfg, config


def _write_trial_log(out: Path, res) -> None:
    with (out / "trials.jsonl").open("w") as fh:
        fh.write(json.dumps({"manifest": MANIFEST_NAME, "format": "trial-log-v1"}) + "\n")
        for i in range(res.trials):
            rec = {
                "trial": i,
                "message": int(res.messages[i]),
                "decision": int(res.decisions[i]),
                "error": bool(res.error_flags[i]),
                "s0": int(res.initial_states[i]),
                "y": [int(v) for v in res.outputs[i]],
            }
            fh.write(json.dumps(rec) + "\n")


def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    out = _out_dir(args)
    trials = args.trials if args.trials is not None else 10_000
    seed = args.seed if args.seed is not None else 0
    if args.preset == "example1":
        n = args.n if args.n is not None else 8
        cfg = example1_config(theta=n, n=n, trials=trials, seed=seed)
        res = run_trials(cfg)
        row = example1_row(res, theta=n, n=n)
        config = {"preset": "example1", "theta": n, "n": n, "trials": trials, "seed": seed}
        header = [
            "theta",
            "n",
            "trials",
            "all_bad_freq",
            "all_bad_exact",
            "error_rate",
            "error_floor",
            "rate_floor_nats_per_symbol",
            "rate_floor_bits_per_symbol",
        ]
        rows = [[
            row.theta,
            row.n,
            row.trials,
            row.all_bad_freq,
            row.all_bad_exact,
            row.error_rate,
            row.error_floor,
            row.rate_floor_nats,
            row.rate_floor_bits,
        ]]
        summary = {
            "all_bad_freq": row.all_bad_freq,
            "all_bad_exact": row.all_bad_exact,
            "all_bad_sigma": row.all_bad_sigma,
            "error_rate": row.error_rate,
            "error_floor": row.error_floor,
            "error_sigma": row.error_sigma,
            "rate_floor_nats_per_symbol": row.rate_floor_nats,
            "rate_floor_bits_per_symbol": row.rate_floor_bits,
        }
        print(
            f"theta={row.theta} n={row.n} all_bad_freq={row.all_bad_freq:.6f} "
            f"(exact {row.all_bad_exact:.6f}) error_rate={row.error_rate:.6f}"
        )
    else:
        cfg, config = _simulate_config(args)
        seed = cfg.seed
        res = run_trials(cfg)
        header = [
            "true_label",
            "decoder",
            "n",
            "messages",
            "trials",
            "errors",
            "error_rate",
            "ci95_lo",
            "ci95_hi",
        ]
        rows = [[
            cfg.true_label,
            cfg.decoder,
            cfg.codebook.depth,
            cfg.codebook.m_count,
            res.trials,
            res.errors,
            res.error_rate,
            res.ci95[0],
            res.ci95[1],
        ]]
        summary = {
            "true_label": cfg.true_label,
            "decoder": cfg.decoder,
            "trials": res.trials,
            "errors": res.errors,
            "error_rate": res.error_rate,
            "ci95": list(res.ci95),
        }
        print(
            f"label={cfg.true_label} decoder={cfg.decoder} trials={res.trials} "
            f"error_rate={res.error_rate:.6f} ci95=({res.ci95[0]:.6f}, {res.ci95[1]:.6f})"
        )
    metrics = {"wall_clock_s": time.monotonic() - t0}
    _write_manifest(out, "simulate", args.effective_argv, config, seed, metrics)
    _write_csv(out, "simulate_results.csv", header, rows)
    _write_trial_log(out, res)
    if args.format == "json":
        _write_json(out, "simulate_results.json", summary)
    return 0


def cmd_verify(args) -> int:
    t0 = time.monotonic()
    names = None if args.suite in (None, "all") else [args.suite]
    results = run_suites(names)
    out = _out_dir(args)
    config = {"suite": args.suite or "all"}
    metrics = {"wall_clock_s": time.monotonic() - t0}
    _write_manifest(out, "verify", args.effective_argv, config, args.seed, metrics)
    header = ["check", "passed", "instances", "violations", "worst", "detail"]
    rows = [[r.name, r.passed, r.instances, r.violations, r.worst, r.detail] for r in results]
    _write_csv(out, "verify_results.csv", header, rows)
    if args.format == "json":
        _write_json(
            out,
            "verify_results.json",
            {"checks": [r.__dict__ for r in results]},
        )
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_estimate(args) -> int:
    t0 = time.monotonic()
    family, fam_cfg = _resolve_family(args)
    for label, m in family:
        if m.n_states != 1:
            raise ValidationError(f"member {label!r} has state memory; estimation needs memoryless members")
    true_label = args.true_label or family.labels[0]
    n_total = args.n if args.n is not None else 100_000
    sweep = [100, 316, 1000, 3162, 10000]
    sweep = [m for m in sweep if m < n_total]
    out = _out_dir(args)
    rate_rows = []
    for m_train in sweep:
        rep = two_phase_scheme(family, true_label, m_train, n_total, trials=args.trials, seed=args.seed)
        rate_rows.append([
            m_train,
            n_total,
            rep.achieved_mean,
            rep.achieved_mean / LN2,
            rep.target_rate,
            rep.benchmark_rate,
            rep.misidentification_rate,
        ])
        print(
            f"M={m_train:>6} achieved={rep.achieved_mean:.6f} nats/use "
            f"target={rep.target_rate:.6f} compound={rep.benchmark_rate:.6f} "
            f"misid={rep.misidentification_rate:.3f}"
        )
    sanov_rows = []
    fsc = family.member(true_label)
    for i, (m, eps1) in enumerate(((100, 0.3), (200, 0.2), (500, 0.15), (100, 0.5))):
        rate, bound = empirical_violation_rate(fsc, 0, m, eps1, trials=10_000, seed=args.seed + i)
        sanov_rows.append([m, eps1, rate, bound])
        print(f"sanov m={m} eps1={eps1} empirical={rate:.6f} bound={bound:.6g}")
    config = dict(fam_cfg, true_label=true_label, n=n_total, trials=args.trials, seed=args.seed)
    metrics = {"wall_clock_s": time.monotonic() - t0}
    _write_manifest(out, "estimate", args.effective_argv, config, args.seed, metrics)
    _write_csv(
        out,
        "estimate_rates.csv",
        [
            "m_train_symbols",
            "n_total_symbols",
            "achieved_nats_per_use",
            "achieved_bits_per_use",
            "target_nats_per_use",
            "compound_nats_per_use",
            "misidentification_rate",
        ],
        rate_rows,
    )
    _write_csv(
        out,
        "sanov_table.csv",
        ["m_samples", "eps1_l1", "empirical_rate", "bound"],
        sanov_rows,
    )
    return 0


def cmd_rerun(args) -> int:
    with open(args.manifest) as fh:
        m = RunManifest.from_dict(json.load(fh))
    argv = list(m.argv)
    if args.out is not None:
        out_flag = ["--out", args.out]
        if "--out" in argv:
            i = argv.index("--out")
            argv[i : i + 2] = out_flag
        else:
            argv.extend(out_flag)
    return main(argv)


def _add_common(p, with_n=True):
    p.add_argument("--family", help="family JSON file")
    p.add_argument("--preset", help="named built-in family or scenario")
    if with_n:
        p.add_argument("--n", type=int, help="horizon (symbols)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compound-fsc",
        description="Worst-case feedback information rates for finite-state channel families.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("capacity", help="solve the max-min information rate")
    _add_common(p)
    p.add_argument("--feedback", default="identity", help="identity | none | table:<file>")
    p.set_defaults(func=cmd_capacity, _argnames=["family", "preset", "n", "feedback", "seed", "out", "format"])

    p = sub.add_parser("simulate", help="Monte Carlo error rates")
    _add_common(p)
    p.set_defaults(seed=None)  # flags override the config file; None means unset
    p.add_argument("--feedback", help="identity | none | table:<file>")
    p.add_argument("--trials", type=int)
    p.add_argument("--config", help="TrialConfig JSON file")
    p.set_defaults(
        func=cmd_simulate,
        _argnames=["family", "preset", "n", "feedback", "trials", "config", "seed", "out", "format"],
    )

    p = sub.add_parser("verify", help="run named invariant suites")
    p.add_argument("--suite", help="suite name or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_verify, _argnames=["suite", "seed", "out", "format"])

    p = sub.add_parser("estimate", help="training-based identification demos")
    _add_common(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--true-label", help="member that actually governs the channel")
    p.set_defaults(
        func=cmd_estimate,
        _argnames=["family", "preset", "n", "trials", "true-label", "seed", "out", "format"],
    )

    p = sub.add_parser("rerun", help="re-execute a run from its manifest")
    p.add_argument("manifest", help="manifest.json emitted by a previous run")
    p.add_argument("--out", help="redirect outputs to a new directory")
    p.set_defaults(func=cmd_rerun, _argnames=[])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand != "rerun":
        args.effective_argv = _effective_argv(args, args._argnames)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
