"""Command line front end: ``beamtrain <command> --config scenario.json``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .beamstats import (
    BeamHistory,
    BeamPmf,
    aggregate,
    cumulative_cut,
    empirical_pmf,
    entropy,
    min_entropy_grouping,
    rank,
    ranked_probs,
    relative_entropy,
)
from .config import ConfigError, ScenarioConfig, load_config, load_history, save_history
from .montecarlo import compare_strategies, run_trials
from .strategies import default_num_groups, op_operator

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EXHAUSTED = 4

log = logging.getLogger("beamtrain")


def _pmf_report(pmf: BeamPmf) -> dict:
    ranks = rank(pmf).ranks
    rel = relative_entropy(pmf) if len(pmf) > 1 else None
    return {
        "beams": [{"beam": lab, "probability": p, "rank": r}
                  for lab, p, r in zip(pmf.labels, pmf.probs, ranks)],
        "entropy": entropy(pmf),
        "relativeEntropy": rel,
    }


def _print_pmf_table(title: str, report: dict, prob_header: str = "Probability",
                     rank_fmt=str) -> None:
    print(title)
    print(f"  {'Beam#':<8}{prob_header:<26}Rank")
    for row in report["beams"]:
        print(f"  {row['beam']:<8}{row['probability']:<26.4g}{rank_fmt(row['rank'])}")


def _scenario_pmfs(cfg: ScenarioConfig, args) -> tuple[BeamPmf, BeamPmf]:
    if getattr(args, "history", None):
        hist = load_history(args.history)
        return empirical_pmf(hist, cfg.smoothing)
    return cfg.tx_pmf, cfg.rx_pmf


def cmd_entropy(cfg: ScenarioConfig, args) -> int:
    tx, rx = _scenario_pmfs(cfg, args)
    report = {"tx": _pmf_report(tx), "rx": _pmf_report(rx)}
    if args.format == "json":
        print(json.dumps(report, indent=2))
        return EXIT_OK
    for side, title in (("tx", "Tx beam PMF and rankings"), ("rx", "Rx beam PMF and rankings")):
        r = report[side]
        _print_pmf_table(title, r)
        print(f"  beam entropy           {r['entropy']:.4f}")
        if r["relativeEntropy"] is not None:
            print(f"  relative beam entropy  {r['relativeEntropy']:.4f}")
        print()
    return EXIT_OK


def cmd_analyze(cfg: ScenarioConfig, args) -> int:
    tx, rx = _scenario_pmfs(cfg, args)
    swap = entropy(rx) > entropy(tx)
    outer, inner = (tx, rx) if swap else (rx, tx)
    x = op_operator(ranked_probs(outer), ranked_probs(inner))
    k = np.kron(ranked_probs(outer), ranked_probs(inner))
    top = min(args.top, len(k))
    report = {
        "outerSide": "tx" if swap else "rx",
        "meanTests": float(x.sum()),
        "successProbability": {str(i + 1): float(k[i]) for i in range(top)},
        "cumulativeCut": {
            "tx": {"threshold": cfg.threshold_tx,
                   "beams": cumulative_cut(rank(tx), tx, cfg.threshold_tx)},
            "rx": {"threshold": cfg.threshold_rx,
                   "beams": cumulative_cut(rank(rx), rx, cfg.threshold_rx)},
        },
    }
    if args.format == "json":
        print(json.dumps(report, indent=2))
        return EXIT_OK
    print(f"average beam tests per pair identification (pure ranked): {report['meanTests']:.4f}")
    print(f"outer loop side: {report['outerSide']}")
    print()
    print(f"  {'# of tests':<12}Success Probability")
    for i in range(top):
        print(f"  {i + 1:<12}{k[i]:.4f}")
    print()
    for side in ("tx", "rx"):
        cut = report["cumulativeCut"][side]
        print(f"{side}: {cut['beams']} ranked beams reach cumulative probability {cut['threshold']}")
    return EXIT_OK


def cmd_hierarchy(cfg: ScenarioConfig, args) -> int:
    tx, _ = _scenario_pmfs(cfg, args)
    if cfg.groups is not None:
        groups = cfg.groups
    else:
        k = cfg.num_groups or default_num_groups(len(tx))
        groups = min_entropy_grouping(tx, k)
    hier = aggregate(tx, groups)
    broad = _pmf_report(hier.broad_pmf)
    conds = [_pmf_report(c) for c in hier.conditionals]
    if args.format == "json":
        print(json.dumps({"groups": [list(g) for g in hier.groups], "broad": broad,
                          "conditionals": conds}, indent=2))
        return EXIT_OK
    _print_pmf_table("Level 1 Tx broad beam PMF and rankings", broad, rank_fmt=lambda r: f"E{r}")
    print(f"  level 1 broad beam entropy  {broad['entropy']:.4f}")
    for g, (label, cond) in enumerate(zip(hier.broad_pmf.labels, conds), start=1):
        print()
        _print_pmf_table(f"Level 2 Tx beam rankings for {label}", cond, "Conditional Probability",
                         rank_fmt=lambda r, g=g: f"{g}Z{r}")
    return EXIT_OK


def _write_outputs(out: str, json_text: str, csv_text: str) -> None:
    stem = Path(out)
    if stem.suffix in (".json", ".csv"):
        stem = stem.with_suffix("")
    stem.with_suffix(".json").write_text(json_text + "\n")
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        fh.write(csv_text)


def _trials(cfg, args) -> tuple[int, int]:
    n = args.trials if args.trials is not None else cfg.n_trials
    seed = args.seed if args.seed is not None else cfg.seed
    if n < 1:
        raise ConfigError("--trials", "must be at least 1")
    return n, seed


def _update_history(cfg: ScenarioConfig, args, stats) -> None:
    if not cfg.history_enabled and not args.history:
        return
    path = Path(args.history) if args.history else cfg.resolve(cfg.history_path)
    n_tx, n_rx = len(cfg.tx_pmf), len(cfg.rx_pmf)
    history = load_history(path) if path.exists() else BeamHistory.empty(n_tx, n_rx)
    history = history.merge_counts(stats.found_tx, stats.found_rx)
    save_history(path, history)
    log.info("beam history updated at %s (%d observations)", path, history.total)


def cmd_simulate(cfg: ScenarioConfig, args) -> int:
    n, seed = _trials(cfg, args)
    stats = run_trials(cfg.build_strategy(), cfg.tx_pmf, cfg.rx_pmf, n, seed,
                       threads=args.threads, oracle_factory=cfg.oracle_factory())
    json_text, csv_text = stats.to_json(), stats.to_csv()
    if args.out:
        _write_outputs(args.out, json_text, csv_text)
    else:
        sys.stdout.write(csv_text if args.format == "csv" else json_text + "\n")
    _update_history(cfg, args, stats)
    if args.out:
        print(f"{cfg.strategy}: {n} trials, mean tests {stats.mean_tests:.4f}, "
              f"failed {stats.n_failed}")
    return EXIT_EXHAUSTED if stats.n_failed else EXIT_OK


def cmd_compare(cfg: ScenarioConfig, args) -> int:
    n, seed = _trials(cfg, args)
    configs = [(name, cfg.build_strategy(name)) for name in cfg.compare]
    comp = compare_strategies(configs, cfg.tx_pmf, cfg.rx_pmf, n, seed, threads=args.threads,
                              oracle_factory=cfg.oracle_factory())
    json_text = json.dumps(comp.to_dict(), indent=2)
    if args.out:
        _write_outputs(args.out, json_text, comp.to_csv())
    if args.format == "json" and not args.out:
        print(json_text)
    elif args.format == "csv" and not args.out:
        sys.stdout.write(comp.to_csv())
    else:
        print(f"  {'Method':<12}{'mean tests':>12}{'lifetime tests per 1e6':>26}")
        for name in comp.names:
            print(f"  {name:<12}{comp.mean(name):>12.4f}{comp.mean(name):>22.4f} x 10^6")
        print()
        for a in comp.names:
            for b in comp.names:
                if a != b and comp.savings(a, b) > 0:
                    print(f"  {a} saves {comp.savings(a, b):.1f}% vs {b}")
    failed = any(comp.stats[n].n_failed for n in comp.names)
    return EXIT_EXHAUSTED if failed else EXIT_OK


COMMANDS = {
    "entropy": (cmd_entropy, "beam entropy, relative entropy and rankings"),
    "analyze": (cmd_analyze, "analytical mean tests and per-test success probabilities"),
    "hierarchy": (cmd_hierarchy, "broad-beam PMF and conditional rankings"),
    "simulate": (cmd_simulate, "Monte Carlo run of the configured strategy"),
    "compare": (cmd_compare, "Monte Carlo comparison of several strategies"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamtrain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="scenario JSON, or a bundled fixture name such as table_i_ii")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--history", help="beam history file (PMFs derive from it / updated by simulate)")
        if name in ("simulate", "compare"):
            p.add_argument("--out", help="output path stem; writes <stem>.json and <stem>.csv")
            p.add_argument("--seed", type=int)
            p.add_argument("--trials", type=int)
            p.add_argument("--threads", type=int, default=None,
                           help="worker threads (default: all cores); output does not depend on it")
        if name == "analyze":
            p.add_argument("--top", type=int, default=2, help="rows of the success table")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("BEAMTRAIN_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
