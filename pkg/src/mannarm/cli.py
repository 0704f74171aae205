"""Command-line entry point.

Subcommands: `run` integrates one scenario with one controller variant,
`compare` runs all four controller variants on a scenario and prints the
comparison tables, `verify` runs the built-in property/oracle suite.
Outputs (trace CSV, summary JSON, comparison text) land in the directory
given by --out (default: $MANNARM_OUT or ./out).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics_io, verify
from .dynamics import SingularMassError
from .scenarios import (CONTROLLERS, KEY_DESIGNS, REALLOC_POLICIES,
                        ScenarioParseError, ScenarioValidationError,
                        load_scenario_file, preset, scenario_to_dict)
from .simulation import DivergedError, RunResult, SimConfig, run_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

# compare rows: label -> (controller, reallocation policy)
COMPARE_VARIANTS = (
    ("nn", "nn", "off"),
    ("soft", "mann-soft", "off"),
    ("hard", "mann-hard", "off"),
    ("proposed", "mann-proposed", None),  # None: keep the scenario's policy
)

# canonical reallocation policy when --realloc is not given explicitly
DEFAULT_REALLOC = {"nn": "off", "mann-soft": "off", "mann-hard": "off",
                   "mann-proposed": "initial"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mannarm",
        description="Closed-loop simulation of memory-augmented neural "
                    "adaptive control for a two-link arm.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True,
                       help="preset id 0-6 or a scenario file path")
        p.add_argument("--dt", type=float, default=None,
                       help="integration grid step in seconds (default 1e-3)")
        p.add_argument("--t-end", type=float, default=None,
                       help="override the scenario duration")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--sample-every", type=int, default=None,
                       help="trace decimation in steps (default 10)")
        p.add_argument("--substeps", type=int, default=None,
                       help="RK4 subdivisions per grid step (default 4)")
        p.add_argument("--engine", choices=("auto", "kernel", "reference"),
                       default="auto")
        p.add_argument("--out", default=None,
                       help="output directory (default $MANNARM_OUT or ./out)")

    run_p = sub.add_parser("run", help="run one scenario/controller")
    common(run_p)
    run_p.add_argument("--controller", choices=CONTROLLERS, default=None,
                       help="controller variant (default: scenario's)")
    run_p.add_argument("--key", choices=KEY_DESIGNS, default=None,
                       help="memory key design (default: scenario's)")
    run_p.add_argument("--realloc", choices=REALLOC_POLICIES, default=None,
                       help="attention reallocation policy")

    cmp_p = sub.add_parser("compare",
                           help="run all four controller variants and tabulate")
    common(cmp_p)

    sub.add_parser("verify", help="run the built-in property/oracle checks")
    return parser


def _resolve_scenario(token: str):
    if token.strip() in {"0", "1", "2", "3", "4", "5", "6"}:
        return preset(token.strip())
    return load_scenario_file(token)


def _sim_config(args) -> SimConfig:
    kw = {}
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.t_end is not None:
        kw["t_end"] = args.t_end
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.sample_every is not None:
        kw["sample_every"] = args.sample_every
    if args.substeps is not None:
        kw["substeps"] = args.substeps
    kw["engine"] = args.engine
    return SimConfig(**kw)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("MANNARM_OUT") or "out"
    return Path(out)


def _config_echo(config: SimConfig, scenario) -> dict:
    return {
        "dt": config.dt,
        "t_end": config.t_end if config.t_end is not None else scenario.duration,
        "sample_every": config.sample_every,
        "substeps": config.substeps,
        "divergence_bound": config.divergence_bound,
        "seed": config.seed if config.seed is not None else scenario.seed,
    }


def _cmd_run(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.controller is not None:
        realloc = args.realloc or DEFAULT_REALLOC[args.controller]
        scenario = replace(scenario, controller=args.controller,
                           reallocation=realloc)
    elif args.realloc is not None:
        scenario = replace(scenario, reallocation=args.realloc)
    if args.key is not None:
        scenario = replace(scenario, key_design=args.key)
    config = _sim_config(args)

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(scenario, config)
    metrics_io.write_trace_csv(result.trace, out / "trace.csv")
    document = {
        "scenario": scenario_to_dict(result.scenario),
        "config": _config_echo(config, scenario),
        "runs": [metrics_io.summary_entry(scenario.controller, result)],
    }
    metrics_io.write_summary_json(document, out / "summary.json")
    s = result.summary
    print(f"scenario {scenario.id} | {scenario.controller} | "
          f"SRMSE x1e3: joint1={1e3 * s.srmse[0]:.2f} "
          f"joint2={1e3 * s.srmse[1]:.2f} | wrote {out}/trace.csv")
    return EXIT_OK


def _cmd_compare(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    config = _sim_config(args)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)

    results: list[tuple[str, RunResult]] = []
    for label, controller, realloc in COMPARE_VARIANTS:
        sc = replace(scenario, controller=controller,
                     reallocation=realloc if realloc is not None
                     else scenario.reallocation)
        result = run_scenario(sc, config)
        run_dir = out / label
        run_dir.mkdir(parents=True, exist_ok=True)
        metrics_io.write_trace_csv(result.trace, run_dir / "trace.csv")
        results.append((label, result))

    document = {
        "scenario": scenario_to_dict(scenario),
        "config": _config_echo(config, scenario),
        "runs": [metrics_io.summary_entry(label, res)
                 for label, res in results],
    }
    metrics_io.write_summary_json(document, out / "summary.json")

    summaries = [(label, res.summary) for label, res in results]
    blocks = [metrics_io.comparison_table(summaries, "soft", "proposed")]
    if all(res.summary.srmse_after is not None for _, res in results):
        blocks.append(metrics_io.comparison_table(
            summaries, "hard", "proposed", after=True,
            title="SRMSE x 10^3 (t > 10)"))
    text = "\n\n".join(blocks) + "\n"
    (out / "comparison.txt").write_text(text)
    print(text, end="")
    print(f"[wrote {out}/summary.json and per-variant traces]")
    return EXIT_OK


def _cmd_verify() -> int:
    results = verify.run_checks()
    ok = True
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.name}: {r.detail}")
        ok &= r.passed
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_ERROR


def parse_and_run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_verify()
    except (ScenarioParseError, ScenarioValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SingularMassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None) -> int:
    return parse_and_run(argv)


if __name__ == "__main__":
    sys.exit(main())
