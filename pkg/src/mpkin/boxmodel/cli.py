"""``boxmodel`` command line: run, validate, plot."""

from __future__ import annotations

import argparse
import sys

from mpkin.boxmodel.plot import emit_plot_data
from mpkin.boxmodel.runner import REPRESENTATIONS, run_scenario
from mpkin.boxmodel.scenario import load_scenario
from mpkin.config import ConfigError, errors_only, load_config, validate


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxmodel", description="multi-phase chemistry box model")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a scenario and write a CSV time series")
    run.add_argument("--config", nargs="+", required=True, help="mechanism JSON file(s)")
    run.add_argument("--scenario", required=True)
    run.add_argument("--representation", choices=REPRESENTATIONS, default="modes")
    run.add_argument("--output", required=True, help="CSV output path")
    run.add_argument("--seed", type=int, default=None, help="particle sampling seed")
    run.add_argument("--rtol", type=float, default=None, help="solver relative tolerance")
    run.add_argument("--per-slot", choices=("auto", "yes", "no"), default="auto",
                     help="write one column per aerosol state entry")
    run.add_argument("--dump-state", default=None, metavar="PATH",
                     help="write the final state as a binary snapshot")

    val = sub.add_parser("validate", help="check mechanism files and print diagnostics")
    val.add_argument("--config", nargs="+", required=True)

    plot = sub.add_parser("plot", help="emit plot-ready tables from run CSVs")
    plot.add_argument("--input", nargs="+", required=True,
                      help="CSV file(s), optionally LABEL=PATH")
    plot.add_argument("--species", required=True, help="comma-separated species names")
    plot.add_argument("--output", default=None, help="write the table here instead of stdout")
    return ap


def _cmd_run(args) -> int:
    config = load_config(args.config)
    scenario = load_scenario(args.scenario)
    per_slot = {"auto": None, "yes": True, "no": False}[args.per_slot]
    result = run_scenario(config, scenario, args.representation, args.output, seed=args.seed,
                          rel_tol=args.rtol, per_slot=per_slot, dump_state=args.dump_state)
    if result.exit_code == 0:
        print(f"wrote {len(result.times)} rows to {args.output} "
              f"({result.stats.steps} solver steps)")
    return result.exit_code


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    diags = validate(config)
    for d in diags:
        print(d)
    n_err = len(errors_only(diags))
    print(f"{n_err} error(s), {len(diags) - n_err} warning(s)")
    return 1 if n_err else 0


def _cmd_plot(args) -> int:
    inputs = []
    for item in args.input:
        label, sep, path = item.partition("=")
        inputs.append((label, path) if sep else item)
    species = [s.strip() for s in args.species.split(",") if s.strip()]
    text = emit_plot_data(inputs, species)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "plot": _cmd_plot}[args.command]
    try:
        return handler(args)
    except (ConfigError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"boxmodel {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
