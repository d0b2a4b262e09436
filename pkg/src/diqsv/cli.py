"""Command-line front end.

Subcommands: ``bound`` (planner report), ``plan-verify`` / ``plan-certify``
(protocol plans), ``verify`` / ``certify`` (simulate a run or a Monte Carlo
batch against a source spec), ``oracle`` (exact pass probability vs bound),
``figure`` (emit a CSV dataset plus its JSON sidecar).

Exit codes: 0 on success (including a successful verdict), 2 when a
simulated protocol ends inconclusive, 1 on usage or validation errors.
All randomness hangs off the single ``--seed`` flag; identical argv and
seed produce byte-identical output for any worker count. A JSON config file
may supply any long-option value (precedence: flags, then file, then
defaults).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bounds, experiments, protocols
from .games import standard_game
from .sources import source_from_spec, source_from_string

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the tool reserves 2 for verdicts."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _add_common_game_args(p: _Parser) -> None:
    p.add_argument("--game", choices=["mermin3", "chsh"], help="standard game name")
    p.add_argument("--c", type=float, default=None, help="robustness constant override")
    p.add_argument("--eps1", type=float, help="accepted departure from the quantum bound")
    p.add_argument("--delta", type=float, help="failure budget (confidence 1 - delta)")
    p.add_argument("--config", help="JSON file with default option values")


def build_parser() -> _Parser:
    parser = _Parser(prog="diqsv", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[], help="print the planner report as JSON")
    _add_common_game_args(p)
    p.add_argument("--eta", type=float, help="extractability deficit (eps2 = c * eta)")
    p.add_argument("--eps2", type=float, help="success tolerance; overrides --eta")
    p.add_argument("--mu", type=float, default=None, help="measurement probability (certification)")

    p = sub.add_parser("plan-verify", help="plan a verification run")
    _add_common_game_args(p)
    p.add_argument("--eta", type=float, help="extractability deficit to rule out")

    p = sub.add_parser("plan-certify", help="plan a certification run")
    _add_common_game_args(p)
    p.add_argument("--eta-c", type=float, help="certificate extractability deficit")
    p.add_argument("--mu", type=float, help="measurement probability")

    for name, extra in (("verify", ("eta",)), ("certify", ("eta-c", "mu"))):
        p = sub.add_parser(name, help=f"simulate {name.rstrip('y')}ication against a source")
        _add_common_game_args(p)
        for opt in extra:
            p.add_argument(f"--{opt}", type=float)
        p.add_argument("--source", help="source shorthand or JSON spec path")
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
        p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (default 1 = single run)")
        p.add_argument("--workers", type=int, default=None, help="parallel workers for Monte Carlo (default 1)")
        p.add_argument("--out", help="write the transcript (single run) here")
        p.add_argument("--format", choices=["json", "csv"], default=None)

    p = sub.add_parser("oracle", help="exact pass probability vs closed-form bound")
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, default=None, help="certification oracle when set")
    p.add_argument("--config", help="JSON file with default option values")

    p = sub.add_parser("figure", help="emit a figure dataset (CSV + JSON sidecar)")
    p.add_argument("figure_id", choices=sorted(experiments.FIGURE_COLUMNS))
    p.add_argument("--out", default=None, help="output directory (default .)")
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--etas", default=None, help="comma-separated eta grid")
    p.add_argument("--n-max", type=int, default=None, help="largest N in the grid")
    p.add_argument("--n-step", type=int, default=None, help="N grid step")
    p.add_argument("--config", help="JSON file with default option values")

    return parser


_FALLBACKS = {
    "verify": {"seed": 0, "trials": 1, "workers": 1, "format": "json"},
    "certify": {"seed": 0, "trials": 1, "workers": 1, "format": "json"},
    "figure": {"out": "."},
}


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill values still unset by flags from the config file, then hard defaults."""
    path = getattr(args, "config", None)
    if path:
        with open(path) as fh:
            loaded = json.load(fh)
        for key, value in loaded.items():
            dest = key.replace("-", "_")
            if hasattr(args, dest) and getattr(args, dest) is None:
                setattr(args, dest, value)
    for dest, value in _FALLBACKS.get(args.command, {}).items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, value)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ValueError(f"missing required options: {flags}")


def _game_and_model(args: argparse.Namespace):
    _require(args, "game")
    return standard_game(args.game, c=args.c)


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_source(text: str, copies: int):
    if text.endswith(".json") or os.path.exists(text):
        with open(text) as fh:
            return source_from_spec(json.load(fh), default_copies=copies)
    return source_from_string(text, copies)


def _plan_json(plan) -> dict:
    obj = {
        "game": plan.game.name,
        "c": plan.robustness.c,
        "p_QM": plan.robustness.p_qm,
        "eps1": plan.eps1,
        "eps2": plan.eps2,
        "delta": plan.delta,
        "p1": plan.p1,
        "p2": plan.p2,
        "N": plan.n_copies,
    }
    if isinstance(plan, protocols.CertificationPlan):
        obj["mu"] = plan.mu
        obj["eta_c"] = plan.eta_c
    else:
        obj["eta"] = plan.eta
    return obj


def _cmd_bound(args) -> int:
    game, model = _game_and_model(args)
    _require(args, "eps1", "delta")
    if args.eps2 is not None:
        eps2 = args.eps2
    else:
        _require(args, "eta")
        eps2 = model.require_c() * args.eta
    protocol = "verification" if args.mu is None else "certification"
    report = bounds.bound_report(protocol, model.p_qm, args.eps1, eps2, args.delta, mu=args.mu)
    _emit(report.to_json())
    return EXIT_OK


def _cmd_plan_verify(args) -> int:
    game, model = _game_and_model(args)
    _require(args, "eta", "eps1", "delta")
    plan = protocols.plan_verification(game, model, args.eta, args.eps1, args.delta)
    _emit(_plan_json(plan))
    return EXIT_OK


def _cmd_plan_certify(args) -> int:
    game, model = _game_and_model(args)
    _require(args, "eta_c", "mu", "eps1", "delta")
    plan = protocols.plan_certification(game, model, args.eta_c, args.mu, args.eps1, args.delta)
    _emit(_plan_json(plan))
    return EXIT_OK


def _run_protocol(args, plan) -> int:
    _require(args, "source")
    source = _load_source(args.source, plan.n_copies)
    if args.trials > 1:
        result = experiments.mc_pass_estimate(plan, source, args.trials, args.seed, workers=args.workers)
        _emit({"plan": _plan_json(plan), "mc": result.to_json()})
        return EXIT_OK
    runner = (
        protocols.run_certification
        if isinstance(plan, protocols.CertificationPlan)
        else protocols.run_verification
    )
    transcript, verdict = runner(plan, source, args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            if args.format == "csv":
                fh.write(transcript.to_csv())
            else:
                json.dump(transcript.to_json(), fh, indent=2, sort_keys=True)
                fh.write("\n")
    _emit({"plan": _plan_json(plan), "verdict": verdict.to_json()})
    return EXIT_OK if verdict.success else EXIT_INCONCLUSIVE


def _cmd_verify(args) -> int:
    game, model = _game_and_model(args)
    _require(args, "eta", "eps1", "delta")
    plan = protocols.plan_verification(game, model, args.eta, args.eps1, args.delta)
    return _run_protocol(args, plan)


def _cmd_certify(args) -> int:
    game, model = _game_and_model(args)
    _require(args, "eta_c", "mu", "eps1", "delta")
    plan = protocols.plan_certification(game, model, args.eta_c, args.mu, args.eps1, args.delta)
    return _run_protocol(args, plan)


def _cmd_oracle(args) -> int:
    probs = np.full(args.n, args.p2)
    if args.mu is None:
        result = experiments.verification_oracle(probs, args.p1, args.p2)
    else:
        result = experiments.certification_oracle(probs, args.mu, args.p1, args.p2)
    _emit(result.to_json())
    return EXIT_OK


def _cmd_figure(args) -> int:
    overrides = {}
    for key in ("c", "nu", "mu", "p1", "delta"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.etas is not None:
        overrides["etas"] = tuple(float(x) for x in str(args.etas).split(","))
    if args.n_max is not None or args.n_step is not None:
        base = experiments.default_figure_spec(args.figure_id)
        step = args.n_step or (base.n_grid[1] - base.n_grid[0] if len(base.n_grid) > 1 else 1)
        n_max = args.n_max or (base.n_grid[-1] if base.n_grid else 0)
        overrides["n_grid"] = tuple(range(step, n_max + 1, step))
    spec = experiments.default_figure_spec(args.figure_id, **overrides)
    csv_path, json_path = experiments.figure_dataset(spec, args.out)
    _emit({"csv": csv_path, "spec": json_path})
    return EXIT_OK


_COMMANDS = {
    "bound": _cmd_bound,
    "plan-verify": _cmd_plan_verify,
    "plan-certify": _cmd_plan_certify,
    "verify": _cmd_verify,
    "certify": _cmd_certify,
    "oracle": _cmd_oracle,
    "figure": _cmd_figure,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # bad usage (or -h); argparse already printed
        return int(exc.code or 0)
    try:
        args = _apply_config(args)
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
