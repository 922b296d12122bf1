"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 a worked-example assertion failed,
3 attack plan infeasible.
"""

from __future__ import annotations

import argparse
import json
import sys

from sqka.adversary import BobBehavior, BobMode, EveBehavior, PlannerInfeasible
from sqka.common import bits_str, parse_bits
from sqka.harness import ExperimentConfig, emit_report, replay_paper_examples, run_experiment, trial_seed
from sqka.protocol import RunOutcome, Variant, run_protocol

EXIT_OK, EXIT_USAGE, EXIT_ASSERTION, EXIT_INFEASIBLE = 0, 1, 2, 3

EVE_CHOICES = ("none", "forward", "backward", "both")
SWEEP_PARAMS = ("n", "threshold", "trials", "seed", "swaps")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, trials: bool = True) -> None:
    p.add_argument("--variant", choices=[v.value for v in Variant], default="original")
    p.add_argument("--n", type=int, default=4, help="key length; 2n pairs are prepared")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bob", choices=[m.value for m in BobMode], default="honest")
    p.add_argument("--target", help="attack target key as a bit string of length n")
    p.add_argument("--swaps", type=int, default=1, help="transpositions for --bob swap")
    p.add_argument("--eve", choices=EVE_CHOICES, default="none", help="intercept-resend direction")
    p.add_argument("--threshold", type=float, default=0.0)
    if trials:
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--trace", help="write the transcript as JSON lines to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqka", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_common(sub.add_parser("run", help="one seeded protocol run"), trials=False)
    _add_common(sub.add_parser("attack", help="Monte Carlo experiment"))
    sweep = sub.add_parser("sweep", help="one report row per parameter value")
    _add_common(sweep)
    sweep.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    sweep.add_argument("--values", required=True, help="comma-separated values")
    examples = sub.add_parser("paper-examples", help="replay the worked attack examples")
    examples.add_argument("--out")
    return parser


def _behaviours(args) -> tuple[BobBehavior, EveBehavior]:
    target = None
    if args.target is not None:
        try:
            target = parse_bits(args.target)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        bob = BobBehavior(BobMode(args.bob), target, swaps=args.swaps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    eve = EveBehavior.none() if args.eve == "none" else EveBehavior.intercept_resend(args.eve)
    return bob, eve


def config_from_args(args, **overrides) -> ExperimentConfig:
    bob, eve = _behaviours(args)
    fields = dict(
        variant=Variant(args.variant),
        n=args.n,
        trials=getattr(args, "trials", 1),
        seed=args.seed,
        bob=bob,
        eve=eve,
        threshold=args.threshold,
    )
    fields.update(overrides)
    try:
        return ExperimentConfig(**fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(data: bytes, path: str | None) -> None:
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _cmd_run(args) -> int:
    config = config_from_args(args)
    try:
        outcome, transcript = run_protocol(
            config.variant, config.n, bob=config.bob, eve=config.eve,
            threshold=config.threshold, seed=config.seed,
        )
    except PlannerInfeasible as exc:
        print(f"sqka: attack plan infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(transcript.to_jsonl())
    lines = [f"variant {config.variant.value}, n={config.n}, seed={config.seed}"]
    for rec in transcript.records():
        detail = ", ".join(f"{k}={v}" for k, v in rec.items() if k not in ("seq", "event"))
        lines.append(f"  {rec['seq']:2d} {rec['event']}: {detail}")
    lines.append(f"status: {outcome.status}")
    if outcome.abort_reason is not None:
        lines.append(f"abort reason: {outcome.abort_reason.value}")
    lines.append(f"detection errors: {outcome.check_errors}/{outcome.checked}")
    if outcome.status == RunOutcome.ACCEPTED:
        lines.append(f"alice key: {bits_str(outcome.alice_key)}")
        lines.append(f"bob key:   {bits_str(outcome.bob_key)}")
    _write(("\n".join(lines) + "\n").encode(), args.out)
    return EXIT_OK


def _all_infeasible(reports) -> bool:
    return all(r.infeasible == r.trials for r in reports)


def _trace_trials(config: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        for i in range(config.trials):
            try:
                _, transcript = run_protocol(
                    config.variant, config.n, bob=config.bob, eve=config.eve,
                    threshold=config.threshold, seed=trial_seed(config.seed, i),
                )
            except PlannerInfeasible:
                continue
            for rec in transcript.records():
                fh.write(json.dumps({"trial": i, **rec}, separators=(",", ":")) + "\n")


def _cmd_attack(args) -> int:
    config = config_from_args(args)
    report = run_experiment(config, workers=args.workers)
    if args.trace:
        _trace_trials(config, args.trace)
    _write(emit_report(report, args.format or "json"), args.out)
    return EXIT_INFEASIBLE if _all_infeasible([report]) else EXIT_OK


def _sweep_value(param: str, text: str):
    try:
        return float(text) if param == "threshold" else int(text)
    except ValueError:
        raise UsageError(f"bad value {text!r} for --param {param}") from None


def _cmd_sweep(args) -> int:
    values = [_sweep_value(args.param, v.strip()) for v in args.values.split(",") if v.strip()]
    if not values:
        raise UsageError("--values is empty")
    configs = []
    for v in values:
        if args.param == "swaps":
            bob, _ = _behaviours(args)
            try:
                bob = BobBehavior(bob.mode, bob.target, swaps=v)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            configs.append(config_from_args(args, bob=bob))
        else:
            configs.append(config_from_args(args, **{args.param: v}))
    reports = [run_experiment(c, workers=args.workers) for c in configs]
    _write(emit_report(reports, args.format or "csv"), args.out)
    return EXIT_INFEASIBLE if _all_infeasible(reports) else EXIT_OK


def _cmd_paper_examples(args) -> int:
    verdicts = replay_paper_examples()
    text = "\n".join(v.line() for v in verdicts) + "\n"
    failed = sum(not v.passed for v in verdicts)
    text += f"{len(verdicts) - failed}/{len(verdicts)} assertions passed\n"
    _write(text.encode(), args.out)
    return EXIT_ASSERTION if failed else EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "attack": _cmd_attack,
    "sweep": _cmd_sweep,
    "paper-examples": _cmd_paper_examples,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sqka: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
