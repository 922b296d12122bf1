"""Seeded Monte Carlo experiments and report serialisation.

Trial ``i`` of an experiment with master seed ``s`` runs with the seed
``trial_seed(s, i)``, the first 64-bit word of ``SeedSequence([s, i])``, so
any single trial can be replayed on its own through ``run_protocol``.

Report schema (JSON object, keys in this order):

    config                    echoed ExperimentConfig (see ``CONFIG_FIELDS``)
    trials, accepted, aborted, infeasible
    abort_reasons             {"ErrorRateExceeded": int, "MinusSignFlag": int}
    detection_rate            aborted / trials
    wilson_ci_95              [low, high] for detection_rate
    key_agreement_rate        alice_key == bob_key among accepted, null if none
    attacker_target_hit_rate  alice_key == target among accepted, null without target
    checked_pairs, check_errors
    pair_error_rate           check_errors / checked_pairs, null if none

Floats are written with six decimals. The CSV form flattens this into
``CSV_COLUMNS``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from sqka.adversary import (
    BobBehavior,
    BobMode,
    Direction,
    EveBehavior,
    EveMode,
    PlannerInfeasible,
    plan_fake_permutation,
    plan_substitution,
)
from sqka.common import Case, CaseChoice, Permutation, assign_cases, bits_str, parse_bits, xor_bits
from sqka.protocol import (
    AbortReason,
    AlicePolicy,
    AliceState,
    BobState,
    RunOutcome,
    Variant,
    alice_prepare,
    announce_case_a,
    bob_encode,
    detection_check,
    run_protocol,
)
from sqka.qsim import BellKind, QuantumRegistry

CONFIG_FIELDS = ("variant", "n", "trials", "seed", "bob", "target", "swaps", "eve", "eve_direction", "threshold")

CSV_COLUMNS = CONFIG_FIELDS + (
    "accepted",
    "aborted",
    "infeasible",
    "aborted_error_rate",
    "aborted_minus_sign",
    "detection_rate",
    "wilson_low",
    "wilson_high",
    "key_agreement_rate",
    "attacker_target_hit_rate",
    "checked_pairs",
    "check_errors",
    "pair_error_rate",
)

FLOAT_DIGITS = 6


@dataclass(frozen=True)
class ExperimentConfig:
    variant: Variant = Variant.ORIGINAL
    n: int = 4
    trials: int = 100
    seed: int = 0
    bob: BobBehavior = field(default_factory=BobBehavior.honest)
    eve: EveBehavior = field(default_factory=EveBehavior.none)
    threshold: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.bob.validate(self.n)

    def echo(self) -> dict:
        return {
            "variant": self.variant.value,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "bob": self.bob.mode.value,
            "target": bits_str(self.bob.target) if self.bob.target is not None else None,
            "swaps": self.bob.swaps,
            "eve": self.eve.mode.value,
            "eve_direction": self.eve.direction.value,
            "threshold": float(self.threshold),
        }

    @classmethod
    def from_echo(cls, echo: dict) -> "ExperimentConfig":
        target = parse_bits(echo["target"]) if echo.get("target") else None
        return cls(
            variant=Variant(echo["variant"]),
            n=int(echo["n"]),
            trials=int(echo["trials"]),
            seed=int(echo["seed"]),
            bob=BobBehavior(BobMode(echo["bob"]), target, swaps=int(echo["swaps"])),
            eve=EveBehavior(EveMode(echo["eve"]), Direction(echo["eve_direction"])),
            threshold=float(echo["threshold"]),
        )


def trial_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class TrialResult:
    index: int
    infeasible: bool
    status: str | None = None
    abort_reason: AbortReason | None = None
    keys_agree: bool = False
    target_hit: bool = False
    checked: int = 0
    check_errors: int = 0


def run_trial(config: ExperimentConfig, index: int) -> TrialResult:
    try:
        outcome, _ = run_protocol(
            config.variant,
            config.n,
            bob=config.bob,
            eve=config.eve,
            threshold=config.threshold,
            seed=trial_seed(config.seed, index),
        )
    except PlannerInfeasible:
        return TrialResult(index, infeasible=True)
    target = config.bob.target
    return TrialResult(
        index,
        infeasible=False,
        status=outcome.status,
        abort_reason=outcome.abort_reason,
        keys_agree=outcome.accepted and outcome.alice_key == outcome.bob_key,
        target_hit=outcome.accepted and target is not None and outcome.alice_key == target,
        checked=outcome.checked,
        check_errors=outcome.check_errors,
    )


def wilson_interval(successes: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    if total <= 0:
        raise ValueError("Wilson interval needs at least one trial")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    trials: int
    accepted: int
    aborted: int
    infeasible: int
    abort_reasons: dict
    detection_rate: float
    wilson_ci_95: tuple[float, float]
    key_agreement_rate: float | None
    attacker_target_hit_rate: float | None
    checked_pairs: int
    check_errors: int
    pair_error_rate: float | None

    def as_dict(self) -> dict:
        return {
            "config": dict(self.config),
            "trials": self.trials,
            "accepted": self.accepted,
            "aborted": self.aborted,
            "infeasible": self.infeasible,
            "abort_reasons": dict(self.abort_reasons),
            "detection_rate": self.detection_rate,
            "wilson_ci_95": list(self.wilson_ci_95),
            "key_agreement_rate": self.key_agreement_rate,
            "attacker_target_hit_rate": self.attacker_target_hit_rate,
            "checked_pairs": self.checked_pairs,
            "check_errors": self.check_errors,
            "pair_error_rate": self.pair_error_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(
            config=d["config"],
            trials=d["trials"],
            accepted=d["accepted"],
            aborted=d["aborted"],
            infeasible=d["infeasible"],
            abort_reasons=d["abort_reasons"],
            detection_rate=d["detection_rate"],
            wilson_ci_95=tuple(d["wilson_ci_95"]),
            key_agreement_rate=d["key_agreement_rate"],
            attacker_target_hit_rate=d["attacker_target_hit_rate"],
            checked_pairs=d["checked_pairs"],
            check_errors=d["check_errors"],
            pair_error_rate=d["pair_error_rate"],
        )


def aggregate(config: ExperimentConfig, results: Iterable[TrialResult]) -> ExperimentReport:
    """Fold trial results into a report; the fold is order-independent."""
    results = sorted(results, key=lambda r: r.index)
    if [r.index for r in results] != list(range(config.trials)):
        raise ValueError("results must cover each trial index exactly once")
    accepted = sum(1 for r in results if r.status == RunOutcome.ACCEPTED)
    aborted = sum(1 for r in results if r.status == RunOutcome.ABORTED)
    infeasible = sum(1 for r in results if r.infeasible)
    reasons = {reason.value: sum(1 for r in results if r.abort_reason is reason) for reason in AbortReason}
    checked = sum(r.checked for r in results)
    errors = sum(r.check_errors for r in results)
    agree = sum(1 for r in results if r.keys_agree)
    hits = sum(1 for r in results if r.target_hit)
    has_target = config.bob.target is not None
    return ExperimentReport(
        config=config.echo(),
        trials=config.trials,
        accepted=accepted,
        aborted=aborted,
        infeasible=infeasible,
        abort_reasons=reasons,
        detection_rate=aborted / config.trials,
        wilson_ci_95=wilson_interval(aborted, config.trials),
        key_agreement_rate=agree / accepted if accepted else None,
        attacker_target_hit_rate=hits / accepted if (accepted and has_target) else None,
        checked_pairs=checked,
        check_errors=errors,
        pair_error_rate=errors / checked if checked else None,
    )


def _run_chunk(args) -> list[TrialResult]:
    config, indices = args
    return [run_trial(config, i) for i in indices]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    indices = range(config.trials)
    if workers <= 1:
        results = [run_trial(config, i) for i in indices]
    else:
        chunks = [(config, list(indices[w::workers])) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    return aggregate(config, results)


# -- serialisation ------------------------------------------------------------


def _json_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return f"{v:.{FLOAT_DIGITS}f}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(v)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{FLOAT_DIGITS}f}"
    return str(v)


def report_row(report: ExperimentReport) -> dict:
    row = dict(report.config)
    row.update(
        accepted=report.accepted,
        aborted=report.aborted,
        infeasible=report.infeasible,
        aborted_error_rate=report.abort_reasons[AbortReason.ERROR_RATE_EXCEEDED.value],
        aborted_minus_sign=report.abort_reasons[AbortReason.MINUS_SIGN_FLAG.value],
        detection_rate=report.detection_rate,
        wilson_low=report.wilson_ci_95[0],
        wilson_high=report.wilson_ci_95[1],
        key_agreement_rate=report.key_agreement_rate,
        attacker_target_hit_rate=report.attacker_target_hit_rate,
        checked_pairs=report.checked_pairs,
        check_errors=report.check_errors,
        pair_error_rate=report.pair_error_rate,
    )
    return {k: row[k] for k in CSV_COLUMNS}


def emit_report(report: ExperimentReport | Sequence[ExperimentReport], format: str = "json") -> bytes:
    """Serialise one report, or a list of them (one JSON array / one CSV row each)."""
    reports = [report] if isinstance(report, ExperimentReport) else list(report)
    if format == "json":
        if isinstance(report, ExperimentReport):
            text = _json_value(report.as_dict())
        else:
            text = "[" + ", ".join(_json_value(r.as_dict()) for r in reports) + "]"
        return (text + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow([_csv_cell(v) for v in report_row(r).values()])
        return buf.getvalue().encode()
    raise ValueError(f"unknown report format {format!r}")


# -- worked examples ----------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    name: str
    expected: str
    observed: str

    @property
    def passed(self) -> bool:
        return self.expected == self.observed

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: expected {self.expected}, observed {self.observed}"


PHI, PSI = BellKind.PHI_PLUS, BellKind.PSI_PLUS

# Permutation-attack instance: four case-(b) positions first, four detection positions after.
PERM_INITIALS = (PHI, PHI, PSI, PSI, PHI, PHI, PHI, PHI)
PERM_RAW_KEY = parse_bits("1001" + "0000")
PERM_K_B = parse_bits("0101")
PERM_R = parse_bits("1001")
PERM_TARGET = parse_bits("1010")

# Substitution-attack instance.
SUB_RAW_KEY = parse_bits("01000001")
SUB_K_B = parse_bits("00010010")
SUB_CASES = tuple(CaseChoice(Case.B, 1) if b else CaseChoice(Case.A) for b in SUB_K_B)


def _permutation_instance_seed(limit: int = 4096) -> int:
    """First seed whose Z results on the four case-(b) halves are 1, 0, 0, 1."""
    bob = BobBehavior.honest(
        cases=assign_cases((1, 2, 3, 4), PERM_K_B, 8), permutation=Permutation.identity(8)
    )
    alice = AlicePolicy(PERM_INITIALS, PERM_RAW_KEY)
    for seed in range(limit):
        outcome, _ = run_protocol(Variant.ORIGINAL, 4, alice, bob, seed=seed)
        if tuple(r for _, r in outcome.measured) == PERM_R:
            return seed
    raise RuntimeError("no seed reproduces the measurement record")


def replay_permutation_example() -> list[Verdict]:
    seed = _permutation_instance_seed()
    pins = dict(cases=assign_cases((1, 2, 3, 4), PERM_K_B, 8), permutation=Permutation.identity(8))
    alice = AlicePolicy(PERM_INITIALS, PERM_RAW_KEY)
    honest, _ = run_protocol(Variant.ORIGINAL, 4, alice, BobBehavior.honest(**pins), seed=seed)
    attack, _ = run_protocol(
        Variant.ORIGINAL, 4, alice, BobBehavior.permutation_attack(PERM_TARGET, **pins), seed=seed
    )
    replacements = xor_bits(PERM_R, PERM_K_B)
    k_a = PERM_RAW_KEY[:4]
    sigma = plan_fake_permutation(PERM_R, replacements, PERM_INITIALS[:4], k_a, PERM_TARGET)
    return [
        Verdict("perm/measurements", "1001", bits_str(r for _, r in honest.measured)),
        Verdict("perm/replacements", "1100", bits_str(replacements)),
        Verdict("perm/honest K_AB", "1100", bits_str(honest.alice_key or ())),
        Verdict("perm/honest detection errors", "0", str(honest.check_errors)),
        Verdict("perm/fake routing", "1324", "".join(map(str, sigma.forward))),
        Verdict("perm/decoded K'_B", "0011", bits_str(attack.decoded_k_b or ())),
        Verdict("perm/attack K'_AB", "1010", bits_str(attack.alice_key or ())),
        Verdict("perm/attack status", RunOutcome.ACCEPTED, attack.status),
        Verdict("perm/attack detection errors", "0", str(attack.check_errors)),
    ]


def replay_substitution_bookkeeping() -> list[Verdict]:
    shared = xor_bits(SUB_RAW_KEY, SUB_K_B)
    verdicts = [Verdict("subst/K'_AB", "01010011", bits_str(shared))]
    for target, positions in (("0000", "2478"), ("1111", "1356")):
        detect = plan_substitution(SUB_CASES, SUB_RAW_KEY, parse_bits(target))
        kept = bits_str(b for i, b in enumerate(shared, start=1) if i not in detect)
        verdicts.append(Verdict(f"subst/positions for {target}", positions, "".join(map(str, sorted(detect)))))
        verdicts.append(Verdict(f"subst/kept key for {target}", target, kept))
    return verdicts


def substitution_physical_errors(seed: int) -> tuple[int, ...]:
    """Detection errors when the literal substitution configuration is actually run."""
    reg_rng, alice_rng, bob_rng = (np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(3))
    registry = QuantumRegistry(rng=reg_rng)
    pairs, travel = alice_prepare(registry, 4, alice_rng)
    bob = BobState(SUB_CASES, Permutation.random(8, bob_rng))
    routed, bob.measured, bob.replacements = bob_encode(registry, Variant.ORIGINAL, travel, bob.cases, bob.permutation)
    alice = AliceState(pairs, routed)
    detect = plan_substitution(SUB_CASES, SUB_RAW_KEY, parse_bits("0000"))
    return detection_check(registry, alice, announce_case_a(bob, detect)).error_positions


def replay_substitution_physical(runs: int = 100) -> list[Verdict]:
    observed = {substitution_physical_errors(seed) for seed in range(runs)}
    text = ";".join(sorted("".join(map(str, e)) for e in observed))
    return [Verdict(f"subst/physical error positions over {runs} runs", "47", text)]


def replay_substitution_canonical() -> list[Verdict]:
    outcome, _ = run_protocol(
        Variant.ORIGINAL,
        4,
        AlicePolicy(key=SUB_RAW_KEY),
        BobBehavior.substitution_attack(parse_bits("0000")),
        seed=0,
    )
    return [
        Verdict("subst/canonical final key", "0000", bits_str(outcome.alice_key or ())),
        Verdict("subst/canonical detection errors", "0", str(outcome.check_errors)),
    ]


def replay_paper_examples() -> list[Verdict]:
    return (
        replay_permutation_example()
        + replay_substitution_bookkeeping()
        + replay_substitution_physical()
        + replay_substitution_canonical()
    )
