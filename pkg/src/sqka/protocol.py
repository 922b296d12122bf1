"""Alice and Bob executing the original or the improved key agreement.

Positions and slots are 1-based throughout. Bob holds a full routing
permutation ``forward`` (original position -> return slot); the case-(a)
announcement reveals its restriction to the detection positions, the final
announcement the rest. Bob's key bits belong to his case-(b) positions in
ascending position order, and Alice's improved-variant key bits are aligned to
the kept positions in the same order.

Original order:  qubits out, qubits back, Alice's 2n-bit raw key, Bob's
detection positions, check, remaining routing, decode.
Improved order:  qubits out, qubits back, Bob's detection positions, check,
Alice's n-bit key, remaining routing, decode.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np

from sqka.adversary import (
    BobBehavior,
    BobMode,
    Direction,
    EveBehavior,
    eve_intercept_resend,
    plan_fake_permutation,
    plan_flip_permutation,
    plan_substitution,
    plan_swaps,
)
from sqka.common import Case, CaseChoice, Permutation, assign_cases, bits_str, xor_bits
from sqka.qsim import BellKind, QuantumRegistry, QubitId


class Variant(str, enum.Enum):
    ORIGINAL = "original"
    IMPROVED = "improved"


class AbortReason(str, enum.Enum):
    ERROR_RATE_EXCEEDED = "ErrorRateExceeded"
    MINUS_SIGN_FLAG = "MinusSignFlag"


class TranscriptOrderError(RuntimeError):
    """An announcement was emitted out of the variant's step order."""


class AnnouncementError(ValueError):
    """An announced routing is not part of a bijection on the slots."""


# -- transcript ---------------------------------------------------------------


def _routing_record(routing: dict[int, int]) -> list[list[int]]:
    return [[p, s] for p, s in sorted(routing.items())]


@dataclass(frozen=True)
class QubitsSent:
    kind: ClassVar[str] = "QubitsSent"
    direction: str
    count: int

    def record(self) -> dict:
        return {"direction": self.direction, "count": self.count}


@dataclass(frozen=True)
class CaseAAnnouncement:
    kind: ClassVar[str] = "CaseAAnnouncement"
    routing: dict[int, int]

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(sorted(self.routing))

    def record(self) -> dict:
        return {"positions": list(self.positions), "routing": _routing_record(self.routing)}


@dataclass(frozen=True)
class RawKeyAnnouncement:
    kind: ClassVar[str] = "RawKeyAnnouncement"
    bits: tuple[int, ...]

    def record(self) -> dict:
        return {"bits": bits_str(self.bits)}


@dataclass(frozen=True)
class KeyAnnouncement:
    kind: ClassVar[str] = "KeyAnnouncement"
    bits: tuple[int, ...]

    def record(self) -> dict:
        return {"bits": bits_str(self.bits)}


@dataclass(frozen=True)
class RemainingPermutationAnnouncement:
    kind: ClassVar[str] = "RemainingPermutationAnnouncement"
    routing: dict[int, int]

    def record(self) -> dict:
        return {"routing": _routing_record(self.routing)}


@dataclass(frozen=True)
class AbortNotice:
    kind: ClassVar[str] = "AbortNotice"
    reason: AbortReason

    def record(self) -> dict:
        return {"reason": self.reason.value}


Event = QubitsSent | CaseAAnnouncement | RawKeyAnnouncement | KeyAnnouncement | RemainingPermutationAnnouncement | AbortNotice

TO_BOB = "to_bob"
TO_ALICE = "to_alice"


def _step_key(event) -> str:
    if isinstance(event, QubitsSent):
        return f"QubitsSent:{event.direction}"
    return event.kind


_ORDER = {
    Variant.ORIGINAL: {
        None: {f"QubitsSent:{TO_BOB}"},
        f"QubitsSent:{TO_BOB}": {f"QubitsSent:{TO_ALICE}"},
        f"QubitsSent:{TO_ALICE}": {"RawKeyAnnouncement"},
        "RawKeyAnnouncement": {"CaseAAnnouncement"},
        "CaseAAnnouncement": {"AbortNotice", "RemainingPermutationAnnouncement"},
        "RemainingPermutationAnnouncement": {"AbortNotice"},
        "AbortNotice": set(),
    },
    Variant.IMPROVED: {
        None: {f"QubitsSent:{TO_BOB}"},
        f"QubitsSent:{TO_BOB}": {f"QubitsSent:{TO_ALICE}"},
        f"QubitsSent:{TO_ALICE}": {"CaseAAnnouncement"},
        "CaseAAnnouncement": {"AbortNotice", "KeyAnnouncement"},
        "KeyAnnouncement": {"RemainingPermutationAnnouncement"},
        "RemainingPermutationAnnouncement": {"AbortNotice"},
        "AbortNotice": set(),
    },
}


class Transcript:
    """Ordered record of one run; rejects events out of the variant's order."""

    def __init__(self, variant: Variant) -> None:
        self.variant = Variant(variant)
        self.events: list[Event] = []
        self._last: str | None = None

    def append(self, event: Event) -> None:
        key = _step_key(event)
        allowed = _ORDER[self.variant][self._last]
        if key not in allowed:
            raise TranscriptOrderError(
                f"{self.variant.value}: {key} cannot follow {self._last or 'start'}"
                f" (expected one of {sorted(allowed)})"
            )
        self.events.append(event)
        self._last = key

    def find(self, kind: type) -> list:
        return [e for e in self.events if isinstance(e, kind)]

    def records(self) -> list[dict]:
        return [
            {"seq": i, "event": e.kind, **e.record()} for i, e in enumerate(self.events)
        ]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.records())

    def __len__(self) -> int:
        return len(self.events)


# -- participants -------------------------------------------------------------


@dataclass
class PairRecord:
    index: int
    initial: BellKind
    alice_qubit: QubitId
    bob_slot: int | None = None

    def __post_init__(self) -> None:
        if self.initial not in (BellKind.PHI_PLUS, BellKind.PSI_PLUS):
            raise ValueError(f"pairs start in Phi+ or Psi+, got {self.initial!r}")


@dataclass(frozen=True)
class AlicePolicy:
    """Pins for Alice's random choices; ``None`` means draw from her stream."""

    initials: tuple[BellKind, ...] | None = None
    key: tuple[int, ...] | None = None


@dataclass
class AliceState:
    pairs: list[PairRecord]
    returned: list[QubitId] = field(default_factory=list)


@dataclass
class BobState:
    cases: tuple[CaseChoice, ...]
    permutation: Permutation
    measured: dict[int, int] = field(default_factory=dict)
    replacements: dict[int, int] = field(default_factory=dict)

    @property
    def case_a_positions(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.cases, start=1) if c.case == Case.A)

    @property
    def case_b_positions(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.cases, start=1) if c.case == Case.B)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(c.key_bit for c in self.cases if c.case == Case.B)


def alice_prepare(
    registry: QuantumRegistry,
    n: int,
    rng: np.random.Generator,
    initials: Sequence[BellKind] | None = None,
) -> tuple[list[PairRecord], list[QubitId]]:
    """2n pairs, each Phi+ or Psi+ uniformly; returns records and Bob's halves."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if initials is None:
        draws = rng.integers(0, 2, size=2 * n)
        initials = [BellKind.PSI_PLUS if d else BellKind.PHI_PLUS for d in draws]
    elif len(initials) != 2 * n:
        raise ValueError(f"{len(initials)} initial kinds for {2 * n} pairs")
    pairs, travel = [], []
    for i, kind in enumerate(initials, start=1):
        a, b = registry.new_bell_pair(kind)
        pairs.append(PairRecord(i, BellKind(kind), a, bob_slot=i))
        travel.append(b)
    return pairs, travel


def bob_encode(
    registry: QuantumRegistry,
    variant: Variant,
    slots: Sequence[QubitId],
    cases: Sequence[CaseChoice],
    permutation: Permutation,
) -> tuple[list[QubitId], dict[int, int], dict[int, int]]:
    """Apply Bob's per-position operations, then route by ``permutation``.

    Returns the routed qubits (index = return slot - 1), the Z results and
    the replacement values, both keyed by original position.
    """
    variant = Variant(variant)
    size = len(slots)
    if len(cases) != size or permutation.size != size:
        raise ValueError(f"{len(cases)} cases and a size-{permutation.size} permutation for {size} qubits")
    measured: dict[int, int] = {}
    replacements: dict[int, int] = {}
    held = list(slots)
    for i, choice in enumerate(cases, start=1):
        if choice.case == Case.A:
            continue
        if variant is Variant.IMPROVED and choice.key_bit == 0:
            continue
        q = held[i - 1]
        r = registry.measure_z(q)
        registry.discard(q)
        # Original: |r xor k>; improved only reaches here with k = 1, a flip.
        value = r ^ choice.key_bit
        held[i - 1] = registry.new_qubit(value)
        measured[i] = r
        replacements[i] = value
    routed: list[QubitId | None] = [None] * size
    for i in range(1, size + 1):
        routed[permutation(i) - 1] = held[i - 1]
    return routed, measured, replacements


def announce_case_a(bob: BobState, positions: Sequence[int] | None = None) -> CaseAAnnouncement:
    """Detection positions with their routing; honest unless ``positions`` is given."""
    chosen = bob.case_a_positions if positions is None else tuple(positions)
    return CaseAAnnouncement(bob.permutation.restrict(chosen))


def _check_slots(routing: dict[int, int], size: int, used: set[int]) -> None:
    slots = list(routing.values())
    if len(set(slots)) != len(slots) or any(not 1 <= s <= size for s in slots):
        raise AnnouncementError(f"announced slots {slots} are not distinct slots in 1..{size}")
    if used.intersection(slots):
        raise AnnouncementError(f"slots {sorted(used.intersection(slots))} announced twice")


@dataclass(frozen=True)
class CheckResult:
    checked: int
    errors: int
    error_positions: tuple[int, ...]
    passed: bool

    @property
    def error_rate(self) -> float:
        return self.errors / self.checked if self.checked else 0.0


def detection_check(
    registry: QuantumRegistry,
    alice: AliceState,
    announcement: CaseAAnnouncement,
    threshold: float = 0.0,
) -> CheckResult:
    """Bell-measure each announced pair; abort iff the error fraction exceeds ``threshold``."""
    _check_slots(announcement.routing, len(alice.returned), set())
    errors = []
    for pos, slot in sorted(announcement.routing.items()):
        pair = alice.pairs[pos - 1]
        outcome = registry.measure_bell(pair.alice_qubit, alice.returned[slot - 1])
        if outcome != pair.initial:
            errors.append(pos)
    checked = len(announcement.routing)
    rate = len(errors) / checked if checked else 0.0
    return CheckResult(checked, len(errors), tuple(errors), rate <= threshold)


def decode_bit(variant: Variant, initial: BellKind, outcome: BellKind) -> int | None:
    """Key bit Alice reads off one pair; ``None`` is the minus-sign flag."""
    same_family = BellKind(outcome).is_phi == BellKind(initial).is_phi
    if Variant(variant) is Variant.ORIGINAL:
        return 0 if same_family else 1
    if not same_family:
        return 1
    return 0 if outcome == initial else None


@dataclass(frozen=True)
class DecodeResult:
    bits: tuple[int | None, ...]
    positions: tuple[int, ...]
    outcomes: tuple[BellKind, ...]

    @property
    def flagged(self) -> tuple[int, ...]:
        return tuple(p for p, b in zip(self.positions, self.bits) if b is None)


def decode_bob_key(
    registry: QuantumRegistry,
    variant: Variant,
    alice: AliceState,
    case_a: CaseAAnnouncement,
    remaining: RemainingPermutationAnnouncement,
) -> DecodeResult:
    size = len(alice.pairs)
    expected = set(range(1, size + 1)) - set(case_a.routing)
    if set(remaining.routing) != expected:
        raise AnnouncementError(
            f"remaining routing covers {sorted(remaining.routing)}, expected {sorted(expected)}"
        )
    _check_slots(remaining.routing, size, set(case_a.routing.values()))
    bits, outcomes = [], []
    positions = tuple(sorted(remaining.routing))
    for pos in positions:
        pair = alice.pairs[pos - 1]
        outcome = registry.measure_bell(pair.alice_qubit, alice.returned[remaining.routing[pos] - 1])
        outcomes.append(outcome)
        bits.append(decode_bit(variant, pair.initial, outcome))
    return DecodeResult(tuple(bits), positions, tuple(outcomes))


def derive_final_key(
    variant: Variant,
    key_material: Sequence[int],
    k_b: Sequence[int],
    detection_positions: Sequence[int] = (),
) -> tuple[int, ...]:
    """K_AB = K_A xor K_B.

    For the original variant ``key_material`` is the 2n-bit raw key and the
    detection positions are dropped first; for the improved variant it is
    already the n-bit key.
    """
    if Variant(variant) is Variant.ORIGINAL:
        dropped = set(detection_positions)
        k_a = tuple(b for i, b in enumerate(key_material, start=1) if i not in dropped)
    else:
        k_a = tuple(key_material)
    return xor_bits(k_a, k_b)


# -- end to end ---------------------------------------------------------------


@dataclass(frozen=True)
class RunOutcome:
    status: str
    alice_key: tuple[int, ...] | None
    bob_key: tuple[int, ...] | None
    abort_reason: AbortReason | None
    checked: int
    check_errors: int
    error_positions: tuple[int, ...]
    flagged: tuple[int, ...] = ()
    decoded_k_b: tuple[int | None, ...] | None = None
    bob_k_b: tuple[int, ...] = ()
    measured: tuple[tuple[int, int], ...] = ()
    fake_routing: bool = False

    ACCEPTED: ClassVar[str] = "Accepted"
    ABORTED: ClassVar[str] = "Aborted"

    @property
    def accepted(self) -> bool:
        return self.status == self.ACCEPTED


def _rngs(seed) -> tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def _bob_setup(behavior: BobBehavior, variant: Variant, n: int, rng: np.random.Generator) -> BobState:
    size = 2 * n
    if behavior.cases is not None:
        cases = behavior.cases
    elif behavior.mode is BobMode.SUBSTITUTION:
        cases = tuple(CaseChoice(Case.A) for _ in range(size))
    else:
        b_positions = sorted(int(x) + 1 for x in rng.choice(size, n, replace=False))
        if behavior.key is not None:
            key = behavior.key
        else:
            key = tuple(int(x) for x in rng.integers(0, 2, size=n))
            if behavior.mode is BobMode.SWAP:
                key = (0,) * (2 * behavior.swaps) + key[2 * behavior.swaps :]
        cases = assign_cases(b_positions, key, size)
    if behavior.permutation is not None:
        permutation = behavior.permutation
    else:
        permutation = Permutation.random(size, rng)
    return BobState(tuple(cases), permutation)


def run_protocol(
    variant: Variant,
    n: int,
    alice: AlicePolicy | None = None,
    bob: BobBehavior | None = None,
    eve: EveBehavior | None = None,
    threshold: float = 0.0,
    seed=0,
    transcript: Transcript | None = None,
) -> tuple[RunOutcome, Transcript]:
    """One complete run. Aborts are outcomes; only infeasible attack plans raise."""
    variant = Variant(variant)
    alice = alice or AlicePolicy()
    bob = bob or BobBehavior.honest()
    eve = eve or EveBehavior.none()
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    bob.validate(n)
    size = 2 * n
    reg_rng, alice_rng, bob_rng = _rngs(seed)
    registry = QuantumRegistry(rng=reg_rng)
    tr = transcript if transcript is not None else Transcript(variant)

    # Alice prepares and sends the travelling halves
    pairs, travel = alice_prepare(registry, n, alice_rng, alice.initials)
    alice_state = AliceState(pairs)
    tr.append(QubitsSent(TO_BOB, size))
    if eve.attacks(Direction.FORWARD):
        travel = eve_intercept_resend(registry, travel)

    # Bob encodes, reorders and returns
    bob_state = _bob_setup(bob, variant, n, bob_rng)
    routed, bob_state.measured, bob_state.replacements = bob_encode(
        registry, variant, travel, bob_state.cases, bob_state.permutation
    )
    for pair in pairs:
        pair.bob_slot = bob_state.permutation(pair.index)
    tr.append(QubitsSent(TO_ALICE, size))
    if eve.attacks(Direction.BACKWARD):
        routed = eve_intercept_resend(registry, routed)
    alice_state.returned = routed

    # Announcements and the detection check
    if variant is Variant.ORIGINAL:
        raw_key = alice.key if alice.key is not None else tuple(int(x) for x in alice_rng.integers(0, 2, size=size))
        if len(raw_key) != size:
            raise ValueError(f"raw key must have {size} bits")
        tr.append(RawKeyAnnouncement(tuple(raw_key)))
        if bob.mode is BobMode.SUBSTITUTION:
            detect = plan_substitution(bob_state.cases, raw_key, bob.target)
            case_a = announce_case_a(bob_state, detect)
        else:
            case_a = announce_case_a(bob_state)
    else:
        if bob.mode is BobMode.SUBSTITUTION:
            # Committed before Alice's key exists: Bob can only pick blindly.
            detect = sorted(int(x) + 1 for x in bob_rng.choice(size, n, replace=False))
            case_a = announce_case_a(bob_state, detect)
        else:
            case_a = announce_case_a(bob_state)
    tr.append(case_a)
    check = detection_check(registry, alice_state, case_a, threshold)

    def aborted(reason: AbortReason, **extra) -> tuple[RunOutcome, Transcript]:
        tr.append(AbortNotice(reason))
        return (
            RunOutcome(
                RunOutcome.ABORTED,
                None,
                None,
                reason,
                check.checked,
                check.errors,
                check.error_positions,
                bob_k_b=bob_state.key,
                measured=tuple(sorted(bob_state.measured.items())),
                **extra,
            ),
            tr,
        )

    if not check.passed:
        return aborted(AbortReason.ERROR_RATE_EXCEEDED)

    kept = [i for i in range(1, size + 1) if i not in case_a.routing]
    if variant is Variant.ORIGINAL:
        k_a = tuple(b for i, b in enumerate(raw_key, start=1) if i not in case_a.routing)
        key_material = raw_key
    else:
        k_a = alice.key if alice.key is not None else tuple(int(x) for x in alice_rng.integers(0, 2, size=n))
        if len(k_a) != n:
            raise ValueError(f"Alice's key must have {n} bits")
        tr.append(KeyAnnouncement(tuple(k_a)))
        key_material = k_a
    if len(kept) != n:
        raise AnnouncementError(f"{len(kept)} positions kept, expected {n}")

    # Bob routes the kept positions, truthfully or not
    bob_kb = tuple(bob_state.cases[i - 1].key_bit or 0 for i in kept)
    fake = _fake_key_routing(bob, variant, bob_state, kept, k_a, bob_kb)
    if fake is None:
        routing = bob_state.permutation.restrict(kept)
        bob_expected = bob_kb
    else:
        sigma, bob_expected = fake
        routing = {kept[i]: bob_state.permutation(kept[sigma(i + 1) - 1]) for i in range(n)}
    remaining = RemainingPermutationAnnouncement(routing)
    tr.append(remaining)
    decoded = decode_bob_key(registry, variant, alice_state, case_a, remaining)
    extra = dict(
        decoded_k_b=decoded.bits,
        flagged=decoded.flagged,
        fake_routing=fake is not None and not fake[0].is_identity(),
    )
    if decoded.flagged:
        return aborted(AbortReason.MINUS_SIGN_FLAG, **extra)

    # Final keys
    alice_key = derive_final_key(variant, key_material, decoded.bits, case_a.positions)
    bob_key = xor_bits(k_a, bob_expected)
    return (
        RunOutcome(
            RunOutcome.ACCEPTED,
            alice_key,
            bob_key,
            None,
            check.checked,
            check.errors,
            check.error_positions,
            bob_k_b=bob_state.key,
            measured=tuple(sorted(bob_state.measured.items())),
            **extra,
        ),
        tr,
    )


def _fake_key_routing(bob, variant, bob_state, kept, k_a, bob_kb):
    """Key-level permutation Bob announces instead of the truth, with the K_B he expects Alice to read."""
    if bob.mode is BobMode.PERMUTATION:
        target = bob.target
        if variant is Variant.ORIGINAL:
            measured = [bob_state.measured[i] for i in kept]
            replacements = [bob_state.replacements[i] for i in kept]
            sigma = plan_fake_permutation(measured, replacements, None, k_a, target)
        else:
            sigma = plan_flip_permutation(bob_kb, k_a, target)
        return sigma, xor_bits(k_a, target)
    if bob.mode is BobMode.SWAP:
        return plan_swaps(len(kept), bob.swaps), bob_kb
    return None
