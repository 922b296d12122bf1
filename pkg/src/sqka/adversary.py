"""Participant behaviours: honest and dishonest Bob, and an eavesdropper.

Planners here are pure functions of what the attacker knows at the moment he
has to commit. Infeasible plans raise :class:`PlannerInfeasible`; they never
fall back to honest behaviour.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from sqka.common import Case, CaseChoice, Permutation
from sqka.qsim import BellKind, QuantumRegistry, QubitId


class PlannerInfeasible(ValueError):
    """The requested target key cannot be realised from the available material."""


class BobMode(str, enum.Enum):
    HONEST = "honest"
    PERMUTATION = "permutation"
    SUBSTITUTION = "substitution"
    SWAP = "swap"


class EveMode(str, enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND_Z = "intercept-resend"


class Direction(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    BOTH = "both"


@dataclass(frozen=True)
class BobBehavior:
    """How Bob plays.

    ``target`` is the final key an attacking Bob aims for. ``swaps`` is the
    number of disjoint untouched-slot transpositions for ``SWAP``. ``key``,
    ``cases`` and ``permutation`` pin Bob's otherwise random choices; they
    exist for replaying fixed scenarios.
    """

    mode: BobMode = BobMode.HONEST
    target: tuple[int, ...] | None = None
    swaps: int = 1
    key: tuple[int, ...] | None = None
    cases: tuple[CaseChoice, ...] | None = None
    permutation: Permutation | None = None

    def __post_init__(self) -> None:
        needs_target = self.mode in (BobMode.PERMUTATION, BobMode.SUBSTITUTION)
        if needs_target and self.target is None:
            raise ValueError(f"{self.mode.value} attack needs a target key")
        if self.mode is BobMode.SWAP and self.swaps < 1:
            raise ValueError("swap strategy needs at least one swap")

    @classmethod
    def honest(cls, **pins) -> "BobBehavior":
        return cls(BobMode.HONEST, **pins)

    @classmethod
    def permutation_attack(cls, target: Sequence[int], **pins) -> "BobBehavior":
        return cls(BobMode.PERMUTATION, tuple(target), **pins)

    @classmethod
    def substitution_attack(cls, target: Sequence[int], **pins) -> "BobBehavior":
        return cls(BobMode.SUBSTITUTION, tuple(target), **pins)

    @classmethod
    def swap_untouched(cls, swaps: int = 1) -> "BobBehavior":
        return cls(BobMode.SWAP, swaps=swaps)

    def validate(self, n: int) -> None:
        if self.target is not None and len(self.target) != n:
            raise ValueError(f"target has {len(self.target)} bits, expected n={n}")
        if self.mode is BobMode.SWAP and 2 * self.swaps > n:
            raise ValueError(f"{self.swaps} swaps need n >= {2 * self.swaps}")


@dataclass(frozen=True)
class EveBehavior:
    mode: EveMode = EveMode.NONE
    direction: Direction = Direction.FORWARD

    @classmethod
    def none(cls) -> "EveBehavior":
        return cls()

    @classmethod
    def intercept_resend(cls, direction: Direction | str = Direction.FORWARD) -> "EveBehavior":
        return cls(EveMode.INTERCEPT_RESEND_Z, Direction(direction))

    def attacks(self, direction: Direction) -> bool:
        if self.mode is EveMode.NONE:
            return False
        return self.direction is Direction.BOTH or self.direction is direction


def _psi(kind: BellKind) -> int:
    return 0 if BellKind(kind).is_phi else 1


def plan_fake_permutation(
    measured: Sequence[int],
    replacements: Sequence[int],
    initials: Sequence[BellKind] | None,
    k_a: Sequence[int],
    target: Sequence[int],
) -> Permutation:
    """Fake final routing over the key positions 1..n of the original protocol.

    Every key slot holds a Z eigenstate by then: Alice's half collapsed to
    ``r ^ psi(initial)`` and Bob's returned qubit is ``replacements[j]``.
    Pairing key position ``i`` with slot ``j`` decodes to
    ``measured[i] ^ replacements[j]`` (the initial kind cancels), so Bob
    needs a slot of value ``measured[i] ^ k_a[i] ^ target[i]`` for each ``i``.
    Own slots are kept where they already work, which makes the honest
    target map to the identity. ``initials`` may be ``None`` since Bob never
    learns them.
    """
    n = len(measured)
    if initials is None:
        initials = [BellKind.PHI_PLUS] * n
    if not (len(replacements) == len(initials) == len(k_a) == len(target) == n):
        raise ValueError("planner inputs must all have length n")
    needed = []
    for i in range(n):
        alice_value = measured[i] ^ _psi(initials[i])
        want = k_a[i] ^ target[i]
        # decode = (alice_value ^ v) ^ psi(initial) must equal want
        needed.append(alice_value ^ want ^ _psi(initials[i]))

    assignment: dict[int, int] = {}
    free = set(range(n))
    for i in range(n):
        if replacements[i] == needed[i]:
            assignment[i] = i
            free.discard(i)
    for i in range(n):
        if i in assignment:
            continue
        donor = next((j for j in sorted(free) if replacements[j] == needed[i]), None)
        if donor is None:
            zeros_needed = needed.count(0)
            raise PlannerInfeasible(
                f"target needs {zeros_needed} zero-valued slots, Bob holds {list(replacements).count(0)}"
            )
        assignment[i] = donor
        free.discard(donor)
    return Permutation(tuple(assignment[i] + 1 for i in range(n)))


def plan_substitution(
    cases: Sequence[CaseChoice],
    raw_key: Sequence[int],
    target: Sequence[int],
) -> frozenset[int]:
    """Detection positions (1-based) that leave ``target`` as the kept key.

    Position ``i`` contributes ``raw_key[i] ^ k`` to the raw shared key, with
    ``k`` the case-(b) key bit or 0 for case (a). The honest case-(a) set is
    returned when it already yields ``target``; otherwise the earliest
    matching subsequence is kept.
    """
    size = len(cases)
    if len(raw_key) != size:
        raise ValueError(f"raw key has {len(raw_key)} bits for {size} positions")
    keep = len(target)
    if keep > size:
        raise PlannerInfeasible("target longer than the raw key")
    shared = [raw_key[i] ^ (cases[i].key_bit or 0) for i in range(size)]

    honest_detect = frozenset(i + 1 for i, c in enumerate(cases) if c.case == Case.A)
    honest_kept = [i for i in range(size) if (i + 1) not in honest_detect]
    if len(honest_kept) == keep and [shared[i] for i in honest_kept] == list(target):
        return honest_detect

    kept: list[int] = []
    t = 0
    for i in range(size):
        if t < keep and shared[i] == target[t]:
            kept.append(i)
            t += 1
    if t < keep:
        raise PlannerInfeasible(f"raw key {shared} has no subsequence {list(target)}")
    return frozenset(i + 1 for i in range(size) if i not in kept)


def plan_flip_permutation(k_b: Sequence[int], k_a: Sequence[int], target: Sequence[int]) -> Permutation:
    """Fake routing for the improved protocol, over key positions 1..n.

    Bob cannot predict Alice's outcomes on untouched pairs, so he simply
    derranges the positions whose decoded bit must change: a cyclic shift
    over them, or a transposition with the next key position if only one
    bit must change.
    """
    n = len(k_b)
    flips = [i for i in range(n) if k_a[i] ^ target[i] != k_b[i]]
    forward = list(range(n))
    if len(flips) == 1:
        i = flips[0]
        if n == 1:
            raise PlannerInfeasible("a single key position cannot be rerouted")
        flips.append((i + 1) % n)
        flips.sort()
    for a, b in zip(flips, flips[1:] + flips[:1]):
        forward[a] = b
    return Permutation(tuple(j + 1 for j in forward))


def plan_swaps(n: int, swaps: int) -> Permutation:
    """Transpose key positions (1,2), (3,4), ... for ``swaps`` pairs."""
    if 2 * swaps > n:
        raise PlannerInfeasible(f"{swaps} swaps need at least {2 * swaps} key positions")
    forward = list(range(1, n + 1))
    for s in range(swaps):
        forward[2 * s], forward[2 * s + 1] = forward[2 * s + 1], forward[2 * s]
    return Permutation(tuple(forward))


def eve_intercept_resend(registry: QuantumRegistry, slots: Sequence[QubitId]) -> list[QubitId]:
    """Measure each transiting qubit in Z and forward a fresh copy of the result."""
    out = []
    for q in slots:
        value = registry.measure_z(q)
        registry.discard(q)
        out.append(registry.new_qubit(value))
    return out
