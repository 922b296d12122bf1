"""Exact simulation of product qubits and Bell pairs.

The joint state is kept as a partition of live qubits into entanglement
groups. Each group carries a dense amplitude vector whose tensor order follows
its member list, first member = most significant bit. Measured qubits are
factored out into singleton groups immediately, so no group in a protocol run
grows past four qubits.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NewType

import numpy as np

from sqka import kernels

QubitId = NewType("QubitId", int)

NORM_TOL = 1e-9

_R = 1.0 / np.sqrt(2.0)


class BellKind(enum.IntEnum):
    """The four Bell states; the integer value is the kernel outcome index."""

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @property
    def is_phi(self) -> bool:
        return self in (BellKind.PHI_PLUS, BellKind.PHI_MINUS)

    @property
    def is_plus(self) -> bool:
        return self in (BellKind.PHI_PLUS, BellKind.PSI_PLUS)

    @property
    def label(self) -> str:
        return _LABELS[self]

    def amplitudes(self) -> np.ndarray:
        """Amplitudes over |00>, |01>, |10>, |11>."""
        return _BELL_VECTORS[self].copy()


_LABELS = {
    BellKind.PHI_PLUS: "Phi+",
    BellKind.PHI_MINUS: "Phi-",
    BellKind.PSI_PLUS: "Psi+",
    BellKind.PSI_MINUS: "Psi-",
}

_BELL_VECTORS = {
    BellKind.PHI_PLUS: np.array([_R, 0, 0, _R], dtype=complex),
    BellKind.PHI_MINUS: np.array([_R, 0, 0, -_R], dtype=complex),
    BellKind.PSI_PLUS: np.array([0, _R, _R, 0], dtype=complex),
    BellKind.PSI_MINUS: np.array([0, _R, -_R, 0], dtype=complex),
}


class QubitError(KeyError):
    """Raised for unknown or already discarded qubit ids."""


class EntangledDiscardError(ValueError):
    """Raised when discarding a qubit that still shares a group."""


@dataclass(frozen=True)
class EntanglementGroup:
    """Read-only snapshot of one group."""

    members: tuple[QubitId, ...]
    amplitudes: np.ndarray


class _Group:
    __slots__ = ("members", "amps")

    def __init__(self, members: list[QubitId], amps: np.ndarray) -> None:
        self.members = members
        self.amps = amps


def sample_index(probs, u: float) -> int:
    """Index i with cumsum(probs)[i-1] <= u < cumsum(probs)[i].

    Zero-probability entries are never returned, even when rounding leaves u
    above the final partial sum.
    """
    acc = 0.0
    last = -1
    for i, p in enumerate(probs):
        if p <= 0.0:
            continue
        acc += p
        last = i
        if u < acc:
            return i
    if last < 0:
        raise ValueError("no outcome has positive probability")
    return last


class QuantumRegistry:
    """Mutable joint state of all live qubits.

    One uniform draw is consumed per measurement, deterministic or not, so
    runs sharing a seed stay aligned even when their measurement outcomes
    differ.
    """

    def __init__(self, seed=None, *, rng: np.random.Generator | None = None) -> None:
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self._owner: dict[QubitId, _Group] = {}
        self._next_id = 0

    # -- bookkeeping -------------------------------------------------------

    def _group(self, q: QubitId) -> _Group:
        try:
            return self._owner[q]
        except KeyError:
            raise QubitError(f"qubit {q} is not live") from None

    def _add(self, members: list[QubitId], amps: np.ndarray) -> None:
        g = _Group(members, np.ascontiguousarray(amps, dtype=complex))
        for q in members:
            self._owner[q] = g

    def _fresh_id(self) -> QubitId:
        q = QubitId(self._next_id)
        self._next_id += 1
        return q

    def _joint(self, q1: QubitId, q2: QubitId) -> tuple[list[QubitId], np.ndarray]:
        if q1 == q2:
            raise ValueError("Bell measurement needs two distinct qubits")
        g1, g2 = self._group(q1), self._group(q2)
        if g1 is g2:
            return g1.members, g1.amps
        return g1.members + g2.members, kernels.kron(g1.amps, g2.amps)

    def live_qubits(self) -> list[QubitId]:
        return sorted(self._owner)

    def groups(self) -> list[EntanglementGroup]:
        seen: dict[int, _Group] = {}
        for g in self._owner.values():
            seen.setdefault(id(g), g)
        return [
            EntanglementGroup(tuple(g.members), g.amps.copy())
            for g in sorted(seen.values(), key=lambda g: min(g.members))
        ]

    def group_of(self, q: QubitId) -> EntanglementGroup:
        g = self._group(q)
        return EntanglementGroup(tuple(g.members), g.amps.copy())

    def is_entangled(self, q: QubitId) -> bool:
        return len(self._group(q).members) > 1

    # -- preparation -------------------------------------------------------

    def new_qubit(self, value: int) -> QubitId:
        if value not in (0, 1):
            raise ValueError(f"qubit value must be 0 or 1, got {value!r}")
        q = self._fresh_id()
        amps = np.zeros(2, dtype=complex)
        amps[value] = 1.0
        self._add([q], amps)
        return q

    def new_bell_pair(self, kind: BellKind) -> tuple[QubitId, QubitId]:
        a, b = self._fresh_id(), self._fresh_id()
        self._add([a, b], BellKind(kind).amplitudes())
        return a, b

    # -- measurement -------------------------------------------------------

    def measure_z(self, q: QubitId) -> int:
        g = self._group(q)
        k = len(g.members)
        m = g.members.index(q)
        p1 = kernels.z_probability_one(g.amps, k, m)
        outcome = sample_index((1.0 - p1, p1), self.rng.random())
        if k > 1:
            rest = kernels.z_collapse(g.amps, k, m, outcome)
            self._add([p for p in g.members if p != q], rest)
        single = np.zeros(2, dtype=complex)
        single[outcome] = 1.0
        self._add([q], single)
        return outcome

    def bell_probabilities(self, q1: QubitId, q2: QubitId) -> np.ndarray:
        """P(Phi+), P(Phi-), P(Psi+), P(Psi-) for the ordered pair (q1, q2)."""
        members, amps = self._joint(q1, q2)
        k = len(members)
        return kernels.bell_probabilities(amps, k, members.index(q1), members.index(q2))

    def measure_bell(self, q1: QubitId, q2: QubitId) -> BellKind:
        members, amps = self._joint(q1, q2)
        k = len(members)
        m1, m2 = members.index(q1), members.index(q2)
        probs = kernels.bell_probabilities(amps, k, m1, m2)
        outcome = sample_index(probs, self.rng.random())
        if k > 2:
            rest = kernels.bell_collapse(amps, k, m1, m2, outcome)
            self._add([p for p in members if p != q1 and p != q2], rest)
        self._add([q1, q2], _BELL_VECTORS[BellKind(outcome)].copy())
        return BellKind(outcome)

    def discard(self, q: QubitId) -> None:
        g = self._group(q)
        if len(g.members) > 1:
            raise EntangledDiscardError(f"qubit {q} is still entangled with {g.members}")
        del self._owner[q]


# Functional aliases mirroring the registry methods.


def new_qubit(registry: QuantumRegistry, value: int) -> QubitId:
    return registry.new_qubit(value)


def new_bell_pair(registry: QuantumRegistry, kind: BellKind) -> tuple[QubitId, QubitId]:
    return registry.new_bell_pair(kind)


def measure_z(registry: QuantumRegistry, q: QubitId) -> int:
    return registry.measure_z(q)


def measure_bell(registry: QuantumRegistry, q1: QubitId, q2: QubitId) -> BellKind:
    return registry.measure_bell(q1, q2)


def bell_probabilities(registry: QuantumRegistry, q1: QubitId, q2: QubitId) -> np.ndarray:
    return registry.bell_probabilities(q1, q2)


def discard(registry: QuantumRegistry, q: QubitId) -> None:
    registry.discard(q)
