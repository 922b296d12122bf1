"""Bit-string helpers and the slot permutation type shared across modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


def parse_bits(text: str) -> tuple[int, ...]:
    """``"1010"`` -> ``(1, 0, 1, 0)``; rejects anything but 0/1 characters."""
    if not text or any(c not in "01" for c in text):
        raise ValueError(f"not a bit string: {text!r}")
    return tuple(int(c) for c in text)


def bits_str(bits: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def xor_bits(a: Iterable[int], b: Iterable[int]) -> tuple[int, ...]:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return tuple(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class Permutation:
    """Bijection on 1..size. ``forward[i - 1]`` is the image of ``i``."""

    forward: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.forward) != list(range(1, len(self.forward) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.forward)}: {self.forward}")

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(tuple(range(1, size + 1)))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Permutation":
        return cls(tuple(mapping[i] for i in range(1, len(mapping) + 1)))

    @classmethod
    def random(cls, size: int, rng) -> "Permutation":
        return cls(tuple(int(x) + 1 for x in rng.permutation(size)))

    @property
    def size(self) -> int:
        return len(self.forward)

    @property
    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.forward, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    def __call__(self, i: int) -> int:
        return self.forward[i - 1]

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        return Permutation(tuple(self(other(i)) for i in range(1, self.size + 1)))

    def restrict(self, positions: Iterable[int]) -> dict[int, int]:
        return {i: self(i) for i in sorted(positions)}

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.forward, start=1))


class Case:
    A = "a"
    B = "b"


@dataclass(frozen=True)
class CaseChoice:
    """Bob's per-position choice; ``key_bit`` is set iff the case is B."""

    case: str
    key_bit: int | None = None

    def __post_init__(self) -> None:
        if self.case == Case.A and self.key_bit is not None:
            raise ValueError("case (a) carries no key bit")
        if self.case == Case.B and self.key_bit not in (0, 1):
            raise ValueError("case (b) needs a key bit")
        if self.case not in (Case.A, Case.B):
            raise ValueError(f"unknown case {self.case!r}")


def assign_cases(case_b_positions: Iterable[int], key: Iterable[int], size: int) -> tuple[CaseChoice, ...]:
    """Case list for 1..size; key bits go to the case-(b) positions in ascending order."""
    b_positions = sorted(case_b_positions)
    key = tuple(key)
    if len(key) != len(b_positions):
        raise ValueError(f"{len(key)} key bits for {len(b_positions)} case-(b) positions")
    bits = dict(zip(b_positions, key))
    return tuple(
        CaseChoice(Case.B, bits[i]) if i in bits else CaseChoice(Case.A) for i in range(1, size + 1)
    )
