"""Numpy implementation of the amplitude kernels.

Amplitude vectors index basis states with the first group member as the most
significant bit. All functions return new arrays and never mutate inputs.
"""

import numpy as np

_R = 1.0 / np.sqrt(2.0)

# BELL[kind, a, b]: coefficient of |a b> in Bell state `kind`, ordered
# PhiPlus, PhiMinus, PsiPlus, PsiMinus.
BELL = np.array(
    [
        [[_R, 0.0], [0.0, _R]],
        [[_R, 0.0], [0.0, -_R]],
        [[0.0, _R], [_R, 0.0]],
        [[0.0, _R], [-_R, 0.0]],
    ]
)


def _tensor(amps, k):
    return np.asarray(amps, dtype=complex).reshape((2,) * k)


def z_probability_one(amps, k, m):
    t = _tensor(amps, k)
    return float(np.sum(np.abs(np.take(t, 1, axis=m)) ** 2))


def z_collapse(amps, k, m, outcome):
    rest = np.take(_tensor(amps, k), outcome, axis=m).reshape(-1)
    norm = np.linalg.norm(rest)
    if norm == 0.0:
        raise ValueError("projection onto a zero-probability outcome")
    return rest / norm


def _bell_components(amps, k, m1, m2):
    # Move the measured pair to the front, then contract with each Bell vector.
    t = np.moveaxis(_tensor(amps, k), (m1, m2), (0, 1)).reshape(4, -1)
    return BELL.reshape(4, 4).conj() @ t


def bell_probabilities(amps, k, m1, m2):
    comp = _bell_components(amps, k, m1, m2)
    return np.sum(np.abs(comp) ** 2, axis=1)


def bell_collapse(amps, k, m1, m2, outcome):
    rest = _bell_components(amps, k, m1, m2)[outcome]
    norm = np.linalg.norm(rest)
    if norm == 0.0:
        raise ValueError("projection onto a zero-probability outcome")
    return rest / norm


def kron(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
