"""Brute-force dense-state oracle, independent of sqka's kernels.

Holds one global state vector over every qubit ever created (creation order,
first = most significant) and applies measurements as explicit projector
matrices over the full space.
"""

import numpy as np

R = 1 / np.sqrt(2)

# Bell vectors over |00>, |01>, |10>, |11>, written out by hand.
BELL_VECTORS = [
    np.array([R, 0, 0, R]),
    np.array([R, 0, 0, -R]),
    np.array([0, R, R, 0]),
    np.array([0, R, -R, 0]),
]


def bits_of(index, n):
    return [(index >> (n - 1 - k)) & 1 for k in range(n)]


class DenseOracle:
    def __init__(self):
        self.labels = []
        self.psi = np.array([1.0 + 0j])

    @property
    def n(self):
        return len(self.labels)

    def add(self, labels, vec):
        self.labels.extend(labels)
        self.psi = np.kron(self.psi, np.asarray(vec, dtype=complex))

    def _bits(self):
        return np.array([bits_of(x, self.n) for x in range(2**self.n)], dtype=int)

    def _pair_projector(self, i, j, vec):
        # P[x, y] = vec(x_i x_j) conj(vec(y_i y_j)) when x and y agree off (i, j).
        B = self._bits()
        others = [k for k in range(self.n) if k not in (i, j)]
        same_rest = np.all(B[:, None, others] == B[None, :, others], axis=2)
        coeff = np.asarray(vec, dtype=complex)[2 * B[:, i] + B[:, j]]
        return np.outer(coeff, coeff.conj()) * same_rest

    def _z_projector(self, i, value):
        dim = 2**self.n
        return np.diag([1.0 if bits_of(x, self.n)[i] == value else 0.0 for x in range(dim)]).astype(complex)

    def bell_probabilities(self, a, b):
        i, j = self.labels.index(a), self.labels.index(b)
        return np.array(
            [np.real(np.vdot(self.psi, self._pair_projector(i, j, v) @ self.psi)) for v in BELL_VECTORS]
        )

    def z_probability_one(self, a):
        P = self._z_projector(self.labels.index(a), 1)
        return float(np.real(np.vdot(self.psi, P @ self.psi)))

    def _apply(self, P):
        out = P @ self.psi
        norm = np.linalg.norm(out)
        assert norm > 1e-12, "oracle asked to project onto an impossible outcome"
        self.psi = out / norm

    def project_bell(self, a, b, outcome):
        i, j = self.labels.index(a), self.labels.index(b)
        self._apply(self._pair_projector(i, j, BELL_VECTORS[outcome]))

    def project_z(self, a, value):
        self._apply(self._z_projector(self.labels.index(a), value))

    def remove(self, a):
        """Drop a qubit known to be in a Z eigenstate."""
        i = self.labels.index(a)
        t = self.psi.reshape((2,) * self.n)
        halves = [np.take(t, v, axis=i) for v in (0, 1)]
        weights = [np.linalg.norm(h) for h in halves]
        assert min(weights) < 1e-9, "qubit is not in a Z eigenstate"
        keep = halves[int(np.argmax(weights))]
        self.labels.pop(i)
        self.psi = keep.reshape(-1) / np.linalg.norm(keep)


def bell_expansion(a, b):
    """Probabilities of |a b> in the Bell basis by direct inner products."""
    vec = np.zeros(4)
    vec[2 * a + b] = 1.0
    return np.array([abs(np.dot(v, vec)) ** 2 for v in BELL_VECTORS])
