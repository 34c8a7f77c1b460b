"""Dense numeric kernels shared by all models.

Everything runs in float64; the gradient-check tests in the model layer
rely on that precision. The RNG is a hand-rolled xorshift64* generator so
that seeded runs reproduce bit-for-bit across platforms, independent of
numpy's generator versioning.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


class ShapeError(ValueError):
    """Raised when operand dimensions do not line up."""


def matvec(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product M @ x with an explicit shape check."""
    m = np.asarray(m, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or x.ndim != 1 or m.shape[1] != x.shape[0]:
        raise ShapeError(f"matvec shape mismatch: {m.shape} @ {x.shape}")
    return m @ x


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, stable for large |x|.

    Uses the two-branch form so exp() is only ever called on non-positive
    arguments; saturates to 0/1 without overflow warnings.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    """Probability vector exp(x_i) / sum_j exp(x_j), max-subtracted for stability."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / e.sum()


def clip_elementwise(g: np.ndarray, tau: float) -> np.ndarray:
    """Clamp every entry of g into [-tau, tau]. Idempotent; tau must be > 0."""
    if tau <= 0:
        raise ValueError(f"clip bound must be positive, got {tau}")
    return np.clip(g, -tau, tau)


GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    # numpy uint64 arithmetic wraps, matching the scalar masked version
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class Rng:
    """Seedable splitmix64 generator.

    State update and output (all arithmetic mod 2^64):

        state += 0x9E3779B97F4A7C15
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        output = z ^ (z >> 31)

    Counter-based, so bulk draws vectorize while remaining identical to
    repeated scalar calls. Same seed gives the same stream on any platform.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & MASK64
        self.counter = counter

    def next_u64(self) -> int:
        self.counter += 1
        return _mix64((self.seed + self.counter * GOLDEN) & MASK64)

    def next_u64_block(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            states = np.uint64(self.seed) + idx * np.uint64(GOLDEN)
        return _mix64_vec(states)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 bits of randomness."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform_matrix(self, rows: int, cols: int, low: float, high: float) -> np.ndarray:
        raw = self.next_u64_block(rows * cols)
        u = (raw >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return (low + (high - low) * u).reshape(rows, cols)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]

    def derive(self, stream_id: int) -> "Rng":
        """Independent sub-generator: one master seed drives a whole run."""
        return Rng(_mix64(self.seed ^ _mix64(stream_id & MASK64)))


def sample_categorical(p: np.ndarray, rng: Rng) -> int:
    """Draw an index from a probability vector by inverse-CDF walk."""
    p = np.asarray(p, dtype=np.float64)
    if abs(p.sum() - 1.0) > 1e-6 or np.any(p < 0):
        raise ValueError("sample_categorical needs a normalized probability vector")
    u = rng.uniform()
    acc = 0.0
    for i in range(p.shape[0] - 1):
        acc += p[i]
        if u < acc:
            return i
    return p.shape[0] - 1
