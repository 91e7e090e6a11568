"""Deterministic test-instance generation.

All randomness comes from an in-repo SplitMix64 stream, so identical seeds
produce identical bytes on every platform; nothing here touches the
process-global random state.
"""

import numpy as np

from .transform import TcsProblem

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Counter-based 64-bit SplitMix generator.

    The state advances by a fixed odd increment and each output is a mixed
    copy of it, which lets whole blocks be produced vectorized.
    """

    def __init__(self, seed):
        self._state = int(seed) & _MASK

    def next_u64(self):
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def u64_block(self, count):
        """The next ``count`` outputs as a uint64 array."""
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(_GAMMA)
        self._state = (self._state + count * _GAMMA) & _MASK
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    def uniform(self):
        """One double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniforms(self, count):
        """``count`` doubles in [0, 1)."""
        return (self.u64_block(count) >> np.uint64(11)) * 2.0 ** -53

    def matrix(self, rows, cols, low=-1.0, high=1.0):
        """A rows-by-cols matrix with entries uniform in [low, high)."""
        u = self.uniforms(rows * cols)
        return np.asfortranarray((low + (high - low) * u).reshape((rows, cols)))


def householder_orthogonal(n, rng):
    """Product of two random Householder reflectors (an orthogonal matrix)."""
    q = np.eye(n)
    for _ in range(2):
        v = rng.uniforms(n) * 2.0 - 1.0
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        v /= norm
        q -= 2.0 * np.outer(q @ v, v)
    return q


def well_conditioned_matrix(n, rng, spread=4.0):
    """Orthogonal-like matrix times a diagonal; condition number <= spread**2."""
    d = spread ** (rng.uniforms(n) * 2.0 - 1.0)
    return householder_orthogonal(n, rng) * d


def random_problem(n, seed, rho):
    """Deterministic well-conditioned instance with a prescribed radius.

    A has condition number at most 16; B is scaled so the eigenvalue radius
    of B^T A^{-1} equals ``rho``; C = A X_true + X_true^T B for a random
    X_true.  Returns ``(problem, x_true)``.
    """
    if n < 1:
        raise ValueError("instance size must be at least 1, got %d" % n)
    if rho < 0.0:
        raise ValueError("target radius must be nonnegative, got %g" % rho)
    rng = SplitMix64(seed)
    a = well_conditioned_matrix(n, rng)
    b0 = rng.matrix(n, n)
    m0 = np.linalg.solve(a.T, b0).T
    radius = float(np.abs(np.linalg.eigvals(m0)).max())
    if radius < 1e-12:
        # freak nilpotent-ish draw; nudge it to make scaling well defined
        b0 = b0 + np.eye(n)
        m0 = np.linalg.solve(a.T, b0).T
        radius = float(np.abs(np.linalg.eigvals(m0)).max())
    b = b0 * (rho / radius) if rho > 0.0 else np.zeros((n, n))
    x_true = rng.matrix(n, n)
    c = a @ x_true + x_true.T @ b
    return TcsProblem(a, b, c), x_true
