"""Dense matrix kernels: vec/unvec, Kronecker products, the commutation
permutation and LU-backed linear solves.

Matrices are plain 2-D float64 numpy arrays.  Arrays produced here are
Fortran-ordered so that ``vec`` (column stacking) is a zero-copy reshape.
Everything is a pure function of its inputs; nothing mutates its arguments.
"""

import warnings

import numpy as np
import scipy.linalg as sla
from scipy.linalg import get_lapack_funcs

from .exceptions import CapacityError, DimensionError, SingularMatrix

# Largest element count for any explicitly formed dense operator.  This is
# (128^2)^2, matching the default n <= 128 cap on n^2 x n^2 operators.
MAX_DENSE_ELEMENTS = 1 << 28

_EPS = np.finfo(np.float64).eps


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float64 Fortran-ordered array, rejecting NaN/Inf."""
    m = np.asfortranarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError("%s must be 2-D, got ndim=%d" % (name, m.ndim))
    if m.size and not np.isfinite(m).all():
        raise ValueError("%s contains non-finite entries" % name)
    return m


def as_vector(v, name="vector"):
    """Coerce to a 1-D float64 array, rejecting NaN/Inf."""
    w = np.ascontiguousarray(v, dtype=np.float64)
    if w.ndim != 1:
        raise DimensionError("%s must be 1-D, got ndim=%d" % (name, w.ndim))
    if w.size and not np.isfinite(w).all():
        raise ValueError("%s contains non-finite entries" % name)
    return w


def vec(a):
    """Stack the columns of ``a`` into a single vector.

    Column-major storage makes this a relabeling, not a data movement.
    """
    return as_matrix(a).reshape(-1, order="F")


def unvec(v, m, n):
    """Inverse of :func:`vec` for an m-by-n target; exact round trip."""
    w = as_vector(v)
    if w.size != m * n:
        raise DimensionError(
            "cannot reshape length-%d vector into %dx%d" % (w.size, m, n))
    return w.reshape((m, n), order="F")


def kron(a, b, max_elements=MAX_DENSE_ELEMENTS):
    """Kronecker product with a guard on the size of the result."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > max_elements:
        raise CapacityError(
            "Kronecker product would be %dx%d (%d entries > cap %d)"
            % (rows, cols, rows * cols, max_elements))
    return np.kron(a, b)


def commutation_indices(m, n):
    """Row-to-source index map sigma of the commutation permutation P_mn.

    P_mn is the mn-by-mn permutation with (P_mn x)[k] = x[sigma[k]]; it sends
    vec of an n-by-m matrix to vec of its m-by-n transpose, i.e.
    vec(A) = P_mn vec(A^T) for A m-by-n.
    """
    r = np.arange(m * n)
    i, j = r % m, r // m
    return i * n + j


def commutation_matrix(m, n):
    """Explicit commutation permutation P_mn as a dense 0/1 matrix."""
    mn = m * n
    p = np.zeros((mn, mn), order="F")
    p[np.arange(mn), commutation_indices(m, n)] = 1.0
    return p


def apply_commutation(m, n, v):
    """Apply P_mn to a vector of length m*n without forming the matrix."""
    w = as_vector(v)
    if w.size != m * n:
        raise DimensionError(
            "vector length %d does not match m*n = %d" % (w.size, m * n))
    return w[commutation_indices(m, n)]


class LuFactorization:
    """Partial-pivoted LU of a square matrix, with singularity diagnostics.

    A pivot counts as zero when |pivot| <= eps * n * max|entry of the input|,
    which keeps the singularity test invariant under scaling.  ``singular``
    and ``rcond`` (an estimated reciprocal 1-norm condition number) are
    available whether or not the factorization is usable for solving.
    """

    def __init__(self, a, name="matrix"):
        a = as_matrix(a, name)
        if a.shape[0] != a.shape[1]:
            raise DimensionError(
                "%s must be square to factorize, got %dx%d"
                % (name, a.shape[0], a.shape[1]))
        self.a = a
        self.name = name
        n = a.shape[0]
        scale = float(np.abs(a).max()) if a.size else 0.0
        self.pivot_tol = _EPS * n * scale
        if n == 0:
            self._lu = a
            self._piv = np.empty(0, dtype=np.int32)
            self.singular = False
            self.rcond = np.inf
            return
        with warnings.catch_warnings():
            # LAPACK getrf completes on singular input; scipy only warns.
            warnings.simplefilter("ignore")
            self._lu, self._piv = sla.lu_factor(a, check_finite=False)
        pivots = np.abs(np.diag(self._lu))
        self.singular = bool((pivots <= self.pivot_tol).any())
        if scale == 0.0:
            self.rcond = 0.0
        else:
            gecon = get_lapack_funcs(("gecon",), (self._lu,))[0]
            self.rcond = float(gecon(self._lu, np.linalg.norm(a, 1), norm="1")[0])

    @property
    def n(self):
        return self.a.shape[0]

    def solve(self, rhs, trans=False):
        """Solve a @ z = rhs (or a.T @ z = rhs with ``trans``) for z.

        ``rhs`` may be a matrix or a vector; the result matches its shape.
        """
        if self.singular:
            raise SingularMatrix(
                "%s is singular to pivot tolerance %.3g"
                % (self.name, self.pivot_tol))
        r = np.asarray(rhs, dtype=np.float64)
        vector = r.ndim == 1
        b = r.reshape(-1, 1) if vector else r
        if b.ndim != 2 or b.shape[0] != self.n:
            raise DimensionError(
                "right-hand side has %d rows, expected %d"
                % (b.shape[0] if b.ndim else 0, self.n))
        if self.n == 0:
            out = np.zeros_like(b)
        else:
            out = sla.lu_solve((self._lu, self._piv), b,
                               trans=1 if trans else 0, check_finite=False)
        return out[:, 0] if vector else out


def lu_solve(a, rhs):
    """Solve a @ z = rhs by partial-pivoted LU; raises SingularMatrix."""
    return LuFactorization(a).solve(rhs)
