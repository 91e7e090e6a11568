"""Reductions of the T-congruence Sylvester equation AX + X^T B = C.

With A nonsingular the equation maps onto a Stein (discrete Lyapunov)
equation Xt - M Xt M^T = Q in Xt = AX with M = B^T A^{-1}; the mirrored
route through nonsingular B targets Xh = X^T B instead.  With both A and B
nonsingular a standard Sylvester form -M Xt + Xt M^{-T} = Q' is available.
This module builds those reduced forms and the explicit vectorized
operators used by the dense oracle.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import matcore
from .exceptions import CapacityError, DimensionError, SingularMatrix, UnsupportedShape
from .matcore import LuFactorization, apply_commutation, unvec, vec

# Largest n for which an n^2 x n^2 operator is formed explicitly.
DEFAULT_OPERATOR_CAP = 128


class Side(enum.Enum):
    """Which factor a Stein reduction went through."""
    VIA_A = "via-a"
    VIA_B = "via-b"


@dataclass
class TcsProblem:
    """The data (A, B, C) of AX + X^T B = C, all square of equal size."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.a = matcore.as_matrix(self.a, "A")
        self.b = matcore.as_matrix(self.b, "B")
        self.c = matcore.as_matrix(self.c, "C")
        for name, m in (("A", self.a), ("B", self.b), ("C", self.c)):
            if m.shape[0] != m.shape[1]:
                raise UnsupportedShape(
                    "%s is %dx%d; only square problems are supported"
                    % (name, m.shape[0], m.shape[1]))
        if not (self.a.shape == self.b.shape == self.c.shape):
            raise DimensionError(
                "A, B, C must share one size, got %s, %s, %s"
                % (self.a.shape, self.b.shape, self.c.shape))

    @property
    def n(self):
        return self.a.shape[0]


@dataclass
class SteinForm:
    """Reduced equation Xt - M Xt M^T = Q plus its back-substitution handle.

    ``back_ref`` is the original nonsingular factor: A for the VIA_A route
    (recover X from A X = Xt) and B for VIA_B (recover from B^T X = Xh^T).
    """

    m_coef: np.ndarray
    q: np.ndarray
    side: Side
    back_ref: np.ndarray


@dataclass
class SylvesterForm:
    """Reduced Sylvester equation (-M) Xt + Xt (M^{-1})^T = Q'."""

    neg_m: np.ndarray
    m_inv_t: np.ndarray
    q_prime: np.ndarray


def _twisted_transpose(y):
    # unvec(P_nn vec(Y)) for square Y; the commutation path is normative,
    # even though the result coincides with Y^T entry for entry.
    n = y.shape[0]
    return unvec(apply_commutation(n, n, vec(y)), n, n)


def to_stein_via_a(p, lu_a=None):
    """Stein reduction through nonsingular A.

    Returns M = B^T A^{-1} (computed from LU solves of A^T Z = B, never from
    an explicit inverse) and Q = C - unvec(P vec(M C)).  The solution of the
    original equation is recovered later from A X = Xt.
    """
    lu_a = LuFactorization(p.a, "A") if lu_a is None else lu_a
    if lu_a.singular:
        raise SingularMatrix("A is singular; the Stein reduction via A needs A nonsingular")
    m = lu_a.solve(p.b, trans=True).T
    q = p.c - _twisted_transpose(m @ p.c)
    return SteinForm(m, q, Side.VIA_A, p.a)


def to_stein_via_b(p, lu_b=None):
    """Mirrored Stein reduction through nonsingular B.

    Returns M = A (B^T)^{-1} and Q = C - unvec(P vec(C M^T)); the reduced
    unknown is Xh = X^T B, recovered from B^T X = Xh^T.
    """
    lu_b = LuFactorization(p.b, "B") if lu_b is None else lu_b
    if lu_b.singular:
        raise SingularMatrix("B is singular; the Stein reduction via B needs B nonsingular")
    m_hat = lu_b.solve(p.a.T).T
    q_hat = p.c - _twisted_transpose(p.c @ m_hat.T)
    return SteinForm(m_hat, q_hat, Side.VIA_B, p.b)


def to_sylvester(p, lu_a=None, lu_b=None):
    """Sylvester reduction; needs both A and B nonsingular.

    The right-hand side Q' = unvec((M^{-1} (x) I) c') is evaluated in matrix
    form as unvec(c') @ M^{-T}, avoiding any n^2 x n^2 product; c' is the
    commutation-corrected vec of C.
    """
    lu_a = LuFactorization(p.a, "A") if lu_a is None else lu_a
    lu_b = LuFactorization(p.b, "B") if lu_b is None else lu_b
    if lu_a.singular:
        raise SingularMatrix("A is singular; the Sylvester reduction needs both A and B nonsingular")
    if lu_b.singular:
        raise SingularMatrix("B is singular; the Sylvester reduction needs both A and B nonsingular")
    n = p.n
    m = lu_a.solve(p.b, trans=True).T          # M = B^T A^{-1}
    m_inv_t = lu_b.solve(p.a.T)                # (M^{-1})^T = B^{-1} A^T
    c_prime = vec(p.c) - apply_commutation(n, n, vec(m @ p.c))
    q_prime = unvec(c_prime, n, n) @ m_inv_t
    return SylvesterForm(-m, m_inv_t, q_prime)


def assemble_operator(p, max_dim=DEFAULT_OPERATOR_CAP):
    """Explicit n^2 x n^2 operator L with L vec(X) = vec(AX + X^T B).

    L = (I (x) A) + P (I (x) B^T), where P is the commutation permutation;
    the permutation is applied as a row reindexing rather than a product.
    """
    n = p.n
    if n > max_dim:
        raise CapacityError(
            "n=%d exceeds the dense-operator cap %d (operator would be %dx%d)"
            % (n, max_dim, n * n, n * n))
    eye = np.eye(n)
    ell = matcore.kron(eye, p.a)
    kb = matcore.kron(eye, p.b.T)
    ell += kb[matcore.commutation_indices(n, n), :]
    return ell


def assemble_stein_operator(form, max_dim=DEFAULT_OPERATOR_CAP):
    """Explicit I - M (x) M for a SteinForm or a bare coefficient matrix."""
    m = form.m_coef if isinstance(form, SteinForm) else matcore.as_matrix(form, "M")
    if m.shape[0] != m.shape[1]:
        raise DimensionError("Stein coefficient must be square, got %s" % (m.shape,))
    n = m.shape[0]
    if n > max_dim:
        raise CapacityError(
            "n=%d exceeds the dense-operator cap %d (operator would be %dx%d)"
            % (n, max_dim, n * n, n * n))
    return np.eye(n * n) - matcore.kron(m, m)
