"""Solvers for the reduced equations and the end-to-end pipeline.

Two Stein solvers are provided: a direct one that factors the explicit
I - M (x) M operator (reference path, O(n^6) work) and a squared Smith
iteration (production path, O(n^3 log(1/tol)), valid for spectral radius
below one).  ``solve_tcs`` ties reduction, reduced solve, back-substitution
and a residual check against the original equation into one report.
"""

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import matcore, oracle, transform
from .exceptions import (
    DimensionError,
    NoUniqueSolution,
    NotConvergent,
    SingularOperator,
    SpuriousSolution,
)
from .generate import SplitMix64
from .matcore import LuFactorization, unvec, vec
from .transform import (
    DEFAULT_OPERATOR_CAP,
    Side,
    SteinForm,
    SylvesterForm,
    TcsProblem,
    to_stein_via_a,
    to_stein_via_b,
    to_sylvester,
)

# Auto mode picks the Smith iteration only below this radius estimate; the
# margin to 1.0 absorbs power-iteration error.
SMITH_RHO_GATE = 0.95
# Hard divergence guard for an explicitly requested Smith solve.
SMITH_RHO_LIMIT = 1.0 - 1e-6


class Method(enum.Enum):
    LYAPUNOV_A = "lyapunov-a"
    LYAPUNOV_B = "lyapunov-b"
    SYLVESTER = "sylvester"
    ORACLE = "oracle"
    AUTO = "auto"


class SteinSolver(enum.Enum):
    DIRECT = "direct"
    SMITH = "smith"
    AUTO = "auto"


@dataclass
class SolveOptions:
    """Knobs for :func:`solve_tcs`; strings are accepted for the enums."""

    tol: float = 1e-8
    max_iter: int = 64
    stein_solver: SteinSolver = SteinSolver.AUTO
    method: Method = Method.AUTO

    def __post_init__(self):
        self.stein_solver = SteinSolver(self.stein_solver)
        self.method = Method(self.method)
        if not self.tol > 0.0:
            raise ValueError("tol must be positive, got %g" % self.tol)
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1, got %d" % self.max_iter)


@dataclass
class SolveReport:
    """Solution plus diagnostics for one pipeline run.

    ``residual_original`` is always computed against the untouched input
    problem; ``spectral_radius_estimate`` and ``stein_solver_used`` are None
    on routes where they play no role (e.g. the dense oracle).
    """

    x: np.ndarray
    residual_original: float
    residual_reduced: float
    method_used: Method
    stein_solver_used: SteinSolver | None
    spectral_radius_estimate: float | None
    iterations: int
    wall_time: float
    warnings: list = field(default_factory=list)


def _rel(misfit, reference):
    num = float(np.linalg.norm(misfit))
    den = float(np.linalg.norm(reference))
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def _stein_residual(m, x, q):
    return _rel(x - m @ x @ m.T - q, q)


def _sylvester_residual(f, x):
    return _rel(f.neg_m @ x + x @ f.m_inv_t - f.q_prime, f.q_prime)


def residual(p, x):
    """Scaled Frobenius residual of AX + X^T B = C at the candidate X.

    The misfit norm is divided by |A||X| + |X||B| + |C| (Frobenius norms),
    which keeps tolerances meaningful across magnitudes.
    """
    x = matcore.as_matrix(x, "X")
    if x.shape != p.a.shape:
        raise DimensionError(
            "X has shape %s, expected %s" % (x.shape, p.a.shape))
    misfit = p.a @ x + x.T @ p.b - p.c
    na, nb, nc = (np.linalg.norm(m) for m in (p.a, p.b, p.c))
    nx = np.linalg.norm(x)
    scale = na * nx + nx * nb + nc
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(misfit)) / scale


def spectral_radius_estimate(m, iterations=100, tol=1e-6):
    """Power-iteration estimate of the eigenvalue radius of ``m``.

    Runs at most ``iterations`` steps from a fixed pseudorandom start and
    stops early once the growth factor settles to relative ``tol``.  This is
    an estimate, not a bound; complex dominant pairs make it oscillate.
    """
    m = matcore.as_matrix(m, "M")
    if m.shape[0] != m.shape[1]:
        raise DimensionError("spectral radius needs a square matrix, got %s" % (m.shape,))
    n = m.shape[0]
    if n == 0 or not m.any():
        return 0.0
    rng = SplitMix64(0x7C5EED)
    x = rng.uniforms(n) * 2.0 - 1.0
    norm = np.linalg.norm(x)
    if norm == 0.0:
        x = np.zeros(n)
        x[0] = 1.0
    else:
        x = x / norm
    est = 0.0
    for _ in range(iterations):
        y = m @ x
        growth = float(np.linalg.norm(y))
        if growth == 0.0:
            # landed in the kernel; restart from a fresh direction
            x = rng.uniforms(n) * 2.0 - 1.0
            norm = np.linalg.norm(x)
            if norm == 0.0:
                return 0.0
            x = x / norm
            continue
        previous, est = est, growth
        x = y / growth
        if abs(est - previous) <= tol * est:
            break
    return float(est)


def solve_stein_direct(m_coef, q, max_dim=DEFAULT_OPERATOR_CAP):
    """Solve Xt - M Xt M^T = Q through the explicit I - M (x) M operator."""
    m = matcore.as_matrix(m_coef, "M")
    q = matcore.as_matrix(q, "Q")
    if m.shape != q.shape or m.shape[0] != m.shape[1]:
        raise DimensionError(
            "M and Q must be square of equal size, got %s and %s" % (m.shape, q.shape))
    op = transform.assemble_stein_operator(m, max_dim=max_dim)
    lu = LuFactorization(op, "I - M(x)M")
    if lu.singular:
        raise SingularOperator(
            "the Stein operator I - M(x)M is singular to tolerance; "
            "some product of two eigenvalues of M equals 1")
    n = m.shape[0]
    return unvec(lu.solve(vec(q)), n, n)


def _smith_iterate(m, q, tol, max_iter):
    """Squared Smith iteration; returns (solution, updates, final residual).

    X <- X + S X S^T with S <- S^2 starting from X = Q, S = M.  After the
    residual first clears ``tol`` one more update is applied, which roughly
    squares it again at O(n^3) cost.
    """
    x = q.copy()
    s = m.copy()
    res = np.inf
    for k in range(max_iter):
        res = _stein_residual(m, x, q)
        if res <= tol:
            x = x + s @ (x @ s.T)
            return x, k + 1, _stein_residual(m, x, q)
        if not np.isfinite(res):
            raise NotConvergent(
                "Smith iteration diverged after %d doublings" % k)
        x = x + s @ (x @ s.T)
        s = s @ s
    raise NotConvergent(
        "Smith iteration did not reach tol=%g within %d doublings "
        "(residual %.3g)" % (tol, max_iter, res))


def solve_stein_smith(m_coef, q, opts=None):
    """Solve Xt - M Xt M^T = Q by squared Smith iteration.

    Requires the spectral radius of M to be below one; the power-iteration
    estimate gates the attempt.
    """
    m = matcore.as_matrix(m_coef, "M")
    q = matcore.as_matrix(q, "Q")
    if m.shape != q.shape or m.shape[0] != m.shape[1]:
        raise DimensionError(
            "M and Q must be square of equal size, got %s and %s" % (m.shape, q.shape))
    opts = SolveOptions() if opts is None else opts
    rho = spectral_radius_estimate(m)
    if rho >= SMITH_RHO_LIMIT:
        raise NotConvergent(
            "spectral radius estimate %.6g is not below 1; "
            "the Smith iteration diverges" % rho)
    x, _, _ = _smith_iterate(m, q, opts.tol, opts.max_iter)
    return x


def solve_sylvester_direct(f, max_dim=DEFAULT_OPERATOR_CAP):
    """Solve (-M) Xt + Xt (M^{-1})^T = Q' through its Kronecker operator."""
    n = f.neg_m.shape[0]
    if n > max_dim:
        raise matcore.CapacityError(
            "n=%d exceeds the dense-operator cap %d" % (n, max_dim))
    eye = np.eye(n)
    op = matcore.kron(f.m_inv_t.T, eye) + matcore.kron(eye, f.neg_m)
    lu = LuFactorization(op, "Sylvester operator")
    if lu.singular:
        raise SingularOperator(
            "the Sylvester operator is singular to tolerance; the spectra "
            "of -M and -(M^{-1})^T overlap")
    return unvec(lu.solve(vec(f.q_prime)), n, n)


def back_substitute(s, reduced_solution):
    """Recover X from a reduced solution: A X = Xt or B^T X = Xh^T."""
    reduced = matcore.as_matrix(reduced_solution, "reduced solution")
    if s.side is Side.VIA_A:
        return LuFactorization(s.back_ref, "A").solve(reduced)
    return LuFactorization(s.back_ref, "B").solve(reduced.T, trans=True)


def _solve_stein_route(p, side, opts, lu_a, lu_b, notes):
    if side is Side.VIA_A:
        form = to_stein_via_a(p, lu_a)
    else:
        form = to_stein_via_b(p, lu_b)
    rho = spectral_radius_estimate(form.m_coef)
    choice = opts.stein_solver
    if choice is SteinSolver.AUTO:
        choice = SteinSolver.SMITH if rho < SMITH_RHO_GATE else SteinSolver.DIRECT
    x_red = None
    iters = 0
    res_red = np.inf
    if choice is SteinSolver.SMITH:
        if rho >= SMITH_RHO_LIMIT:
            raise NotConvergent(
                "spectral radius estimate %.6g is not below 1; "
                "the Smith iteration diverges" % rho)
        try:
            x_red, iters, res_red = _smith_iterate(
                form.m_coef, form.q, opts.tol, opts.max_iter)
        except NotConvergent:
            if opts.stein_solver is SteinSolver.SMITH:
                raise
            notes.append("Smith iteration stalled; retrying with the direct Stein solver")
            choice = SteinSolver.DIRECT
    if choice is SteinSolver.DIRECT:
        x_red = solve_stein_direct(form.m_coef, form.q)
        res_red = _stein_residual(form.m_coef, x_red, form.q)
        iters = 0
    if side is Side.VIA_A:
        x = lu_a.solve(x_red)                 # A X = Xt
    else:
        x = lu_b.solve(x_red.T, trans=True)   # B^T X = Xh^T
    return x, res_red, rho, iters, choice


def _run_method(method, p, opts, lu_a, lu_b, notes):
    if method is Method.LYAPUNOV_A:
        return _solve_stein_route(p, Side.VIA_A, opts, lu_a, lu_b, notes)
    if method is Method.LYAPUNOV_B:
        return _solve_stein_route(p, Side.VIA_B, opts, lu_a, lu_b, notes)
    if method is Method.SYLVESTER:
        f = to_sylvester(p, lu_a, lu_b)
        x_red = solve_sylvester_direct(f)
        res_red = _sylvester_residual(f, x_red)
        rho = spectral_radius_estimate(-f.neg_m)
        x = lu_a.solve(x_red)                 # A X = Xt
        return x, res_red, rho, 0, None
    if method is Method.ORACLE:
        x, res_red = oracle.solve_with_system_residual(p)
        return x, res_red, None, 0, None
    raise ValueError("unexpected method %r" % (method,))


def solve_tcs(p, opts=None):
    """Solve AX + X^T B = C end to end and return a :class:`SolveReport`.

    Auto method selection prefers the Stein route through A, then through B,
    then the dense oracle.  Auto routes additionally fall back to the oracle
    when a reduction turns out singular or its candidate fails the original
    equation; explicitly requested routes raise instead.  Every successful
    report satisfies ``residual_original <= opts.tol``.
    """
    opts = SolveOptions() if opts is None else opts
    start = time.perf_counter()
    notes = []
    lu_a = LuFactorization(p.a, "A")
    lu_b = LuFactorization(p.b, "B")
    requested = opts.method
    if requested is Method.AUTO:
        if not lu_a.singular:
            chosen = Method.LYAPUNOV_A
        elif not lu_b.singular:
            chosen = Method.LYAPUNOV_B
        else:
            chosen = Method.ORACLE
            notes.append("A and B are both singular; using the dense oracle")
    else:
        chosen = requested
    auto = requested is Method.AUTO

    try:
        out = _run_method(chosen, p, opts, lu_a, lu_b, notes)
    except SingularOperator as exc:
        if not (auto and chosen is not Method.ORACLE):
            raise
        notes.append(
            "%s reduction hit a singular operator; retrying with the dense oracle"
            % chosen.value)
        chosen = Method.ORACLE
        try:
            out = _run_method(chosen, p, opts, lu_a, lu_b, notes)
        except SingularOperator as exc2:
            raise NoUniqueSolution(str(exc2), kind=exc2.kind) from exc
    x, res_red, rho, iters, stein_used = out
    res_orig = residual(p, x)

    if res_orig > opts.tol and auto and chosen is not Method.ORACLE:
        notes.append(
            "%s candidate fails the original equation (residual %.3g); "
            "retrying with the dense oracle" % (chosen.value, res_orig))
        chosen = Method.ORACLE
        try:
            out = _run_method(chosen, p, opts, lu_a, lu_b, notes)
        except SingularOperator as exc:
            raise NoUniqueSolution(str(exc), kind=exc.kind) from exc
        x, res_red, rho, iters, stein_used = out
        res_orig = residual(p, x)

    report = SolveReport(
        x=x,
        residual_original=res_orig,
        residual_reduced=res_red,
        method_used=chosen,
        stein_solver_used=stein_used,
        spectral_radius_estimate=rho,
        iterations=iters,
        wall_time=time.perf_counter() - start,
        warnings=notes,
    )
    if res_orig > opts.tol:
        raise SpuriousSolution(
            "candidate solution fails the original equation: residual %.3g > tol %.3g"
            % (res_orig, opts.tol), report=report)
    return report
