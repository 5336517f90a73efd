"""
Smallest generalized eigenpairs A u = lambda M u by shifted inverse iteration.
"""

import logging
import typing as t

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from robin_insulation.models.results import EigenPair
from robin_insulation.utils.error_handling import ConvergenceError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
MAX_CG_ITERATIONS = 10_000
MAX_INVERSE_ITERATIONS = 2_000
# Relative spectral gap under which the first eigenvalue is reported as near-degenerate
GAP_WARNING = 1e-6
# Regularization shift for singular A, relative to max diag(A) / max diag(M)
REGULARIZATION = 1e-6


def solve_spd(A: sp.spmatrix, b: np.ndarray, tol: float = 1e-12,
              maxiter: int = MAX_CG_ITERATIONS, x0: t.Optional[np.ndarray] = None) -> np.ndarray:
    """
    Solve A x = b for symmetric positive definite A by Jacobi-preconditioned
    conjugate gradients.

    Args:
        A: SPD matrix
        b: Right-hand side
        tol: Target relative residual ||A x - b|| / ||b||
        maxiter: Iteration cap handed to each CG run
        x0: Optional initial guess

    Returns:
        Solution vector

    Raises:
        ValueError: A has a nonpositive diagonal entry
        ConvergenceError: tolerance not reached (carries the achieved residual)
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b)
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("Matrix is not positive definite (nonpositive diagonal)")
    jacobi = spla.LinearOperator(A.shape, matvec=lambda v: v / diag, dtype=float)

    history = []
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float).copy()
    # CG tracks a recursive residual; correct from the true one until it is met
    for _ in range(4):
        r = b - A @ x
        r_norm = float(np.linalg.norm(r))
        history.append(r_norm / b_norm)
        if r_norm <= tol * b_norm:
            return x
        dx, info = spla.cg(A, r, rtol=min(0.5, 0.5 * tol * b_norm / r_norm), atol=0.0,
                           maxiter=maxiter, M=jacobi)
        x = x + dx
        if info > 0:
            residual = float(np.linalg.norm(b - A @ x)) / b_norm
            raise ConvergenceError(f"CG did not converge in {maxiter} iterations", residual, history + [residual])
    residual = float(np.linalg.norm(b - A @ x)) / b_norm
    if residual > tol:
        raise ConvergenceError("CG stagnated", residual, history + [residual])
    return x


def _regularization(A: sp.spmatrix, M: sp.spmatrix) -> float:
    """Shift that makes A + shift*M definite when constants lie in the kernel of A."""
    ones = np.ones(A.shape[0])
    scale = float(A.diagonal().max()) / float(M.diagonal().max())
    if float(ones @ (A @ ones)) <= 1e-12 * max(scale, 1.0) * float(ones @ (M @ ones)):
        return REGULARIZATION * max(scale, 1.0)
    return 0.0


def _make_solver(A: sp.spmatrix, linear_solver: str, tol: float) -> t.Callable[[np.ndarray], np.ndarray]:
    if linear_solver == "direct":
        return spla.factorized(sp.csc_matrix(A))
    if linear_solver == "cg":
        return lambda b: solve_spd(A, b, tol=tol)
    raise ValueError(f"Unknown linear solver '{linear_solver}' (expected 'direct' or 'cg')")


def _inverse_iteration(A: sp.spmatrix, M: sp.spmatrix, x0: np.ndarray, tol: float, max_iter: int,
                       linear_solver: str,
                       project: t.Optional[t.Callable[[np.ndarray], np.ndarray]] = None) -> EigenPair:
    shift = _regularization(A, M)
    solve = _make_solver(A + shift * M if shift else A, linear_solver, tol * 1e-2)
    project = project or (lambda v: v)

    u = project(np.asarray(x0, dtype=float))
    u = u / np.sqrt(float(u @ (M @ u)))
    history = []
    for it in range(1, max_iter + 1):
        y = project(solve(M @ u))
        norm = np.sqrt(float(y @ (M @ y)))
        if not np.isfinite(norm) or norm == 0.0:
            raise ConvergenceError("Inverse iteration broke down", float("nan"), history)
        u = y / norm
        Au, Mu = A @ u, M @ u
        lam = float(u @ Au)
        scale = max(float(np.linalg.norm(Au)), shift * float(np.linalg.norm(Mu)), 1e-300)
        residual = float(np.linalg.norm(Au - lam * Mu)) / scale
        history.append(residual)
        if residual <= tol:
            logger.debug(f"Inverse iteration converged: lambda={lam:.12g} after {it} steps "
                         f"(residual {residual:.2e})")
            return EigenPair(eigenvalue=max(lam, 0.0), u=u, residual=residual, iterations=it)
    raise ConvergenceError(f"Inverse iteration did not converge in {max_iter} steps", history[-1], history)


def _normalize_sign(u: np.ndarray, M: sp.spmatrix) -> np.ndarray:
    total = float(np.sum(M @ u))
    if abs(total) > 1e-12 * float(np.sum(M @ np.abs(u))):
        return u if total > 0.0 else -u
    # Mean-zero vector: make the largest entry positive
    return u if u[np.argmax(np.abs(u))] > 0.0 else -u


def spectral_gap(A: sp.spmatrix, M: sp.spmatrix) -> float:
    """Relative gap (lambda_2 - lambda_1) / lambda_2 of the two smallest eigenvalues."""
    if A.shape[0] <= 8:
        values = la.eigh(A.toarray(), M.toarray(), eigvals_only=True, subset_by_index=[0, 1])
    else:
        sigma = -REGULARIZATION * max(float(A.diagonal().max()) / float(M.diagonal().max()), 1.0)
        values = spla.eigsh(sp.csc_matrix(A), k=2, M=sp.csc_matrix(M), sigma=sigma,
                            which="LM", return_eigenvectors=False)
    lo, hi = np.sort(values)
    return float((hi - lo) / max(abs(hi), 1e-300))


def smallest_eigenpair(A: sp.spmatrix, M: sp.spmatrix, tol: float = DEFAULT_TOL,
                       x0: t.Optional[np.ndarray] = None, check_gap: bool = False,
                       linear_solver: str = "direct", max_iter: int = MAX_INVERSE_ITERATIONS) -> EigenPair:
    """
    Smallest eigenpair of A u = lambda M u.

    Args:
        A: Symmetric positive semidefinite matrix (A + M definite)
        M: Symmetric positive definite mass matrix
        tol: Relative eigen-residual ||A u - lambda M u|| / ||A u||
        x0: Starting vector (defaults to the constant vector)
        check_gap: Also compute the second eigenvalue and warn on near-degeneracy
        linear_solver: 'direct' (sparse LU) or 'cg' for the inner solves
        max_iter: Inverse iteration cap

    Returns:
        EigenPair with u^T M u = 1 and integral of u >= 0
    """
    A, M = sp.csr_matrix(A), sp.csr_matrix(M)
    start = np.ones(A.shape[0]) if x0 is None else x0
    pair = _inverse_iteration(A, M, start, tol, max_iter, linear_solver)
    pair.u = _normalize_sign(pair.u, M)
    if check_gap:
        pair.gap = spectral_gap(A, M)
        if pair.gap < GAP_WARNING:
            logger.warning(f"First eigenvalue {pair.eigenvalue:.10g} is nearly degenerate "
                           f"(relative gap {pair.gap:.2e})")
    return pair


def neumann_nontrivial_eigenpair(K: sp.spmatrix, M: sp.spmatrix, tol: float = DEFAULT_TOL,
                                 x0: t.Optional[np.ndarray] = None,
                                 linear_solver: str = "direct") -> EigenPair:
    """
    First nonzero Neumann eigenpair: inverse iteration deflated against
    constants in the M inner product, so that 1^T M u = 0.
    """
    K, M = sp.csr_matrix(K), sp.csr_matrix(M)
    ones = np.ones(K.shape[0])
    m_ones = M @ ones
    total = float(ones @ m_ones)

    def project(v):
        return v - (float(m_ones @ v) / total) * ones

    start = np.random.default_rng(0).standard_normal(K.shape[0]) if x0 is None else x0
    pair = _inverse_iteration(K, M, start, tol, MAX_INVERSE_ITERATIONS, linear_solver, project)
    pair.u = _normalize_sign(pair.u, M)
    return pair


def dirichlet_eigenpair(K: sp.spmatrix, M: sp.spmatrix, boundary_vertices: np.ndarray,
                        tol: float = DEFAULT_TOL, linear_solver: str = "direct") -> EigenPair:
    """
    First Dirichlet eigenpair, boundary rows and columns eliminated.
    The returned u vanishes on the boundary vertices.
    """
    K, M = sp.csr_matrix(K), sp.csr_matrix(M)
    interior = np.setdiff1d(np.arange(K.shape[0]), boundary_vertices)
    if len(interior) == 0:
        raise ValueError("Mesh has no interior vertices")
    Ki = K[interior][:, interior]
    Mi = M[interior][:, interior]
    pair = smallest_eigenpair(Ki, Mi, tol=tol, linear_solver=linear_solver)
    u = np.zeros(K.shape[0])
    u[interior] = pair.u
    pair.u = u
    return pair


def dense_eigenvalues(A: sp.spmatrix, M: sp.spmatrix, count: int = 1) -> np.ndarray:
    """The `count` smallest eigenvalues from a dense full solve (coarse meshes only)."""
    A = A.toarray() if sp.issparse(A) else np.asarray(A)
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    return la.eigh(A, M, eigvals_only=True, subset_by_index=[0, count - 1])
