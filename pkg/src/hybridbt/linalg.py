"""Dense small-matrix routines shared by the whole package.

Everything here operates on modest sizes (a few tens at most), so the
symmetric eigensolver is a cyclic Jacobi iteration: slower than LAPACK but
simple, deterministic and robust for the nearly-diagonal matrices that show
up after balancing. Inversion delegates to LAPACK via NumPy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ABS_FLOOR = 1e-14  # absolute floor applied to every relative tolerance


class LinalgError(ValueError):
    """Base class for numerical failures in this module."""


class NotPositiveDefinite(LinalgError):
    """Cholesky pivot was not positive; the matrix is not SPD."""


class SingularMatrix(LinalgError):
    """Matrix is singular or too ill-conditioned to invert reliably."""


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``matrix ~= vectors @ diag(values) @ vectors.T`` and the columns of
    ``vectors`` are orthonormal.
    """

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class DefinitenessVerdict:
    """Sign classification of a symmetric matrix under explicit margins.

    ``strict_margin`` is how far from zero an eigenvalue must be to count
    as strictly signed; ``slack`` is the tolerance for semidefinite
    classification. A matrix can be e.g. both NSD and PSD (the zero
    matrix); ``label`` picks a single name with strict verdicts first.
    """

    min_eigenvalue: float
    max_eigenvalue: float
    strict_margin: float
    slack: float

    @property
    def is_negative_definite(self) -> bool:
        return self.max_eigenvalue <= -self.strict_margin

    @property
    def is_negative_semidefinite(self) -> bool:
        return self.max_eigenvalue <= self.slack

    @property
    def is_positive_definite(self) -> bool:
        return self.min_eigenvalue >= self.strict_margin

    @property
    def is_positive_semidefinite(self) -> bool:
        return self.min_eigenvalue >= -self.slack

    @property
    def label(self) -> str:
        if self.is_negative_definite:
            return "ND"
        if self.is_positive_definite:
            return "PD"
        if self.is_negative_semidefinite:
            return "NSD"
        if self.is_positive_semidefinite:
            return "PSD"
        return "indefinite"


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name} must be square, got shape {a.shape}")
    return a


def symmetrize(a) -> np.ndarray:
    """Return (A + A^T)/2."""
    a = _as_square(a)
    return 0.5 * (a + a.T)


def check_symmetric(a, rtol: float = 1e-10) -> np.ndarray:
    """Validate symmetry to ``rtol`` (relative, with absolute floor), then symmetrize."""
    a = _as_square(a)
    dev = np.linalg.norm(a - a.T)
    if dev > rtol * np.linalg.norm(a) + ABS_FLOOR:
        raise LinalgError(f"matrix is not symmetric (asymmetry {dev:.3e})")
    return 0.5 * (a + a.T)


def sym_eig(a, tol: float = 1e-12, max_sweeps: int = 64) -> SymEig:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm falls below
    ``tol * ||A||_F``. Eigenvalues are returned in descending order; the
    sign of each eigenvector is fixed so its largest-magnitude component
    is positive, which makes downstream transformations deterministic.

    Parameters
    ----------
    a : array_like
        Symmetric matrix (validated to 1e-10 relative, then symmetrized).
    tol : float
        Off-diagonal reduction target, relative to ``||A||_F``.

    Returns
    -------
    SymEig
    """
    a = check_symmetric(a)
    n = a.shape[0]
    w = a.copy()
    v = np.eye(n)
    norm_a = np.linalg.norm(a) + ABS_FLOOR

    def offdiag(m):
        return math.sqrt(max(0.0, np.linalg.norm(m) ** 2 - np.linalg.norm(np.diag(m)) ** 2))

    for _ in range(max_sweeps):
        if offdiag(w) <= tol * norm_a:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                if abs(apq) <= 0.1 * tol * norm_a / max(n, 1):
                    continue
                theta = (w[q, q] - w[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * w[:, p] - s * w[:, q]
                rot_q = s * w[:, p] + c * w[:, q]
                w[:, p], w[:, q] = rot_p, rot_q
                rot_p = c * w[p, :] - s * w[q, :]
                rot_q = s * w[p, :] + c * w[q, :]
                w[p, :], w[q, :] = rot_p, rot_q
                w[p, q] = w[q, p] = 0.0
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    else:
        if offdiag(w) > tol * norm_a:
            raise LinalgError("Jacobi iteration did not converge")

    values = np.diag(w).copy()
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = v[:, order]
    # deterministic sign: largest-|component| of each eigenvector positive
    for j in range(n):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0.0:
            vectors[:, j] = -vectors[:, j]
    return SymEig(values=values, vectors=vectors)


def cholesky(p) -> np.ndarray:
    """Lower-triangular factor U with ``P = U @ U.T`` for SPD ``P``.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is not strictly positive (relative to the scale of P).
    """
    p = check_symmetric(p)
    n = p.shape[0]
    scale = np.linalg.norm(p) + ABS_FLOOR
    u = np.zeros_like(p)
    for j in range(n):
        d = p[j, j] - u[j, :j] @ u[j, :j]
        if d <= ABS_FLOOR * scale:
            raise NotPositiveDefinite(f"leading minor {j + 1} has non-positive pivot {d:.3e}")
        u[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            u[i, j] = (p[i, j] - u[i, :j] @ u[j, :j]) / u[j, j]
    return u


def inverse(a, cond_limit: float = 1e12) -> np.ndarray:
    """Matrix inverse with a condition-number guard.

    Raises
    ------
    SingularMatrix
        If the 2-norm condition estimate is not finite or exceeds
        ``cond_limit``.
    """
    a = _as_square(a)
    try:
        cond = np.linalg.cond(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy internal failure
        raise SingularMatrix(str(exc)) from exc
    if not np.isfinite(cond) or cond >= cond_limit:
        raise SingularMatrix(f"condition estimate {cond:.3e} exceeds {cond_limit:.1e}")
    return np.linalg.solve(a, np.eye(a.shape[0]))


def mat_exp(a, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(A t)`` by scaling-and-squaring.

    The scaled matrix has 1-norm below 1/2, where a truncated Taylor
    series converges to well under 1e-16 in 20 terms; the result is then
    squared back. Accuracy on the norm-bounded inputs used here is better
    than 1e-9 relative.
    """
    a = _as_square(a)
    b = a * float(t)
    norm = np.linalg.norm(b, 1)
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    c = b / (2.0 ** squarings)
    n = a.shape[0]
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, 21):
        term = term @ c / k
        result = result + term
        if np.linalg.norm(term, 1) < 1e-18 * max(1.0, np.linalg.norm(result, 1)):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def definiteness(a, margin: float | None = None, slack: float = 1e-8) -> DefinitenessVerdict:
    """Classify the sign of a symmetric matrix.

    ``margin`` defaults to ``1e-12 * (1 + ||A||_F)`` (with the module's
    absolute floor); strict verdicts require eigenvalues beyond the
    margin, semidefinite verdicts allow ``slack`` of the wrong sign.
    """
    a = check_symmetric(a)
    if margin is None:
        margin = max(1e-12 * (1.0 + np.linalg.norm(a)), ABS_FLOOR)
    eig = sym_eig(a)
    return DefinitenessVerdict(
        min_eigenvalue=float(eig.values[-1]),
        max_eigenvalue=float(eig.values[0]),
        strict_margin=float(margin),
        slack=float(slack),
    )


def solve_sylvester_pair(a_left, a_right, rhs) -> np.ndarray:
    """Solve ``a_left @ X + X @ a_right = rhs`` by vectorization.

    Falls back to least squares when the Kronecker operator is singular
    (an eigenvalue of ``a_left`` equals the negative of one of
    ``a_right``).
    """
    a_left = _as_square(a_left)
    a_right = _as_square(a_right)
    rhs = np.asarray(rhs, dtype=float)
    n = a_left.shape[0]
    # row-major vec: vec(L X) = kron(L, I) vec(X), vec(X R) = kron(I, R^T) vec(X)
    op = np.kron(a_left, np.eye(n)) + np.kron(np.eye(n), a_right.T)
    try:
        x = np.linalg.solve(op, rhs.reshape(-1))
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(op, rhs.reshape(-1), rcond=None)[0]
    return x.reshape(n, n)
