"""Dense complex kernels for the small projected problems.

Everything here works on ``complex128`` numpy arrays of order at most a few
hundred: Givens-based Hessenberg least squares, back substitution, smallest
singular triplets and a generalized eigensolver for pencils that may carry
infinite eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegeneratePencilError,
    DimensionError,
    NotHessenbergError,
    SingularTriangularError,
)
from .thresholds import EPS_Z

__all__ = [
    "PencilEigenPair",
    "as_matrix",
    "as_vector",
    "givens",
    "apply_givens",
    "back_substitute",
    "qr_hessenberg_ls",
    "smallest_singular_triplet",
    "left_null_space",
    "solve_pencil",
    "normalize_phase",
    "vector_angle",
]


def as_matrix(M, rows=None, cols=None, name="matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-d complex array, checking the shape."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if rows is not None and M.shape[0] != rows:
        raise DimensionError(f"{name} must have {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise DimensionError(f"{name} must have {cols} columns, got {M.shape[1]}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_vector(v, length=None, name="vector") -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"{name} must have length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def givens(a, b):
    """Rotation parameters ``(c, s)`` with real ``c`` such that

        [  c        s ] [a]   [r]
        [ -conj(s)  c ] [b] = [0]

    for complex ``a`` and ``b``.
    """
    a = complex(a)
    b = complex(b)
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, complex(np.conj(b) / abs(b))
    r = np.hypot(abs(a), abs(b))
    c = abs(a) / r
    s = (a / abs(a)) * np.conj(b) / r
    return float(c), complex(s)


def apply_givens(c, s, x, y):
    """Apply the rotation from :func:`givens` to the pair ``(x, y)``."""
    return c * x + s * y, -np.conj(s) * x + c * y


def back_substitute(R, rhs) -> np.ndarray:
    """Solve ``R x = rhs`` for upper triangular ``R``.

    Raises :class:`SingularTriangularError` when a diagonal entry is zero or
    below ``n * eps * max|R|``.
    """
    R = as_matrix(R, name="R")
    n = R.shape[0]
    if R.shape[1] != n:
        raise DimensionError(f"R must be square, got shape {R.shape}")
    rhs = as_vector(rhs, n, name="rhs")
    if n == 0:
        return np.zeros(0, dtype=complex)
    tol = n * np.finfo(float).eps * np.max(np.abs(R))
    diag = np.abs(np.diag(R))
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        raise SingularTriangularError(
            f"diagonal entry {bad[0]} of R is {diag[bad[0]]:.3e} (threshold {tol:.3e})"
        )
    x = np.zeros(n, dtype=complex)
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def _check_hessenberg(H):
    below = np.tril(H, -2)
    if np.any(below != 0):
        i, j = np.argwhere(below != 0)[0]
        raise NotHessenbergError(f"entry ({i}, {j}) lies below the first subdiagonal")


def qr_hessenberg_ls(Htilde, rhs):
    """Minimize ``||rhs - Htilde x||`` for an ``(m+1) x m`` upper Hessenberg
    matrix by Givens QR.

    Returns
    -------
    solution : ndarray, shape (m,)
    residual_norm : float
    """
    H = as_matrix(Htilde, name="Htilde").copy()
    m = H.shape[1]
    if m < 1 or H.shape[0] != m + 1:
        raise DimensionError(f"Htilde must be (m+1) x m with m >= 1, got {H.shape}")
    g = as_vector(rhs, m + 1, name="rhs").copy()
    _check_hessenberg(H)
    for j in range(m):
        c, s = givens(H[j, j], H[j + 1, j])
        H[j, j:], H[j + 1, j:] = apply_givens(c, s, H[j, j:], H[j + 1, j:])
        H[j + 1, j] = 0
        g[j], g[j + 1] = apply_givens(c, s, g[j], g[j + 1])
    return back_substitute(H[:m, :], g[:m]), float(abs(g[m]))


def normalize_phase(v) -> np.ndarray:
    """Scale ``v`` to unit 2-norm with its largest-modulus entry real and
    positive. Near-ties resolve to the first index."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    v = v / nrm
    mod = np.abs(v)
    k = int(np.flatnonzero(mod >= (1 - 1e-12) * mod.max())[0])
    return v * (np.conj(v[k]) / mod[k])


def vector_angle(a, b) -> float:
    """Angle in ``[0, pi/2]`` between the lines spanned by ``a`` and ``b``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    c = np.vdot(a, b)
    return float(np.arctan2(np.linalg.norm(b - a * c), abs(c)))


def smallest_singular_triplet(M):
    """Smallest singular value of a square matrix with unit right and left
    singular vectors, ``||M r|| = ||M^H l|| = sigma_min``."""
    M = as_matrix(M, name="M")
    if M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"M must be square of order >= 1, got {M.shape}")
    U, s, Vh = np.linalg.svd(M)
    right = Vh[-1].conj()
    k = int(np.argmax(np.abs(right)))
    phase = abs(right[k]) / right[k]
    # same phase on both sides keeps M r = sigma l
    return float(s[-1]), right * phase, U[:, -1] * phase


def left_null_space(M, tol) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``M^H``,
    i.e. left singular vectors with singular value ``<= tol``."""
    M = as_matrix(M, name="M")
    U, s, _ = np.linalg.svd(M)
    keep = np.ones(U.shape[1], dtype=bool)  # columns past len(s) are null for tall M
    keep[: len(s)] = s <= tol
    return U[:, keep]


@dataclass(frozen=True)
class PencilEigenPair:
    """Homogeneous eigenpair ``beta * A u = alpha * B u`` of a pencil.

    ``(alpha, beta)`` is scaled to unit 2-norm with ``beta`` real and
    nonnegative; ``infinite`` records whether ``|beta|`` fell below the
    relative threshold at construction time.
    """

    alpha: complex
    beta: complex
    vector: np.ndarray
    infinite: bool

    @property
    def eigenvalue(self) -> complex:
        if self.infinite:
            return complex(np.inf, 0.0)
        return self.alpha / self.beta

    @property
    def is_finite(self) -> bool:
        return not self.infinite


def _homogeneous(alpha, beta, eps_z):
    nrm = np.hypot(abs(alpha), abs(beta))
    alpha, beta = alpha / nrm, beta / nrm
    if beta != 0:
        ph = np.conj(beta) / abs(beta)
        alpha, beta = alpha * ph, abs(beta)
    infinite = abs(beta) <= eps_z * (abs(alpha) + abs(beta))
    return complex(alpha), complex(beta), bool(infinite)


def _sort_key(pair):
    if pair.infinite:
        return (1, 0.0, 0.0, 0.0)
    lam = pair.eigenvalue
    # rounding keeps the ordering of exact ties (e.g. +-sqrt(3)) independent of roundoff
    r = lambda x: float(f"{x:.11e}")
    return (0, -r(abs(lam)), -r(lam.real), -r(lam.imag))


def solve_pencil(Amat, Bmat, eps_z=EPS_Z):
    """All ``m`` eigenpairs of the square pencil ``(Amat, Bmat)``.

    Infinite eigenvalues are deflated first with a unitary staircase
    reduction of the reversed pencil ``Bmat - mu*Amat`` (rank decisions at
    ``eps_z * (||Amat||_F + ||Bmat||_F)``), so a defective eigenvalue at
    infinity is counted exactly instead of splitting into huge spurious
    finite values. The remaining regular part, whose ``B`` block is
    nonsingular, goes through LAPACK's QZ. ``Bmat`` is never inverted.

    Returns the pairs sorted with finite ones first by descending modulus,
    then descending real part, then descending imaginary part.

    Raises
    ------
    DegeneratePencilError
        If ``det(beta*Amat - alpha*Bmat)`` vanishes identically.
    """
    A = as_matrix(Amat, name="Amat")
    m = A.shape[0]
    if A.shape[1] != m:
        raise DimensionError(f"Amat must be square, got {A.shape}")
    B = as_matrix(Bmat, m, m, name="Bmat")
    tol = eps_z * (np.linalg.norm(A) + np.linalg.norm(B))

    levels = []
    first_null = None
    Acur, Bcur = A, B
    while Acur.shape[0] > 0:
        _, s, Vh = np.linalg.svd(Bcur)
        k = int(np.count_nonzero(s <= tol))
        if k == 0:
            break
        Z = np.concatenate([Vh[-k:].conj().T, Vh[:-k].conj().T], axis=1)
        AN = Acur @ Z[:, :k]
        if np.linalg.svd(AN, compute_uv=False)[-1] <= tol:
            raise DegeneratePencilError("pencil is singular: Amat and Bmat share a null vector")
        Q, _ = np.linalg.qr(AN, mode="complete")
        At = Q.conj().T @ Acur @ Z
        Bt = Q.conj().T @ Bcur @ Z
        if first_null is None:
            first_null = Z[:, :k]
        levels.append((Z, k, At[:k, :k], At[:k, k:], Bt[:k, k:]))
        Acur, Bcur = At[k:, k:], Bt[k:, k:]

    pairs = []
    n_inf = m - Acur.shape[0]
    for j in range(n_inf):
        pairs.append(PencilEigenPair(1 + 0j, 0j, normalize_phase(first_null[:, j % first_null.shape[1]]), True))

    if Acur.shape[0] > 0:
        w, vr = scipy.linalg.eig(Acur, Bcur, homogeneous_eigvals=True)
        scale_a, scale_b = np.linalg.norm(Acur), np.linalg.norm(Bcur)
        for j in range(w.shape[1]):
            a_raw, b_raw = w[0, j], w[1, j]
            if abs(a_raw) <= eps_z * scale_a and abs(b_raw) <= eps_z * scale_b:
                raise DegeneratePencilError("pencil is singular: QZ produced a (0, 0) eigenvalue")
            alpha, beta, infinite = _homogeneous(a_raw, b_raw, eps_z)
            if infinite:
                vec = first_null[:, 0] if first_null is not None else vr[:, j]
                pairs.append(PencilEigenPair(alpha, beta, normalize_phase(vec), True))
                continue
            sigma = alpha / beta
            v = vr[:, j]
            for Z, k, A11, A12, B12 in reversed(levels):
                top = -np.linalg.solve(A11, (A12 - sigma * B12) @ v)
                v = Z @ np.concatenate([top, v])
            pairs.append(PencilEigenPair(alpha, beta, normalize_phase(v), False))

    pairs.sort(key=_sort_key)
    return pairs

