"""Test problems with known stagnation behaviour."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .arnoldi import arnoldi_init, arnoldi_step
from .errors import GeneratorFailure

__all__ = [
    "ProblemInstance",
    "paper_example",
    "cyclic_shift_instance",
    "planted_singular_hessenberg",
    "step_one_stagnation",
    "random_instance",
    "GENERATORS",
]

MAX_RESEEDS = 100
PLANTED_TOL = 1e-14
SCREEN_TOL = 1e-6


@dataclass(frozen=True)
class ProblemInstance:
    """A linear system ``A x = b`` together with where it came from.

    ``expected_stagnation_steps`` is ``None`` when unknown.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    provenance: dict = field(default_factory=dict)
    expected_stagnation_steps: Optional[frozenset] = None

    def __post_init__(self):
        n = self.matrix.shape[0]
        if n < 1 or self.matrix.shape != (n, n) or self.rhs.shape != (n,):
            raise ValueError("matrix must be n x n and rhs of length n, n >= 1")
        if not np.any(self.rhs):
            raise ValueError("rhs must be nonzero")
        if self.expected_stagnation_steps is not None and not all(
            1 <= k <= n - 1 for k in self.expected_stagnation_steps
        ):
            raise ValueError("expected stagnation steps must lie in 1..n-1")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def operator(self):
        A = self.matrix
        return lambda x: A @ x


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _e1(n):
    b = np.zeros(n, dtype=complex)
    b[0] = 1
    return b


def paper_example() -> ProblemInstance:
    A = np.array([[1, 1, 1], [1, 0, 1], [0, 1, 1]], dtype=complex)
    return ProblemInstance(A, _e1(3), {"generator": "paper_example"}, frozenset())


def cyclic_shift_instance(n) -> ProblemInstance:
    """Cyclic permutation ``A e_i = e_{i+1 mod n}`` with ``b = e_1``; GMRES
    makes no progress until step ``n``."""
    if n < 2:
        raise ValueError("cyclic shift needs n >= 2")
    A = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    return ProblemInstance(
        A, _e1(n), {"generator": "cyclic_shift", "n": n}, frozenset(range(1, n))
    )


def _leading_smin(H, k):
    return np.linalg.svd(H[:k, :k], compute_uv=False)[-1]


def planted_singular_hessenberg(n, stagnation_steps, seed) -> ProblemInstance:
    """Random unreduced upper Hessenberg ``A`` with ``b = e_1`` whose leading
    ``m x m`` block is exactly singular for each planted ``m``.

    For a planted ``m`` the last column of the block is rewritten as
    ``[H_{m-1} s_1; gamma * s_1[-1]]`` with ``gamma = H[m, m-1]`` and a
    random ``s_1``, so ``[s_1; -1]`` spans its kernel. Subdiagonal entries
    are real and positive, which makes the Arnoldi basis the identity. The
    instance is redrawn if any other leading block has
    ``sigma_min <= 1e-6 ||H||_F``.
    """
    steps = sorted(set(int(k) for k in stagnation_steps))
    if n < 3:
        raise ValueError("planted instances need n >= 3")
    if any(not 2 <= k <= n - 1 for k in steps):
        raise ValueError(f"planted steps must lie in 2..{n - 1}")
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_RESEEDS):
        H = np.triu(_crandn(rng, n, n))
        H[np.arange(1, n), np.arange(n - 1)] = rng.uniform(0.5, 1.5, n - 1)
        construction = {}
        for m in steps:
            s1 = _crandn(rng, m - 1)
            while abs(s1[-1]) < 0.1:
                s1 = _crandn(rng, m - 1)
            H[: m - 1, m - 1] = H[: m - 1, : m - 1] @ s1
            H[m - 1, m - 1] = H[m - 1, m - 2] * s1[-1]
            construction[m] = s1
        norm = np.linalg.norm(H)
        ok = all(
            (_leading_smin(H, k) <= PLANTED_TOL * norm) if k in construction
            else (_leading_smin(H, k) > SCREEN_TOL * norm)
            for k in range(1, n + 1)
        )
        if ok:
            prov = {
                "generator": "planted_singular_hessenberg",
                "n": n,
                "stagnation_steps": steps,
                "seed": seed,
                "attempts": attempt + 1,
                "s1": {str(m): [[v.real, v.imag] for v in s1] for m, s1 in construction.items()},
            }
            return ProblemInstance(H, _e1(n), prov, frozenset(steps))
    raise GeneratorFailure(f"no valid planted instance after {MAX_RESEEDS} draws (n={n}, steps={steps})")


def _null_numerical_range_vector(A, rng):
    """Unit ``b`` with ``b^H A b = 0`` taken from a random 2-d subspace, or
    ``None`` if zero is outside the numerical range of the compression."""
    n = A.shape[0]
    Q, _ = np.linalg.qr(_crandn(rng, n, 2))
    B = Q.conj().T @ A @ Q
    herm = (B + B.conj().T) / 2
    skew = (B - B.conj().T) / 2j
    lam, W = np.linalg.eigh(herm)
    if not lam[0] < 0 < lam[1]:
        return None
    q, p = W[:, 0], W[:, 1]
    a, c = np.sqrt(-lam[0]), np.sqrt(lam[1])
    # z = a p + c e^{i phi} q kills the Hermitian part; phi kills the skew part
    c0 = (a**2 * np.vdot(p, skew @ p) + c**2 * np.vdot(q, skew @ q)).real
    g = np.vdot(p, skew @ q)
    if abs(g) == 0 or abs(c0) > 2 * a * c * abs(g) * (1 - 1e-9):
        return None
    phi = np.arccos(-c0 / (2 * a * c * abs(g))) - np.angle(g)
    z = a * p + c * np.exp(1j * phi) * q
    b = Q @ z
    return b / np.linalg.norm(b)


def _screen_later_steps(A, b, n):
    arn = arnoldi_init(lambda x: A @ x, b)
    for k in range(1, n):
        arn = arnoldi_step(arn)
        if arn.breakdown:
            return False
        if k >= 2 and _leading_smin(arn.H(k), k) <= SCREEN_TOL * np.linalg.norm(arn.htilde(k)):
            return False
    return True


def step_one_stagnation(n, seed) -> ProblemInstance:
    """Random nonsingular ``A`` with ``b`` chosen so that ``<A b, b> = 0``,
    i.e. GMRES stagnates at step 1.

    The right-hand side lives in a random plane; within it the Hermitian and
    skew-Hermitian parts of the compressed quadratic form are zeroed in
    closed form. Draws where zero is outside the compression's numerical
    range, or where a later Hessenberg block is nearly singular, are
    discarded.
    """
    if n < 2:
        raise ValueError("step-one instances need n >= 2")
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_RESEEDS):
        A = _crandn(rng, n, n)
        if np.linalg.svd(A, compute_uv=False)[-1] <= SCREEN_TOL * np.linalg.norm(A):
            continue
        b = _null_numerical_range_vector(A, rng)
        if b is None or not _screen_later_steps(A, b, n):
            continue
        prov = {"generator": "step_one_stagnation", "n": n, "seed": seed, "attempts": attempt + 1}
        return ProblemInstance(A, b, prov, frozenset({1}))
    raise GeneratorFailure(f"no step-one stagnation instance after {MAX_RESEEDS} draws (n={n})")


def random_instance(n, seed) -> ProblemInstance:
    """Complex Gaussian ``A`` and ``b`` with unit-variance entries."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    A = _crandn(rng, n, n)
    b = _crandn(rng, n)
    return ProblemInstance(A, b, {"generator": "random", "n": n, "seed": seed}, None)


GENERATORS = {
    "paper-example": paper_example,
    "cyclic-shift": cyclic_shift_instance,
    "planted": planted_singular_hessenberg,
    "step-one": step_one_stagnation,
    "random": random_instance,
}
