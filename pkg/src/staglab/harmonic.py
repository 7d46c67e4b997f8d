"""Harmonic Ritz pairs from Hessenberg data and the residual polynomial.

The pairs of step ``m`` solve the pencil

    (H_m^H H_m + |h_{m+1,m}|^2 e_m e_m^H) u = sigma H_m^H u,

which is ``V_m^H A^H A V_m u = sigma V_m^H A^H V_m u`` rewritten through the
Arnoldi relation. Infinite values (singular ``H_m``) are kept as pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .arnoldi import ArnoldiDecomposition
from .errors import ConditioningError, InfinitePairError
from .gmres import GmresState
from .numeric_core import PencilEigenPair, solve_pencil
from .thresholds import EPS_Z

__all__ = [
    "HarmonicPair",
    "harmonic_pencil",
    "harmonic_pairs",
    "harmonic_residual_vector",
    "pencil_residual",
    "residual_polynomial_roots",
    "match_multisets",
]

KRYLOV_COND_LIMIT = 1e8


@dataclass(frozen=True)
class HarmonicPair:
    sigma: PencilEigenPair
    u_last: complex
    harmonic_residual: Optional[np.ndarray] = None

    @property
    def u(self) -> np.ndarray:
        return self.sigma.vector

    @property
    def value(self) -> complex:
        return self.sigma.eigenvalue

    @property
    def is_finite(self) -> bool:
        return not self.sigma.infinite

    def with_vector(self, u) -> "HarmonicPair":
        """Copy carrying a different (e.g. rescaled or perturbed) vector.

        The stored harmonic residual is dropped since it no longer matches.
        """
        u = np.asarray(u, dtype=complex)
        return HarmonicPair(replace(self.sigma, vector=u), complex(u[-1]), None)


def harmonic_pencil(decomp: ArnoldiDecomposition, m):
    """The matrices ``(Htilde^H Htilde, H^H)`` of step ``m``."""
    Ht = decomp.htilde(m)
    return Ht.conj().T @ Ht, decomp.H(m).conj().T


def pencil_residual(decomp: ArnoldiDecomposition, pair: HarmonicPair, m) -> float:
    """``||beta * Amat u - alpha * Bmat u||`` for the harmonic pencil."""
    Amat, Bmat = harmonic_pencil(decomp, m)
    s = pair.sigma
    return float(np.linalg.norm(s.beta * (Amat @ s.vector) - s.alpha * (Bmat @ s.vector)))


def _residual_from_basis(decomp, u, sigma, m):
    Ht = decomp.htilde(m)
    cols = min(m + 1, decomp.basis.shape[1])
    AVu = decomp.basis[:, :cols] @ (Ht[:cols] @ u)
    return AVu - sigma * (decomp.V(m) @ u)


def harmonic_pairs(decomp: ArnoldiDecomposition, m, eps_z=EPS_Z) -> list:
    """All ``m`` harmonic Ritz pairs of step ``m``, sorted as by
    :func:`solve_pencil`. Finite pairs carry their harmonic residual
    vector."""
    if not 1 <= m <= decomp.steps:
        raise IndexError(f"step {m} outside 1..{decomp.steps}")
    Amat, Bmat = harmonic_pencil(decomp, m)
    out = []
    for p in solve_pencil(Amat, Bmat, eps_z=eps_z):
        res = None if p.infinite else _residual_from_basis(decomp, p.vector, p.eigenvalue, m)
        out.append(HarmonicPair(p, complex(p.vector[-1]), res))
    return out


def harmonic_residual_vector(decomp: ArnoldiDecomposition, pair: HarmonicPair, m) -> np.ndarray:
    """``A V_m u - sigma V_m u`` evaluated as ``V_{m+1}(Htilde u) - sigma V_m u``."""
    if pair.sigma.infinite:
        raise InfinitePairError("harmonic residual is undefined for an infinite pair")
    if not 1 <= m <= decomp.steps:
        raise IndexError(f"step {m} outside 1..{decomp.steps}")
    return _residual_from_basis(decomp, pair.u, pair.value, m)


def residual_polynomial_roots(state: GmresState, m) -> np.ndarray:
    """Roots of the GMRES residual polynomial ``p_m(z) = 1 - z q(z)``.

    The iterate ``x_m = V_m y_m`` is re-expressed in the power basis
    ``[b, Ab, ..., A^{m-1} b]`` (columns scaled to unit norm for the
    change of basis), and the roots come from the eigenvalues of the
    companion matrix. If the leading coefficient vanishes the degree drops
    and the missing roots are returned as ``inf``.

    Raises
    ------
    ConditioningError
        If the column-scaled power basis has condition number above 1e8.
    """
    if not 1 <= m <= state.steps:
        raise IndexError(f"step {m} outside 1..{state.steps}")
    arn = state.arnoldi
    cols = [arn.b]
    for _ in range(m - 1):
        cols.append(np.asarray(arn.apply_A(cols[-1]), dtype=complex))
    K = np.stack(cols, axis=1)
    scale = np.linalg.norm(K, axis=0)
    Kn = K / scale
    cond = np.linalg.cond(Kn)
    if not cond <= KRYLOV_COND_LIMIT:
        raise ConditioningError(f"Krylov basis condition number {cond:.3e} exceeds {KRYLOV_COND_LIMIT:.0e}")
    x = arn.V(m) @ state.y(m)
    cn, *_ = np.linalg.lstsq(Kn, x, rcond=None)
    c = cn / scale
    coeffs = np.concatenate([[1.0 + 0j], -c])  # ascending powers
    deg = m
    while deg > 0 and abs(coeffs[deg]) <= 1e-14 * np.max(np.abs(coeffs)):
        deg -= 1
    roots = np.polynomial.polynomial.polyroots(coeffs[: deg + 1]) if deg > 0 else np.zeros(0, complex)
    return np.concatenate([np.asarray(roots, dtype=complex), np.full(m - deg, complex(np.inf, 0))])


def match_multisets(a, b):
    """Optimal one-to-one matching of two equally sized multisets of
    complex numbers by relative distance ``|a - b| / max(1, |a|)``.

    Returns the largest matched relative distance.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return np.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :]) / np.maximum(1.0, np.abs(a))[:, None]
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
