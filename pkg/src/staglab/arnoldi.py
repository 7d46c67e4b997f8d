"""Step-by-step Arnoldi factorization ``A V_m = V_{m+1} Htilde_m``."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ExhaustedSpaceError, ZeroRhsError
from .numeric_core import as_vector
from .thresholds import EPS_B

__all__ = ["ArnoldiDecomposition", "arnoldi_init", "arnoldi_step", "matvec"]


def matvec(A) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap an explicit matrix (dense or scipy sparse) as a matvec callable."""
    if callable(A):
        return A
    return lambda x: A @ x


@dataclass(frozen=True)
class ArnoldiDecomposition:
    """Immutable snapshot of the Arnoldi process after ``steps`` steps.

    ``basis`` holds ``v_1 .. v_{m+1}`` as columns (only ``v_1 .. v_m`` after
    a breakdown), ``hessenberg_ext`` is the ``(m+1) x m`` matrix with real
    nonnegative subdiagonal. ``av_norms[j]`` is ``||A v_{j+1}||`` and serves
    as the scale of the breakdown test.
    """

    apply_A: Callable[[np.ndarray], np.ndarray]
    b: np.ndarray
    beta: float
    basis: np.ndarray
    hessenberg_ext: np.ndarray
    breakdown: bool = False
    av_norms: tuple = ()

    @property
    def operator_dim(self) -> int:
        return self.b.shape[0]

    @property
    def steps(self) -> int:
        return self.hessenberg_ext.shape[1]

    def htilde(self, m=None) -> np.ndarray:
        """Leading ``(m+1) x m`` block, i.e. the extended Hessenberg matrix of
        step ``m``."""
        m = self.steps if m is None else m
        return self.hessenberg_ext[: m + 1, :m]

    def H(self, m=None) -> np.ndarray:
        """Square Hessenberg matrix ``H_m``."""
        m = self.steps if m is None else m
        return self.hessenberg_ext[:m, :m]

    def V(self, m) -> np.ndarray:
        return self.basis[:, :m]

    def subdiag(self, m=None) -> float:
        """``h_{m+1,m}`` (zero after a breakdown at step m)."""
        m = self.steps if m is None else m
        return float(self.hessenberg_ext[m, m - 1].real)


def arnoldi_init(apply_A, b) -> ArnoldiDecomposition:
    b = as_vector(b, name="b")
    beta = float(np.linalg.norm(b))
    if beta == 0:
        raise ZeroRhsError("right-hand side is the zero vector")
    return ArnoldiDecomposition(
        apply_A=matvec(apply_A),
        b=b,
        beta=beta,
        basis=(b / beta)[:, None],
        hessenberg_ext=np.zeros((1, 0), dtype=complex),
    )


def arnoldi_step(state: ArnoldiDecomposition, eps_b=EPS_B) -> ArnoldiDecomposition:
    """One Arnoldi step: modified Gram-Schmidt plus a full second pass.

    A breakdown (``h_{m+1,m} <= eps_b * ||A v_m||``, or reaching the operator
    dimension) sets ``breakdown`` and leaves ``v_{m+1}`` out; the new
    subdiagonal entry is then stored as an exact zero.
    """
    n = state.operator_dim
    m = state.steps
    if state.breakdown:
        raise ExhaustedSpaceError(f"Arnoldi already broke down at step {m}")
    if m >= n:
        raise ExhaustedSpaceError(f"Krylov space of dimension {n} is exhausted")
    V = state.basis
    w = np.asarray(state.apply_A(V[:, m]), dtype=complex)
    if w.shape != (n,):
        raise ValueError(f"apply_A returned shape {w.shape}, expected {(n,)}")
    av_norm = float(np.linalg.norm(w))
    h = np.zeros(m + 2, dtype=complex)
    for _ in range(2):
        for j in range(m + 1):
            c = np.vdot(V[:, j], w)
            w = w - c * V[:, j]
            h[j] += c
    hnext = float(np.linalg.norm(w))
    breakdown = m + 1 == n or hnext <= eps_b * av_norm

    H = np.zeros((m + 2, m + 1), dtype=complex)
    H[: m + 1, :m] = state.hessenberg_ext
    if breakdown:
        H[: m + 1, m] = h[: m + 1]
        basis = V
    else:
        h[m + 1] = hnext
        H[:, m] = h
        basis = np.concatenate([V, (w / hnext)[:, None]], axis=1)
    return replace(
        state,
        basis=basis,
        hessenberg_ext=H,
        breakdown=breakdown,
        av_norms=state.av_norms + (av_norm,),
    )
