"""Instrumented GMRES with an incrementally updated Givens QR of the
Hessenberg matrix.

The initial guess is always zero, so ``r_0 = b``. The solution coefficients
``y`` are re-solved at every step, because the diagnostics need ``e_m^H y``
for each ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arnoldi import ArnoldiDecomposition, arnoldi_init, arnoldi_step
from .errors import ExhaustedSpaceError
from .numeric_core import apply_givens, back_substitute, givens

__all__ = [
    "GmresState",
    "IterationRecord",
    "gmres_init",
    "gmres_advance",
    "run_gmres",
    "materialize_residual",
    "nested_ls_consistency",
    "apply_AV",
    "normal_equation_residual",
]

CONVERGED_RTOL = 1e-12


@dataclass(frozen=True)
class IterationRecord:
    m: int
    y: np.ndarray
    resnorm: float
    em_y: complex
    residual_vector: Optional[np.ndarray] = None


@dataclass(frozen=True)
class GmresState:
    """GMRES after ``arnoldi.steps`` iterations.

    ``R`` is the triangular factor of the rotated Hessenberg matrix,
    ``transformed_rhs`` the rotated ``beta e_1`` and ``y_history[m]`` the
    least squares solution of step ``m`` (``y_history[0]`` is empty).
    """

    arnoldi: ArnoldiDecomposition
    givens_history: tuple
    R: np.ndarray
    transformed_rhs: np.ndarray
    y_history: tuple
    resnorm_history: tuple
    terminal: bool = False

    @property
    def steps(self) -> int:
        return self.arnoldi.steps

    @property
    def beta(self) -> float:
        return self.arnoldi.beta

    @property
    def y_current(self) -> np.ndarray:
        return self.y_history[-1]

    def y(self, m) -> np.ndarray:
        return self.y_history[m]


def gmres_init(apply_A, b) -> GmresState:
    arn = arnoldi_init(apply_A, b)
    return GmresState(
        arnoldi=arn,
        givens_history=(),
        R=np.zeros((0, 0), dtype=complex),
        transformed_rhs=np.array([arn.beta], dtype=complex),
        y_history=(np.zeros(0, dtype=complex),),
        resnorm_history=(arn.beta,),
    )


def gmres_advance(state: GmresState):
    """One GMRES iteration; returns ``(new_state, record)``.

    A lucky breakdown, or a residual below ``1e-12 * beta``, marks the new
    state terminal.
    """
    if state.terminal:
        raise ExhaustedSpaceError("GMRES state is terminal")
    arn = arnoldi_step(state.arnoldi)
    m = arn.steps
    col = arn.hessenberg_ext[:, m - 1].copy()
    for j, (c, s) in enumerate(state.givens_history):
        col[j], col[j + 1] = apply_givens(c, s, col[j], col[j + 1])
    c, s = givens(col[m - 1], col[m])
    col[m - 1], col[m] = apply_givens(c, s, col[m - 1], col[m])

    R = np.zeros((m, m), dtype=complex)
    R[: m - 1, : m - 1] = state.R
    R[:, m - 1] = col[:m]
    g = np.append(state.transformed_rhs, 0j)
    g[m - 1], g[m] = apply_givens(c, s, g[m - 1], g[m])

    y = back_substitute(R, g[:m])
    resnorm = float(abs(g[m]))
    terminal = arn.breakdown or resnorm <= CONVERGED_RTOL * arn.beta
    new = GmresState(
        arnoldi=arn,
        givens_history=state.givens_history + ((c, s),),
        R=R,
        transformed_rhs=g,
        y_history=state.y_history + (y,),
        resnorm_history=state.resnorm_history + (resnorm,),
        terminal=terminal,
    )
    return new, IterationRecord(m=m, y=y, resnorm=resnorm, em_y=complex(y[-1]))


def run_gmres(apply_A, b, max_iter=None, rtol=1e-10):
    """Run GMRES until ``||r_m|| <= rtol * beta``, breakdown or ``max_iter``.

    Returns ``(state, records, status)`` with status one of ``"converged"``,
    ``"breakdown"`` or ``"exhausted"``.
    """
    state = gmres_init(apply_A, b)
    n = state.arnoldi.operator_dim
    max_iter = n if max_iter is None else min(max_iter, n)
    records = []
    status = "exhausted"
    while state.steps < max_iter:
        state, rec = gmres_advance(state)
        records.append(rec)
        if rec.resnorm <= rtol * state.beta:
            status = "converged"
            break
        if state.terminal:
            status = "breakdown"
            break
    return state, records, status


def apply_AV(state: GmresState, m) -> np.ndarray:
    """``A V_m`` formed column by column with the operator itself (not via
    the Hessenberg matrix)."""
    arn = state.arnoldi
    V = arn.V(m)
    if m == 0:
        return np.zeros((arn.operator_dim, 0), dtype=complex)
    return np.stack([np.asarray(arn.apply_A(V[:, j]), dtype=complex) for j in range(m)], axis=1)


def materialize_residual(state: GmresState, m) -> np.ndarray:
    """``r_m = b - A V_m y_m`` recomputed from the basis and the operator."""
    if not 0 <= m <= state.steps:
        raise IndexError(f"step {m} outside 0..{state.steps}")
    b = state.arnoldi.b
    if m == 0:
        return b.copy()
    x = state.arnoldi.V(m) @ state.y(m)
    return b - np.asarray(state.arnoldi.apply_A(x), dtype=complex)


def nested_ls_consistency(state: GmresState, m) -> float:
    """``||z_{m-1} - y_{m-1}||`` where ``z`` solves
    ``min ||b - A V_m (I - e_m e_m^H) x||`` by a dense least squares oracle."""
    if not 2 <= m <= state.steps:
        raise IndexError(f"step {m} outside 2..{state.steps}")
    AV = apply_AV(state, m)
    AV[:, m - 1] = 0
    z, *_ = np.linalg.lstsq(AV, state.arnoldi.b, rcond=None)
    return float(np.linalg.norm(z[: m - 1] - state.y(m - 1)))


def normal_equation_residual(state: GmresState, m) -> float:
    """``||(H^H H + |h|^2 e_m e_m^H) y - beta H^H e_1||`` for step ``m``."""
    arn = state.arnoldi
    H = arn.H(m)
    h = arn.subdiag(m)
    y = state.y(m)
    lhs = H.conj().T @ (H @ y)
    lhs[-1] += abs(h) ** 2 * y[-1]
    return float(np.linalg.norm(lhs - arn.beta * H.conj().T[:, 0]))

