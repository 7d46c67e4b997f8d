"""Per-iteration numerical checks of the GMRES stagnation theory.

Two scalars share a name in the underlying theory and are kept apart here:
``K`` is the inner product ``<A v_m, r_{m-1}>`` that drives the residual
gap, ``K_scale`` the factor relating a harmonic residual vector to the GMRES
residual.

Exact zero tests are replaced by threshold comparisons against explicit
scales, all of which are stored in :class:`StagnationReport` so every
boolean can be recomputed from the numbers alone:

* ``|K| <= eps_z * scale_K``        with ``scale_K = ||Htilde_m||_F ||r_{m-1}||``
* ``|e_m^H y| <= eps_z * scale_y``  with ``scale_y = ||y|| + beta / ||Htilde_m||_F``
* ``sigma_min(H_m) <= eps_z * scale_H`` with ``scale_H = ||Htilde_m||_F``
* ``max |e_m^H u| <= eps_z`` over finite pairs (unit ``u``; vacuous if none)
* stagnated iff ``|gap| <= eps_s * beta**2``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InconsistentStateError, InfinitePairError, PreconditionViolated
from .gmres import GmresState, apply_AV, materialize_residual
from .harmonic import HarmonicPair, harmonic_pairs, harmonic_residual_vector
from .numeric_core import vector_angle
from .thresholds import DEFAULT, Thresholds

__all__ = [
    "StagnationReport",
    "CoincidenceResult",
    "PersistenceVerdict",
    "StepAnalysis",
    "compute_K",
    "gap_identity_check",
    "residual_difference_identity",
    "stagnation_report",
    "coincidence_check",
    "stagnation_coincidence_check",
    "persistence_check",
    "analyze_run",
]

CONVERGED_RTOL = 1e-12
PERSIST_SIGMA_RTOL = 1e-7
PERSIST_ANGLE_TOL = 1e-6


@dataclass(frozen=True)
class StagnationReport:
    m: int
    K: complex
    em_y: complex
    sigma_min_H: float
    gap: float
    gap_identity_error: float
    gap_rhs_imag: float
    finite_pairs_em_u: tuple
    scale_K: float
    scale_y: float
    scale_H: float
    k_zero: bool
    y_zero: bool
    h_singular: bool
    u_zero: bool
    stagnated: bool
    predicates_consistent: bool
    applicable: bool = True
    gap_check_skipped: bool = False


@dataclass(frozen=True)
class CoincidenceResult:
    pair_index: Optional[int]
    K_scale: complex
    condition_error: float
    vector_error: float
    scale: float
    s2_component: Optional[np.ndarray] = None
    xi: Optional[complex] = None
    stagnated_form: bool = False
    extended: bool = False


@dataclass(frozen=True)
class PersistenceVerdict:
    """Outcome of matching the pairs of step ``m`` against step ``m-1``.

    ``matches`` holds ``(i, j, dsigma, angle)`` with ``i`` indexing the
    finite nonzero pairs of step ``m`` and ``j`` those of step ``m-1``.
    """

    applicable: bool
    vacuous: bool
    matches: tuple
    max_sigma_mismatch: float
    max_angle: float
    persisted: bool
    implies_stagnation: bool
    unmatched: int = 0


@dataclass
class StepAnalysis:
    m: int
    pairs: list
    report: StagnationReport
    coincidence: list = field(default_factory=list)
    persistence: Optional[PersistenceVerdict] = None


def _check_m(state, m, lo=1):
    if not lo <= m <= state.steps:
        raise IndexError(f"step {m} outside {lo}..{state.steps}")


def _hnorm(state, m):
    return float(np.linalg.norm(state.arnoldi.htilde(m)))


def compute_K(state: GmresState, m) -> complex:
    """``<A v_m, r_{m-1}>`` (conjugate-linear in the first slot)."""
    _check_m(state, m)
    arn = state.arnoldi
    Av = np.asarray(arn.apply_A(arn.basis[:, m - 1]), dtype=complex)
    return complex(np.vdot(Av, materialize_residual(state, m - 1)))


def _require_independent(state, m, thr):
    Ht = state.arnoldi.htilde(m)
    smin = np.linalg.svd(Ht, compute_uv=False)[-1]
    if smin <= thr.eps_z * np.linalg.norm(Ht):
        raise PreconditionViolated(f"columns of A V_{m} are numerically dependent (sigma_min={smin:.3e})")


def gap_identity_check(state: GmresState, m, thr: Thresholds = DEFAULT) -> float:
    """``| (||r_{m-1}||^2 - ||r_m||^2) - K conj(e_m^H y) |``.

    For real data this is the familiar ``gap = K e_m^H y``; the imaginary
    part of the unconjugated product is kept in the stagnation report.
    """
    _check_m(state, m)
    _require_independent(state, m, thr)
    rh = state.resnorm_history
    gap = rh[m - 1] ** 2 - rh[m] ** 2
    # over C the identity carries a conjugate: r_0^H (r_{m-1} - r_m) = K conj(e_m^H y)
    return float(abs(gap - compute_K(state, m) * np.conj(state.y(m)[-1])))


def residual_difference_identity(state: GmresState, m, thr: Thresholds = DEFAULT) -> float:
    """``||(r_{m-1} - r_m) - K A V_m (V_m^H A^H A V_m)^{-1} e_m||``."""
    _check_m(state, m)
    _require_independent(state, m, thr)
    AV = apply_AV(state, m)
    e = np.zeros(m, dtype=complex)
    e[-1] = 1
    w = np.linalg.solve(AV.conj().T @ AV, e)
    lhs = materialize_residual(state, m - 1) - materialize_residual(state, m)
    return float(np.linalg.norm(lhs - compute_K(state, m) * (AV @ w)))


def stagnation_report(state: GmresState, pairs, m, thr: Thresholds = DEFAULT) -> StagnationReport:
    """Evaluate the four stagnation indicators at step ``m``.

    ``predicates_consistent`` is true when the indicators ``K``,
    ``e_m^H y``, ``sigma_min(H_m)`` and ``e_m^H u`` are either all zero or
    all nonzero under their thresholds. When ``r_{m-1}`` is already below
    ``1e-12 * beta`` the report is marked not applicable.
    """
    _check_m(state, m)
    arn = state.arnoldi
    beta = arn.beta
    rh = state.resnorm_history
    y = state.y(m)
    em_y = complex(y[-1])
    hn = _hnorm(state, m)
    K = compute_K(state, m)
    gap = float(rh[m - 1] ** 2 - rh[m] ** 2)
    sigma_min_H = float(np.linalg.svd(arn.H(m), compute_uv=False)[-1])

    try:
        gap_err = gap_identity_check(state, m, thr)
        skipped = False
    except PreconditionViolated:
        gap_err, skipped = math.nan, True

    em_u = tuple(complex(p.u_last) for p in pairs if p.is_finite)
    scale_K = hn * rh[m - 1]
    scale_y = float(np.linalg.norm(y)) + beta / hn
    k_zero = abs(K) <= thr.eps_z * scale_K
    y_zero = abs(em_y) <= thr.eps_z * scale_y
    h_singular = sigma_min_H <= thr.eps_z * hn
    u_zero = max((abs(v) for v in em_u), default=0.0) <= thr.eps_z
    flags = {k_zero, y_zero, h_singular, u_zero}
    return StagnationReport(
        m=m,
        K=K,
        em_y=em_y,
        sigma_min_H=sigma_min_H,
        gap=gap,
        gap_identity_error=gap_err,
        gap_rhs_imag=float((K * em_y).imag),
        finite_pairs_em_u=em_u,
        scale_K=float(scale_K),
        scale_y=float(scale_y),
        scale_H=hn,
        k_zero=bool(k_zero),
        y_zero=bool(y_zero),
        h_singular=bool(h_singular),
        u_zero=bool(u_zero),
        stagnated=bool(abs(gap) <= thr.eps_s * beta**2),
        predicates_consistent=len(flags) == 1,
        applicable=bool(rh[m - 1] >= CONVERGED_RTOL * beta),
        gap_check_skipped=skipped,
    )


def coincidence_check(state: GmresState, pair: HarmonicPair, m, thr: Thresholds = DEFAULT,
                      k_scale=None, index=None) -> CoincidenceResult:
    """Compare ``A V_m u - sigma V_m u`` with ``K_scale (b - A V_m y)``.

    ``K_scale`` defaults to ``-(e_m^H u) / (e_m^H y)``; pass it explicitly to
    test a given scale against a (possibly perturbed) pair. Stagnated steps
    are handed to :func:`stagnation_coincidence_check`.
    """
    if not pair.is_finite:
        raise InfinitePairError("coincidence is undefined for an infinite pair")
    _check_m(state, m)
    rh = state.resnorm_history
    beta = state.beta
    y = state.y(m)
    em_y = complex(y[-1])
    if abs(rh[m - 1] ** 2 - rh[m] ** 2) <= thr.eps_s * beta**2:
        return stagnation_coincidence_check(state, pair, m, thr, index=index)
    if abs(em_y) <= thr.eps_z * (np.linalg.norm(y) + beta / _hnorm(state, m)):
        raise InconsistentStateError(f"e_m^H y = {em_y:.3e} vanishes at step {m} without stagnation")
    u_last = complex(pair.u[-1])
    if k_scale is None:
        k_scale = -u_last / em_y
    hr = harmonic_residual_vector(state.arnoldi, pair, m)
    r = materialize_residual(state, m)
    return CoincidenceResult(
        pair_index=index,
        K_scale=complex(k_scale),
        condition_error=float(abs(u_last + k_scale * em_y)),
        vector_error=float(np.linalg.norm(hr - k_scale * r)),
        scale=_hnorm(state, m) + abs(pair.value),
    )


def stagnation_coincidence_check(state: GmresState, pair: HarmonicPair, m, thr: Thresholds = DEFAULT,
                                 index=None) -> CoincidenceResult:
    """Residual of ``A V_m u - sigma V_m u = r_m + xi V_m s_2`` with
    ``H_m^H s_2 = 0``.

    ``s_2`` is the left singular vector of ``H_m`` for its smallest singular
    value and ``xi`` the least squares coefficient. If more than one
    singular value lies below ``eps_z * ||Htilde_m||_F`` the whole numerical
    null space is used and the result is marked ``extended``.
    """
    if not pair.is_finite:
        raise InfinitePairError("coincidence is undefined for an infinite pair")
    _check_m(state, m)
    arn = state.arnoldi
    H = arn.H(m)
    hn = _hnorm(state, m)
    U, s, _ = np.linalg.svd(H)
    k = max(1, int(np.count_nonzero(s <= thr.eps_z * hn)))
    N = U[:, m - k:]
    d = harmonic_residual_vector(arn, pair, m) - materialize_residual(state, m)
    W = arn.V(m) @ N
    xi, *_ = np.linalg.lstsq(W, d, rcond=None)
    y = state.y(m)
    return CoincidenceResult(
        pair_index=index,
        K_scale=1 + 0j,
        condition_error=float(abs(pair.u[-1] + y[-1])),
        vector_error=float(np.linalg.norm(d - W @ xi)),
        scale=hn + abs(pair.value) + state.beta,
        s2_component=N[:, 0] if k == 1 else N,
        xi=complex(xi[0]) if k == 1 else None,
        stagnated_form=True,
        extended=k > 1,
    )


def persistence_check(pairs_m, pairs_prev, stagnated, eps_z=DEFAULT.eps_z) -> PersistenceVerdict:
    """Match the finite nonzero pairs of step ``m`` to those of step ``m-1``.

    Each ``(sigma, u)`` of step ``m`` is compared with ``(sigma', u')`` by
    ``|sigma - sigma'| / (1 + |sigma|)`` and by the angle between the prefix
    ``u[:m-1]`` and ``u'``; an optimal assignment resolves clusters.

    ``persisted`` means every pair found a partner within tolerance;
    ``implies_stagnation`` is the converse test (all ``|e_m^H u| <= eps_z``
    and all matched), to be cross-checked against the stagnation verdict.
    """
    cur = [p for p in pairs_m if p.is_finite and p.value != 0]
    prev = [p for p in pairs_prev if p.is_finite]
    if not cur:
        return PersistenceVerdict(bool(stagnated), True, (), 0.0, 0.0, True, bool(stagnated))
    big = 1e6
    dsig = np.full((len(cur), max(len(prev), 1)), np.inf)
    ang = np.full_like(dsig, np.inf)
    for i, p in enumerate(cur):
        prefix = p.u[:-1]
        for j, q in enumerate(prev):
            dsig[i, j] = abs(p.value - q.value) / (1 + abs(p.value))
            ang[i, j] = vector_angle(prefix, q.u) if np.linalg.norm(prefix) > 0 else np.pi / 2
    cost = np.where(np.isfinite(dsig), dsig + ang, big)
    rows, cols = linear_sum_assignment(cost)
    matches = []
    for i, j in zip(rows, cols):
        if j < len(prev):
            matches.append((int(i), int(j), float(dsig[i, j]), float(ang[i, j])))
    unmatched = len(cur) - len(matches)
    ok = [d <= PERSIST_SIGMA_RTOL and a <= PERSIST_ANGLE_TOL for _, _, d, a in matches]
    persisted = unmatched == 0 and all(ok)
    small_u = all(abs(p.u_last) <= eps_z for p in cur)
    return PersistenceVerdict(
        applicable=bool(stagnated),
        vacuous=False,
        matches=tuple(matches),
        max_sigma_mismatch=max((d for _, _, d, _ in matches), default=math.inf),
        max_angle=max((a for _, _, _, a in matches), default=math.inf),
        persisted=persisted,
        implies_stagnation=bool(persisted and small_u),
        unmatched=unmatched,
    )


def analyze_run(state: GmresState, thr: Thresholds = DEFAULT, coincidence=True) -> list:
    """Harmonic pairs, stagnation report, coincidence results and
    persistence verdict for every completed step of ``state``."""
    out = []
    prev_pairs = None
    for m in range(1, state.steps + 1):
        pairs = harmonic_pairs(state.arnoldi, m, eps_z=thr.eps_z)
        rep = stagnation_report(state, pairs, m, thr)
        step = StepAnalysis(m=m, pairs=pairs, report=rep)
        if coincidence and rep.applicable:
            for i, p in enumerate(pairs):
                if not p.is_finite:
                    continue
                if rep.stagnated:
                    step.coincidence.append(stagnation_coincidence_check(state, p, m, thr, index=i))
                elif not rep.y_zero:
                    step.coincidence.append(coincidence_check(state, p, m, thr, index=i))
        if prev_pairs is not None:
            step.persistence = persistence_check(pairs, prev_pairs, rep.stagnated, thr.eps_z)
        out.append(step)
        prev_pairs = pairs
    return out
