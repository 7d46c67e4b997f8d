"""Run every invariant and theorem check on problem instances.

Used by ``staglab verify`` so the checks can run in CI without pytest.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import instances
from .diagnostics import (
    analyze_run,
    coincidence_check,
    residual_difference_identity,
)
from .errors import ConditioningError, PreconditionViolated
from .gmres import apply_AV, materialize_residual, nested_ls_consistency, normal_equation_residual, run_gmres
from .harmonic import match_multisets, pencil_residual, residual_polynomial_roots
from .thresholds import DEFAULT, Thresholds

__all__ = ["InstanceResult", "verify_instance", "builtin_instances", "sweep_instances", "run_suite"]


@dataclass
class InstanceResult:
    name: str
    checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, cond, msg):
        self.checks += 1
        if not cond:
            self.failures.append(msg)


def verify_instance(inst, thr: Thresholds = DEFAULT, name=None, perturb=True) -> InstanceResult:
    """Solve ``inst`` with instrumented GMRES and evaluate all checks."""
    res = InstanceResult(name or _name(inst))
    state, _, status = run_gmres(inst.operator(), inst.rhs, rtol=1e-10)
    arn = state.arnoldi
    beta = state.beta
    normA = float(np.linalg.norm(inst.matrix))
    rh = state.resnorm_history

    res.check(all(b <= a * (1 + 1e-12) for a, b in zip(rh, rh[1:])), "residual norms increase")
    m_all = state.steps
    V = arn.basis
    res.check(np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])) <= 1e-10, "Arnoldi basis not orthonormal")
    cols = V.shape[1]
    AV = apply_AV(state, m_all)
    fact = np.linalg.norm(AV - V @ arn.hessenberg_ext[:cols])
    res.check(fact <= 1e-10 * max(normA, 1.0), f"Arnoldi relation residual {fact:.2e}")

    analysis = analyze_run(state, thr)
    for step in analysis:
        m, rep = step.m, step.report
        r_m = materialize_residual(state, m)
        res.check(abs(np.linalg.norm(r_m) - rh[m]) <= 1e-9 * beta, f"m={m}: Givens residual norm mismatch")
        res.check(abs(np.vdot(r_m, arn.b) - rh[m] ** 2) <= 1e-9 * beta**2, f"m={m}: r_m^H r_0 != ||r_m||^2")
        res.check(normal_equation_residual(state, m) <= 1e-9 * beta * np.linalg.norm(arn.htilde(m)),
                  f"m={m}: normal equations violated")
        if not rep.applicable:
            continue
        res.check(rep.predicates_consistent, f"m={m}: stagnation indicators disagree")
        if not rep.gap_check_skipped:
            res.check(rep.gap_identity_error <= 1e-8 * beta**2,
                      f"m={m}: gap identity error {rep.gap_identity_error:.2e}")
            try:
                err = residual_difference_identity(state, m, thr)
                res.check(err <= 1e-8 * beta, f"m={m}: residual difference identity error {err:.2e}")
            except PreconditionViolated:
                pass
        if m >= 2:
            y_prev = state.y(m - 1)
            d = nested_ls_consistency(state, m)
            res.check(d <= 1e-8 * np.linalg.norm(y_prev) + 1e-12, f"m={m}: nested least squares {d:.2e}")
        hn2 = np.linalg.norm(arn.htilde(m)) ** 2
        for i, p in enumerate(step.pairs):
            pr = pencil_residual(arn, p, m)
            res.check(pr <= thr.eps_eig * hn2, f"m={m} pair {i}: pencil residual {pr:.2e}")
            if p.is_finite:
                orth = np.max(np.abs(apply_AV(state, m).conj().T @ p.harmonic_residual), initial=0.0)
                res.check(orth <= 1e-8 * max(normA, 1.0), f"m={m} pair {i}: harmonic residual not orthogonal")
        for c in step.coincidence:
            if c.stagnated_form:
                res.check(c.vector_error <= 1e-7 * c.scale,
                          f"m={m} pair {c.pair_index}: stagnation coincidence {c.vector_error:.2e}")
            else:
                res.check((c.condition_error <= 1e-8) == (c.vector_error <= 1e-8 * c.scale),
                          f"m={m} pair {c.pair_index}: coincidence biconditional fails")
        if perturb and not rep.stagnated:
            p = next((q for q in step.pairs if q.is_finite), None)
            if p is not None:
                base = coincidence_check(state, p, m, thr)
                u = p.u.copy()
                u[-1] += 0.1
                bad = coincidence_check(state, p.with_vector(u), m, thr, k_scale=base.K_scale)
                res.check(bad.condition_error > 1e-3 and bad.vector_error > 1e-3,
                          f"m={m}: perturbed pair not detected")
        v = step.persistence
        if v is not None and not v.vacuous:
            if rep.stagnated:
                res.check(v.persisted, f"m={m}: harmonic pairs did not persist under stagnation")
            res.check(v.implies_stagnation == rep.stagnated, f"m={m}: persistence converse disagrees")
        if 1 <= m <= 5 and not rep.stagnated:
            try:
                roots = residual_polynomial_roots(state, m)
            except ConditioningError:
                continue
            finite = [p.value for p in step.pairs if p.is_finite]
            fr = roots[np.isfinite(roots)]
            res.check(match_multisets(finite, fr) <= 1e-6, f"m={m}: residual polynomial roots mismatch")

    if inst.expected_stagnation_steps is not None:
        got = {s.m for s in analysis if s.report.stagnated}
        res.check(got == set(inst.expected_stagnation_steps),
                  f"stagnated steps {sorted(got)} != expected {sorted(inst.expected_stagnation_steps)}")
    return res


def _name(inst):
    p = inst.provenance
    extras = ",".join(f"{k}={p[k]}" for k in ("n", "seed", "stagnation_steps") if k in p)
    return f"{p.get('generator', 'instance')}({extras})"


def builtin_instances():
    yield instances.paper_example()
    for n in range(2, 9):
        yield instances.cyclic_shift_instance(n)
    for steps in ({3}, {5}, {3, 4}):
        for seed in range(5):
            yield instances.planted_singular_hessenberg(8, steps, seed)
    for seed in range(5):
        yield instances.step_one_stagnation(6, seed)


def sweep_instances(count, n):
    for seed in range(count):
        yield instances.random_instance(n, seed)


def _verify_args(args):
    inst, thr = args
    return verify_instance(inst, thr)


def run_suite(insts, thr: Thresholds = DEFAULT, jobs=1):
    """Verify all instances, optionally in parallel processes."""
    insts = list(insts)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_verify_args, [(i, thr) for i in insts]))
    return [verify_instance(i, thr) for i in insts]
