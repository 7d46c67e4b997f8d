"""Run configuration and JSON/CSV serialization of per-iteration diagnostics.

Complex scalars are written as ``{"re": ..., "im": ...}`` objects, floats
with Python's shortest round-trip representation, and non-finite or skipped
values as ``null``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .thresholds import Thresholds

__all__ = [
    "SCHEMA",
    "CSV_HEADER",
    "RunConfig",
    "build_report",
    "write_report",
    "read_report",
    "recompute_flags",
]

SCHEMA = "staglab-report/1"
CSV_HEADER = [
    "m", "resnorm", "gap", "K_re", "K_im", "em_y_re", "em_y_im",
    "sigma_min_H", "scale_K", "scale_y", "scale_H",
    "stagnated", "predicates_consistent", "sigmas",
]


@dataclass
class RunConfig:
    matrix_source: str
    rhs_source: str = "e1"
    max_iter: Optional[int] = None
    conv_tol: float = 1e-10
    report_path: Optional[str] = None
    emit_harmonic: bool = True
    emit_vectors: bool = False
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = self.thresholds.as_dict()
        return d


def _f(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _c(z):
    z = complex(z)
    return {"re": _f(z.real), "im": _f(z.imag)}


def _vec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _harmonic_entry(p):
    if p.is_finite:
        return {"sigma_re": _f(p.value.real), "sigma_im": _f(p.value.imag),
                "is_infinite": False, "abs_u_last": _f(abs(p.u_last))}
    return {"sigma_re": None, "sigma_im": None, "is_infinite": True, "abs_u_last": _f(abs(p.u_last))}


def _coincidence_entry(c):
    return {
        "pair_index": c.pair_index,
        "K_scale": _c(c.K_scale),
        "condition_error": _f(c.condition_error),
        "vector_error": _f(c.vector_error),
        "scale": _f(c.scale),
        "stagnated_form": c.stagnated_form,
        "extended": c.extended,
        "xi": None if c.xi is None else _c(c.xi),
    }


def _persistence_entry(v):
    if v is None:
        return None
    return {
        "applicable": v.applicable,
        "vacuous": v.vacuous,
        "persisted": v.persisted,
        "implies_stagnation": v.implies_stagnation,
        "max_sigma_mismatch": _f(v.max_sigma_mismatch),
        "max_angle": _f(v.max_angle),
        "unmatched": v.unmatched,
    }


def build_report(config: RunConfig, state, analysis, status, source_info=None) -> dict:
    """Assemble the JSON-ready report dictionary for one solve."""
    from .gmres import materialize_residual

    iterations = []
    rh = state.resnorm_history
    for step in analysis:
        r = step.report
        it = {
            "m": r.m,
            "resnorm": _f(rh[r.m]),
            "gap": _f(r.gap),
            "K": _c(r.K),
            "em_y": _c(r.em_y),
            "sigma_min_H": _f(r.sigma_min_H),
            "scale_K": _f(r.scale_K),
            "scale_y": _f(r.scale_y),
            "scale_H": _f(r.scale_H),
            "gap_identity_error": _f(r.gap_identity_error),
            "gap_rhs_imag": _f(r.gap_rhs_imag),
            "finite_pairs_abs_em_u": [_f(abs(v)) for v in r.finite_pairs_em_u],
            "stagnated": r.stagnated,
            "predicates_consistent": r.predicates_consistent,
            "applicable": r.applicable,
            "coincidence": [_coincidence_entry(c) for c in step.coincidence],
            "persistence": _persistence_entry(step.persistence),
        }
        if config.emit_harmonic:
            it["harmonic"] = [_harmonic_entry(p) for p in step.pairs]
        if config.emit_vectors:
            it["residual_vector"] = _vec(materialize_residual(state, r.m))
            it["y"] = _vec(state.y(r.m))
        iterations.append(it)
    return {
        "schema": SCHEMA,
        "config": config.as_dict(),
        "source": source_info or {},
        "n": state.arnoldi.operator_dim,
        "beta": _f(state.beta),
        "status": status,
        "resnorm_history": [_f(x) for x in rh],
        "iterations": iterations,
    }


def _csv_num(x):
    return "" if x is None else repr(x)


def _sigma_summary(it):
    parts = []
    for h in it.get("harmonic", []):
        parts.append("inf" if h["is_infinite"] else f"{h['sigma_re']!r}:{h['sigma_im']!r}")
    return ";".join(parts)


def write_report(report: dict, path, fmt="json") -> None:
    """Write ``report`` as a JSON document or as CSV with one row per
    iteration (header :data:`CSV_HEADER`)."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report, indent=1) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for it in report["iterations"]:
                w.writerow([
                    it["m"], _csv_num(it["resnorm"]), _csv_num(it["gap"]),
                    _csv_num(it["K"]["re"]), _csv_num(it["K"]["im"]),
                    _csv_num(it["em_y"]["re"]), _csv_num(it["em_y"]["im"]),
                    _csv_num(it["sigma_min_H"]), _csv_num(it["scale_K"]),
                    _csv_num(it["scale_y"]), _csv_num(it["scale_H"]),
                    int(it["stagnated"]), int(it["predicates_consistent"]),
                    _sigma_summary(it),
                ])
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())


def recompute_flags(report: dict, iteration: dict) -> dict:
    """Re-derive ``stagnated`` and ``predicates_consistent`` of one
    serialized iteration from its scalars and the declared thresholds."""
    thr = report["config"]["thresholds"]
    eps_z, eps_s = thr["eps_z"], thr["eps_s"]
    it = iteration
    k = abs(complex(it["K"]["re"], it["K"]["im"])) <= eps_z * it["scale_K"]
    y = abs(complex(it["em_y"]["re"], it["em_y"]["im"])) <= eps_z * it["scale_y"]
    h = it["sigma_min_H"] <= eps_z * it["scale_H"]
    u = max(it["finite_pairs_abs_em_u"], default=0.0) <= eps_z
    return {
        "stagnated": abs(it["gap"]) <= eps_s * report["beta"] ** 2,
        "predicates_consistent": len({k, y, h, u}) == 1,
    }
