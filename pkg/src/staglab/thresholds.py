"""Numerical zero thresholds shared by the kernels and the diagnostics."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

EPS_Z = 1e-10
EPS_S = 1e-10
EPS_EIG = 1e-9
EPS_B = 1e-12

ENV_VARS = {
    "eps_z": "STAGLAB_EPS_Z",
    "eps_s": "STAGLAB_EPS_S",
    "eps_eig": "STAGLAB_EPS_EIG",
}


@dataclass(frozen=True)
class Thresholds:
    """Floating point surrogates for exact zero tests.

    ``eps_z`` is a relative zero for indicators and for the infinity test of
    pencil eigenvalues, ``eps_s`` the relative stagnation tolerance on the
    squared residual gap (scaled by ``beta**2``), ``eps_eig`` the relative
    residual bound accepted for pencil eigenpairs.
    """

    eps_z: float = EPS_Z
    eps_s: float = EPS_S
    eps_eig: float = EPS_EIG

    def __post_init__(self):
        for name in ("eps_z", "eps_s", "eps_eig"):
            if not getattr(self, name) > 0:
                raise ValueError(f"threshold {name} must be positive")

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "Thresholds":
        """Defaults, then ``STAGLAB_EPS_*`` variables, then explicit
        keyword overrides (``None`` values are ignored)."""
        environ = os.environ if environ is None else environ
        values = {}
        for field, var in ENV_VARS.items():
            if var in environ:
                values[field] = float(environ[var])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return replace(cls(), **values)

    def as_dict(self) -> dict:
        return {"eps_z": self.eps_z, "eps_s": self.eps_s, "eps_eig": self.eps_eig}


DEFAULT = Thresholds()
