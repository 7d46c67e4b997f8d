import numpy as np
import pytest

from staglab import instances
from staglab.gmres import run_gmres

SQRT3 = np.sqrt(3.0)


@pytest.fixture
def example_run():
    inst = instances.paper_example()
    state, records, status = run_gmres(inst.operator(), inst.rhs)
    return inst, state, records, status


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hessenberg(rng, rows, cols):
    H = crandn(rng, rows, cols)
    return np.triu(H, -1)
