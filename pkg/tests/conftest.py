import numpy as np
import pytest

from msmix.grid import Grid1D
from msmix.mixture import AngularKernel, Mixture, PhysicalConstants, Species


@pytest.fixture
def binary():
    """Masses 1 and 2 with a constant kernel of unit L1 norm."""
    return Mixture.uniform([1.0, 2.0], AngularKernel.constant(0.5))


@pytest.fixture
def ternary():
    sp = (Species("a", 1.0), Species("b", 2.0), Species("c", 4.0))
    kernels = {
        (0, 1): AngularKernel.constant(0.5),
        (0, 2): AngularKernel.polynomial([0.3, 0.0, 0.6]),
        (1, 2): AngularKernel.polynomial([0.2, 0.0, 0.0, 0.0, 1.0]),
    }
    return Mixture(sp, kernels, PhysicalConstants(1.0))


@pytest.fixture
def grid64():
    return Grid1D(0.0, 1.0, 64)


def random_mixture(rng, n=None):
    n = n or int(rng.integers(2, 5))
    masses = rng.uniform(0.5, 5.0, n)
    kernels = {}
    for i in range(n):
        for j in range(i, n):
            a0, a2, a4 = rng.uniform(0.1, 1.0, 3)
            kernels[(i, j)] = AngularKernel.polynomial([a0, 0.0, a2, 0.0, a4])
    species = tuple(Species(f"s{i}", float(m)) for i, m in enumerate(masses))
    return Mixture(species, kernels)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for an acceptance criterion; printed in the terminal summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, passed: bool, detail: str):
        store[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
