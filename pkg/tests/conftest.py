import numpy as np
import pytest

from radcode import (
    ScalarizationParams,
    SolverConfig,
    default_scenario,
    generalized_barker_code,
    model_matrices,
    p3_code,
    relax_and_select,
)


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def mats(scenario):
    return model_matrices(scenario)


@pytest.fixture(scope="session")
def p3(scenario):
    return p3_code(scenario.pulses)


class SolveCache:
    """Session-wide cache of synthesis runs keyed by (beta, zeta, reference),
    so the many cross-run checks pay for each solve once."""

    def __init__(self, scenario, mats):
        self.scenario = scenario
        self.mats = mats
        self._results = {}

    def result(self, beta, zeta, reference="p3"):
        key = (float(beta), float(zeta), reference)
        if key not in self._results:
            ref = (p3_code(self.scenario.pulses) if reference == "p3"
                   else generalized_barker_code(self.scenario.pulses))
            config = SolverConfig(
                params=ScalarizationParams(beta=float(beta), zeta=float(zeta)),
                reference=ref)
            self._results[key] = relax_and_select(config, self.mats, self.scenario)
        return self._results[key]


@pytest.fixture(scope="session")
def solves(scenario, mats):
    return SolveCache(scenario, mats)


def random_unit(rng: np.random.Generator, m: int) -> np.ndarray:
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return v / np.linalg.norm(v)


def random_feasible(rng: np.random.Generator, c0: np.ndarray, zeta: float) -> np.ndarray:
    """Random unit-energy vector satisfying 2 Re{c0^H c} >= 2 - zeta."""
    t_min = max(-1.0, (2.0 - zeta) / 2.0)
    t = rng.uniform(t_min, 1.0)
    y_cap = np.sqrt(max(1.0 - t * t, 0.0))
    y = rng.uniform(-y_cap, y_cap)
    g = rng.standard_normal(c0.size) + 1j * rng.standard_normal(c0.size)
    w = g - c0 * np.vdot(c0, g)
    norm_w = np.linalg.norm(w)
    radial = np.sqrt(max(1.0 - t * t - y * y, 0.0))
    c = (t + 1j * y) * c0
    if norm_w > 1e-12:
        c = c + radial * w / norm_w
    return c / np.linalg.norm(c)
