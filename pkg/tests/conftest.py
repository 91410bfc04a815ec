import time

import numpy as np
import pytest

from cskor.boundary import build_curve
from cskor.distributions import Arcsine, Cauchy, HypSecant, Uniform
from cskor.embedding import build_map

@pytest.fixture(scope="session")
def uniform():
    return Uniform(-1.0, 1.0)


@pytest.fixture(scope="session")
def arcsine():
    return Arcsine(-1.0, 1.0)


@pytest.fixture(scope="session")
def hypsech():
    return HypSecant()


@pytest.fixture(scope="session")
def cauchy():
    return Cauchy(0.0, 1.0)


@pytest.fixture(scope="session")
def uniform_map(uniform):
    return build_map(uniform, 4096)


@pytest.fixture(scope="session")
def arcsine_map(arcsine):
    return build_map(arcsine, 4096)


@pytest.fixture(scope="session")
def hypsech_map(hypsech):
    return build_map(hypsech, 4096)


@pytest.fixture(scope="session")
def cauchy_map(cauchy):
    return build_map(cauchy, 4096, variant="formal_cauchy")


@pytest.fixture(scope="session")
def gross_arcsine_map(arcsine):
    return build_map(arcsine, 4096, variant="gross")


@pytest.fixture(scope="session")
def catalog_maps(uniform_map, arcsine_map, hypsech_map, cauchy_map, gross_arcsine_map):
    return {
        "uniform_catenary": uniform_map,
        "arcsine_lower": arcsine_map,
        "hypsech_parabola": hypsech_map,
        "cauchy_halfplane": cauchy_map,
        "arcsine_gross_disc": gross_arcsine_map,
    }


@pytest.fixture(scope="session")
def uniform_curve(uniform_map):
    return build_curve(uniform_map)


@pytest.fixture(scope="session")
def arcsine_curve(arcsine_map):
    return build_curve(arcsine_map)


@pytest.fixture(scope="session")
def hypsech_curve(hypsech_map):
    return build_curve(hypsech_map)


@pytest.fixture(scope="session")
def gross_arcsine_curve(gross_arcsine_map):
    return build_curve(gross_arcsine_map)


@pytest.fixture(scope="session")
def disk_points():
    rng = np.random.default_rng(20240611)
    r = 0.9 * np.sqrt(rng.uniform(size=1000))
    return r * np.exp(2j * np.pi * rng.uniform(size=1000))


class MonteCarloRuns:
    """Lazily computed, session-cached simulation reports shared across test modules."""

    def __init__(self, uniform_curve):
        from cskor.distributions import Atomic, Uniform
        from cskor.simulate import DomainOracle

        self.uniform = Uniform(-1.0, 1.0)
        self.two_point = Atomic([-1.0, 1.0], [0.5, 0.5])
        self.catenary_oracle = DomainOracle.from_curve(uniform_curve)
        self.strip_oracle = DomainOracle.from_atomic(self.two_point)
        self._cache = {}
        self.elapsed = {}

    def _run(self, key, d, oracle, n, seed, dt_max):
        from cskor.simulate import VerifyConfig, run_verification

        k = (key, n, seed, dt_max)
        if k not in self._cache:
            t0 = time.perf_counter()
            rep = run_verification(d, oracle, n, VerifyConfig(seed=seed, dt_max=dt_max))
            self._cache[k] = rep
            self.elapsed[k] = time.perf_counter() - t0
        return self._cache[k]

    def catenary(self, seed, n=100_000, dt_max=1e-4):
        return self._run("catenary", self.uniform, self.catenary_oracle, n, seed, dt_max)

    def strip(self, seed, n=100_000, dt_max=1e-4):
        return self._run("strip", self.two_point, self.strip_oracle, n, seed, dt_max)


@pytest.fixture(scope="session")
def mc(uniform_curve):
    return MonteCarloRuns(uniform_curve)


# one verdict line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict():
    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
