import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ergokit import CyclicConfig, TorusParams, classify, sample_circular_beta, sample_poisson, torus_spectrum  # noqa: E402

D_BIG = 2048
SEEDS = range(20)
BETAS = {"coe": 1, "cue": 2, "cse": 4}


class EnsembleCache:
    """Lazily sampled d=2048 realizations and their reports, shared by all modules."""

    def __init__(self):
        self._spec = {}
        self._rep = {}

    def spectrum(self, name, seed, d=D_BIG):
        key = (name, seed, d)
        if key not in self._spec:
            if name == "poisson":
                self._spec[key] = sample_poisson(d, seed)
            else:
                self._spec[key] = sample_circular_beta(d, BETAS[name], seed)
        return self._spec[key]

    def report(self, name, seed, d=D_BIG, thresholds=(10.0, 10.0, 10.0)):
        key = (name, seed, d, tuple(thresholds))
        if key not in self._rep:
            s = self.spectrum(name, seed, d)
            self._rep[key] = classify(s, CyclicConfig.for_spectrum(s), thresholds, keep_series=True)
        return self._rep[key]


@pytest.fixture(scope="session")
def ensembles():
    return EnsembleCache()


@pytest.fixture(scope="session")
def torus_irrational():
    return torus_spectrum(TorusParams(1.0, math.sqrt(2), 40, 40))


@pytest.fixture(scope="session")
def torus_rational():
    return torus_spectrum(TorusParams(1.0, 2.0, 50, 50))


# (criterion number, line) pairs filled in by the acceptance tests
ACCEPTANCE: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(ACCEPTANCE, key=lambda r: r[0]):
            terminalreporter.write_line(line)
