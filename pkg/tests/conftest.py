import numpy as np
import pytest
from hypothesis import settings

from multiphase.fock import ProbeState, enumerate_configs

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def record():
    """Log an acceptance criterion so the run ends with one line per criterion."""

    def _record(number, title, ok, detail=""):
        _ACCEPTANCE.append((number, title, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}  {detail}")


def random_probe(rng, n_photons, d, max_terms=None):
    """Random complex superposition over a random subset of the sector."""
    configs = enumerate_configs(n_photons, d)
    k = len(configs) if max_terms is None else min(max_terms, len(configs))
    size = rng.integers(1, k + 1)
    pick = rng.choice(len(configs), size=size, replace=False)
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    amps /= np.linalg.norm(amps)
    return ProbeState(np.array([configs[i] for i in pick]), amps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
