import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qdvb.phonon_bath import BathArtifacts, PhononBath

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def art5():
    return BathArtifacts.build(PhononBath(temperature=5.0))


@pytest.fixture(scope="session")
def art20():
    return BathArtifacts.build(PhononBath(temperature=20.0))


@pytest.fixture(scope="session")
def art_off():
    return BathArtifacts.build(PhononBath(enabled=False))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE[key]
        tr.write_line(f"{key:5s} {'PASS' if ok else 'FAIL'}  {detail}")
