import logging
import pytest
from ftl.geometry import from_preset
from ftl.schemas import CounterexampleParams
from . import fixtures


class FailureLogger(logging.Handler):
    """counts per-point warnings raised by sweeps"""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.count = 0

    def reset(self):
        self.count = 0

    def emit(self, record):
        self.count += 1
        print(f"==== WARNING #{self.count} ====\n", record.getMessage())


failure_logger = FailureLogger()
logging.getLogger("ftl").addHandler(failure_logger)


@pytest.fixture(scope="session")
def sphere():
    return from_preset("sphere")


@pytest.fixture(scope="session")
def egg2():
    domain = from_preset("egg-m2")
    domain.table(4)
    return domain


@pytest.fixture(scope="session")
def egg3():
    return from_preset("egg-m3")


@pytest.fixture(scope="session")
def quartic():
    return from_preset("quartic")


@pytest.fixture(scope="session")
def small_params():
    return fixtures.small_params()


@pytest.fixture(scope="session")
def egg2_stages(egg2, small_params):
    """two fitted stages on egg-m2, shared by the counterexample tests"""
    return fixtures.fitted_stages(egg2, small_params)


@pytest.fixture
def failures():
    failure_logger.reset()
    return failure_logger


@pytest.fixture
def default_params():
    return CounterexampleParams()
