import numpy as np
import pytest

from eivclt.model import IdentifiabilityConfig
from eivclt.simulate import DesignFamily, ErrorFamily, Scenario, XiFamily

GAMMA = [[0.5, 0.1], [0.1, 0.4]]
# variant A1 assumes uncorrelated errors: same variances, covariance dropped
GAMMA_UNCORRELATED = [[0.5, 0.0], [0.0, 0.4]]


def structural_scenario(variant=3, n=2000, xi=None, gamma=None):
    if gamma is None:
        gamma = GAMMA_UNCORRELATED if int(variant) == 1 else GAMMA
    return Scenario(
        model="structural",
        xi=xi or XiFamily.normal(1.0, 1.0),
        errors=ErrorFamily("gaussian_correlated", gamma),
        beta=2.0,
        alpha=1.0,
        n=n,
        identifiability=IdentifiabilityConfig.from_gamma(variant, gamma),
    )


def functional_scenario(design, variant=3, n=2000):
    return Scenario(
        model="functional",
        xi=design,
        errors=ErrorFamily("gaussian_correlated", GAMMA),
        beta=2.0,
        alpha=1.0,
        n=n,
        identifiability=IdentifiabilityConfig.from_gamma(variant, GAMMA),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
