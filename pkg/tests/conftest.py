import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from epidyn.model import SerirsParams, SverirsParams

settings.register_profile("default", deadline=None, print_blob=True)
settings.load_profile("default")

BASE = dict(alpha=0.1, gamma=1 / 7, delta=1 / 14, sigma=1 / 7, omega=1 / 90, n=100.0)


def serirs(beta=0.4, **kw) -> SerirsParams:
    return SerirsParams(**{**BASE, "beta": beta, **kw})


def sverirs(beta=0.9, phi=1 / 360, psi=1 / 180, rho=0.1, **kw) -> SverirsParams:
    return SverirsParams(serirs(beta, **kw), phi, psi, rho)


@pytest.fixture
def ex1():
    return serirs(0.4)


@pytest.fixture
def ex2():
    return serirs(0.2)


@pytest.fixture
def ex3():
    return serirs(0.19)


@pytest.fixture
def vax_endemic():
    return sverirs(0.9)


@pytest.fixture
def vax_no_endemic():
    return sverirs(0.2)


@pytest.fixture
def eradication():
    return sverirs(0.3)


rate = st.floats(0.01, 1.0)
slow = st.floats(0.001, 0.1)


@st.composite
def serirs_params(draw, n=None):
    return SerirsParams(
        alpha=draw(st.floats(0.0, 1.0)),
        beta=draw(st.floats(0.0, 2.0)),
        gamma=draw(rate),
        delta=draw(st.floats(0.0, 1.0)),
        sigma=draw(rate),
        omega=draw(slow),
        n=draw(st.sampled_from([1.0, 100.0, 1e4])) if n is None else n,
    )


@st.composite
def sverirs_params(draw, n=None):
    return SverirsParams(
        draw(serirs_params(n=n)),
        phi=draw(st.floats(1e-4, 0.1)),
        psi=draw(st.floats(1e-4, 0.1)),
        rho=draw(st.floats(0.0, 1.0)),
    )


@st.composite
def simplex_state(draw, size, n):
    w = np.array([draw(st.floats(0.0, 1.0)) for _ in range(size)]) + 1e-9
    return n * w / w.sum()


def random_serirs(rng: np.random.Generator, n: float = 100.0) -> SerirsParams:
    return SerirsParams(
        alpha=rng.uniform(0, 1), beta=rng.uniform(0.01, 2.0), gamma=rng.uniform(0.01, 1.0),
        delta=rng.uniform(0, 1), sigma=rng.uniform(0.01, 1.0), omega=rng.uniform(0.001, 0.1), n=n,
    )


def random_sverirs(rng: np.random.Generator, n: float = 100.0) -> SverirsParams:
    return SverirsParams(random_serirs(rng, n), phi=rng.uniform(1e-4, 0.1), psi=rng.uniform(1e-4, 0.1),
                         rho=rng.uniform(0, 1))


# acceptance lines, echoed after the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
