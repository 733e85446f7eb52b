import numpy as np
import pytest

from mbqcqp.instance import Field, Instance, Sense


def random_psd(rng, n, rank=None, complex_=False):
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank))
    if complex_:
        G = G + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T


def random_hermitian(rng, n, complex_=True):
    G = rng.standard_normal((n, n))
    if complex_:
        G = G + 1j * rng.standard_normal((n, n))
    return 0.5 * (G + G.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def separable_min():
    mats = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    return Instance(Field.REAL, Sense.MINIMIZE, mats, Q=2, epsilon=0.0)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record one PASS/FAIL line; it is printed live and repeated in the summary."""

    def emit(k: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
