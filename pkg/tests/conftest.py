import itertools

import numpy as np
import pytest


def all_bit_vectors(k):
    """Every length-k bit vector, lexicographic, as a (2**k, k) uint8 array."""
    return np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(-1, k)


def kron_matrix(n):
    """Dense F^{(x)t} over GF(2), built independently of the butterfly."""
    f = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    g = np.ones((1, 1), dtype=np.uint8)
    while g.shape[0] < n:
        g = np.kron(g, f) % 2
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """``record(number, title, ok, detail)`` for the acceptance summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, title, ok, detail=""):
        store[number] = (title, bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, ok, detail = store[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number:2d}  {title}: {detail}")
