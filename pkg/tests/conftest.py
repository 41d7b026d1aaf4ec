from collections import defaultdict

import numpy as np
import pytest

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def camera256():
    """Standard 8-bit camera test image, 2x2 block-averaged to 256x256."""
    from skimage import data

    img = data.camera().astype(float).reshape(256, 2, 256, 2).mean(axis=(1, 3))
    return np.round(img) / 255.0


def pytest_configure(config):
    config.stash[_RESULTS] = defaultdict(list)


@pytest.fixture
def criterion(request):
    """``criterion(number, clause, ok, detail)`` records and prints one check.

    The terminal summary then prints a single PASS/FAIL line per criterion.
    """
    store = request.config.stash[_RESULTS]

    def record(number, clause, ok, detail):
        store[number].append((clause, bool(ok), detail))
        print(f"criterion {number} [{clause}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash[_RESULTS]
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        clauses = store[number]
        ok = all(c[1] for c in clauses)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({text})" for name, good, text in clauses)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {detail}")
