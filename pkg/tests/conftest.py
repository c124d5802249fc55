import json
import math
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"

_ACCEPTANCE_LINES = []


def random_symplectic(n, rng, max_squeeze=0.8):
    """Product of random beam splitters, phase rotations and squeezers.

    Interleaved (q, p) ordering, same convention as the package.
    """
    S = np.eye(2 * n)
    for _ in range(3 * n):
        i = rng.integers(n)
        th = rng.uniform(0, 2 * np.pi)
        R = np.eye(2 * n)
        c, s = math.cos(th), math.sin(th)
        R[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[c, s], [-s, c]]
        r = rng.uniform(-max_squeeze, max_squeeze)
        Q = np.eye(2 * n)
        Q[2 * i, 2 * i], Q[2 * i + 1, 2 * i + 1] = math.exp(r), math.exp(-r)
        S = Q @ R @ S
        if n > 1:
            j = (i + 1 + rng.integers(n - 1)) % n
            t = rng.uniform(0, np.pi / 2)
            B = np.eye(2 * n)
            ct, st = math.cos(t), math.sin(t)
            for k in (0, 1):
                a, b = 2 * i + k, 2 * j + k
                B[a, a], B[a, b], B[b, a], B[b, b] = ct, st, -st, ct
            S = B @ S
    return S


def random_physical_cm(n, rng):
    nus = rng.uniform(1.0, 5.0, size=n)
    D = np.diag(np.repeat(nus, 2))
    S = random_symplectic(n, rng)
    return S @ D @ S.T, np.sort(nus)[::-1]


@pytest.fixture(scope="session")
def rsym_reference():
    return json.loads((DATA / "rsym_reference.json").read_text())


@pytest.fixture
def acceptance_report():
    def report(number, ok, detail):
        _ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        print(_ACCEPTANCE_LINES[-1])
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
