from __future__ import annotations

import numpy as np
import pytest

from urywidth import fixtures
from urywidth.complex import barycentric_subdivide_and_color, kuhn_triangulate, make_periodic


@pytest.fixture(scope="session")
def periodic3():
    """Small rainbow periodic 3-complex: 4 cells of size 0.5 per axis, period 2."""
    return make_periodic(barycentric_subdivide_and_color(kuhn_triangulate(3, 4, 0.5)), min_period=2.0)


@pytest.fixture(scope="session")
def colored3():
    return barycentric_subdivide_and_color(kuhn_triangulate(3, 6, 0.2))


@pytest.fixture(scope="session")
def sphere():
    return fixtures.cube_sphere(4, 0.4)


@pytest.fixture(scope="session")
def genus2():
    return fixtures.genus2_surface(4, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}
_CERTS: list = []


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        info = "; ".join(self.details)
        if exc_type is not None:
            info = (info + "; " if info else "") + f"{exc_type.__name__}: {exc}".splitlines()[0]
        line = f"{self.title}: {info}" if info else self.title
        _ACCEPTANCE[self.number] = (exc_type is None, line)
        print(f"[{'PASS' if exc_type is None else 'FAIL'}] criterion {self.number}: {line}")
        return False


@pytest.fixture
def criterion():
    return _Criterion


@pytest.fixture(scope="session")
def certificate_pool():
    """Certificates collected by the acceptance tests (checked by criterion 9)."""
    return _CERTS


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, line = _ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {line}")
