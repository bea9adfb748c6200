import numpy as np
import pytest

from hodgehardy import generate_complex

CATALOG = [
    ("path", (8,)),
    ("cycle", (6,)),
    ("torus_grid", (4, 4)),
    ("sphere_triangulation", (1,)),
    ("dumbbell", (3, 4)),
]


@pytest.fixture(scope="session")
def P2():
    return generate_complex("path", 2)


@pytest.fixture(scope="session")
def C4():
    return generate_complex("cycle", 4)


@pytest.fixture(scope="session")
def C16():
    return generate_complex("cycle", 16)


@pytest.fixture(scope="session")
def P16():
    return generate_complex("path", 16)


@pytest.fixture(scope="session")
def T8():
    return generate_complex("torus_grid", (8, 8))


@pytest.fixture(scope="session", params=CATALOG, ids=lambda c: c[0])
def catalog_complex(request):
    kind, size = request.param
    return generate_complex(kind, size)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, printed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
