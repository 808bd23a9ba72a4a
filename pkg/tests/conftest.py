import numpy as np
import pytest

from hullcut import shapes
from hullcut.mesh import TriMesh, normalize

# lines printed by the acceptance tests, repeated in the terminal summary
ACCEPTANCE_LINES: list = []


def record(criterion: str, ok, detail: str) -> None:
    """Log one acceptance line; ``ok=None`` marks a skipped criterion."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    line = f"[acceptance] {criterion} {status}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cube():
    return shapes.cube()


@pytest.fixture
def l_prism():
    return shapes.l_prism()


@pytest.fixture
def l_norm():
    return normalize(shapes.l_prism())[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_obj(path, mesh: TriMesh) -> str:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    path.write_text("\n".join(lines) + "\n")
    return str(path)
