import numpy as np
import pytest

from shapencg.mesh import (TriMesh, generate_channel_with_obstacle, generate_disk,
                           generate_square_with_interface)


@pytest.fixture(scope="session")
def disk_small():
    return generate_disk((0.0, 0.0), 1.0, 800)


@pytest.fixture(scope="session")
def disk_medium():
    return generate_disk((0.0, 0.0), 1.0, 3000)


@pytest.fixture(scope="session")
def eit_small():
    return generate_square_with_interface(("square", (0.5, 0.5), 0.4), 1500)


@pytest.fixture(scope="session")
def channel_small():
    return generate_channel_with_obstacle(target_elems=2500, obstacle_nodes=120)


@pytest.fixture(scope="session")
def two_triangles():
    nodes = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    tri = [[0, 1, 2], [0, 2, 3]]
    facets = [[0, 1], [1, 2], [2, 3], [3, 0]]
    return TriMesh.from_arrays(nodes, tri, facets, ["b", "r", "t", "l"])


def rectangle(nx, ny, x0=0.0, x1=1.0, y0=0.0, y1=1.0):
    """Structured right-triangle mesh with tags bottom/right/top/left."""
    xs, ys = np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = lambda i, j: j * (nx + 1) + i
    tri = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tri += [[a, b, c], [a, c, d]]
    facets, tags = [], []
    for i in range(nx):
        facets += [[idx(i, 0), idx(i + 1, 0)], [idx(i, ny), idx(i + 1, ny)]]
        tags += ["bottom", "top"]
    for j in range(ny):
        facets += [[idx(0, j), idx(0, j + 1)], [idx(nx, j), idx(nx, j + 1)]]
        tags += ["left", "right"]
    return TriMesh.from_arrays(nodes, tri, facets, tags)


# -- acceptance summary ----------------------------------------------------------
CRITERIA: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> str:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    CRITERIA[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
