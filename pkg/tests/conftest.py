import numpy as np
import pytest

from thinshell import geometry as G


def hemisphere():
    """Upper unit hemisphere as a graph; regular at the north pole."""
    return G.custom(["u1", "u2", "sqrt(1 - u1^2 - u2^2)"], [(-0.7, 0.7), (-0.7, 0.7)])


def plane():
    return G.custom(["u1", "u2", "0"], [(-1.0, 1.0), (-1.0, 1.0)])


def interior_points(chart, count, seed, margin=0.05):
    rng = np.random.default_rng(seed)
    box = chart.interior(margin)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return [tuple(lo + rng.random(chart.dim) * (hi - lo)) for _ in range(count)]


SURFACES = {
    "sphere(1)": lambda: G.sphere(1.0),
    "sphere(2.5)": lambda: G.sphere(2.5),
    "ellipsoid": lambda: G.ellipsoid(1.0, 1.3, 2.0),
    "torus": lambda: G.torus(2.0, 0.7),
    "graph": lambda: G.graph("sin(u1)*cos(u2)"),
    "custom-seed1": lambda: G.seeded_custom_surface(1),
    "custom-seed2": lambda: G.seeded_custom_surface(2),
}


@pytest.fixture(params=sorted(SURFACES))
def surface(request):
    return request.param, SURFACES[request.param]()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
