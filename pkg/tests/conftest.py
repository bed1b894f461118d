import numpy as np
import pytest
from hypothesis import strategies as st

from geocover.core import WeightedPointSet


def random_points(rng, n, span=4.0, int_weights=True, max_w=9):
    """Random instance; coordinates on a 1/64 lattice so translations stay exact."""
    xs = np.round(rng.uniform(0.0, span, n) * 64) / 64
    ys = np.round(rng.uniform(0.0, span, n) * 64) / 64
    ws = rng.integers(1, max_w + 1, n).astype(float) if int_weights else rng.uniform(0.0, max_w, n)
    return WeightedPointSet(xs, ys, ws)


# lattice coordinates keep every float operation exact
_coord = st.integers(0, 4 * 16).map(lambda v: v / 16)
_weight = st.integers(0, 9).map(float)


@st.composite
def point_sets(draw, min_size=0, max_size=12):
    rows = draw(st.lists(st.tuples(_coord, _coord, _weight), min_size=min_size, max_size=max_size))
    return WeightedPointSet.from_points(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Six unit-weight points whose exact profile in the cell [0,3)x[0,3) is
# F(1..3) = 3, 4, 6: one square catches three, two can only add one more,
# but three squares pair them up two at a time.
APPENDIX_FIXTURE = [[1.5, 0.8], [2.1, 0.8], [0.3, 0.2], [0.7, 1.6], [0.3, 2.0], [0.7, 0.8]]
APPENDIX_BOUNDS = (0.0, 3.0, 0.0, 3.0)


# acceptance reporting ---------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


def report(criterion: int, ok: bool, detail: str, informational: bool = False) -> None:
    status = "PASS" if ok else ("FAIL (informational)" if informational else "FAIL")
    line = f"criterion {criterion:2d}: {status} - {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
