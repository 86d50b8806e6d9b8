import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from answercheck.core.exceptions import SegmentError
from answercheck.schemas import GridMode, Segment
from answercheck.services.grid import (
    SMALLEST_NORMAL,
    build_grid,
    decade_table,
    epsilon_for,
    estimate_grid_points,
    grid_curve,
    grid_point,
    normalize_segment,
    point_at,
    split_segment,
)

DECADE_M = [
    3002399751580330,
    428914250225761,
    44811936590751,
    4501348952894,
    450337445864,
    45035771094,
    4503597375,
    450359940,
    45035996,
]


def seg(a: float, b: float) -> Segment:
    return Segment(a=a, b=b)


class TestEpsilon:
    def test_relative(self):
        assert epsilon_for(15.0) == 15.0 * 2.0**-53
        assert epsilon_for(-15.0) == 15.0 * 2.0**-53
        assert epsilon_for(1.0) == 2.0**-53

    def test_ulp(self):
        assert epsilon_for(15.0, GridMode.ULP) == 2.0**-49
        assert epsilon_for(1.0, "ulp") == 2.0**-52

    def test_non_finite(self):
        with pytest.raises(ValueError):
            epsilon_for(math.inf)

    def test_relative_zero(self):
        with pytest.raises(ValueError):
            epsilon_for(0.0)

    @given(
        st.floats(min_value=1e-300, max_value=1e300),
        st.floats(min_value=1e-300, max_value=1e300),
        st.sampled_from(list(GridMode)),
    )
    def test_spacing_never_decreases_with_magnitude(self, x, y, mode):
        lo, hi = sorted((x, y))
        assert epsilon_for(lo, mode) <= epsilon_for(hi, mode)


class TestSegments:
    def test_positive_segment_is_unchanged(self):
        assert normalize_segment(seg(10, 15)) == seg(10, 15)

    def test_negative_segment_is_mirrored(self):
        assert normalize_segment(seg(-15, -10)) == seg(10, 15)

    def test_zero_end_is_clamped(self):
        assert normalize_segment(seg(0, 1)) == seg(SMALLEST_NORMAL, 1)
        assert normalize_segment(seg(-1, 0)) == seg(SMALLEST_NORMAL, 1)

    def test_straddling_segment_is_rejected(self):
        with pytest.raises(SegmentError):
            normalize_segment(seg(-1, 1))

    def test_split(self):
        assert split_segment(seg(-1, 2)) == [seg(-1, 0), seg(0, 2)]
        assert split_segment(seg(1, 2)) == [seg(1, 2)]

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            seg(2, 1)
        with pytest.raises(ValueError):
            seg(0, math.inf)

    def test_parse(self):
        assert Segment.parse("10:20") == seg(10, 20)
        assert Segment.parse("-20:-10") == seg(-20, -10)


class TestEstimate:
    def test_decade_segments(self):
        assert [estimate_grid_points(seg(10.0**j, 10.0**j + 5)) for j in range(1, 10)] == DECADE_M

    def test_decade_table(self):
        frame = decade_table()
        assert list(frame.columns) == ["segment", "M"]
        assert frame["segment"].iloc[0] == "[10, 15]"
        assert frame["M"].tolist() == DECADE_M

    def test_billion(self):
        assert estimate_grid_points(seg(1e9, 1e9 + 1)) == 9007199

    def test_negative_segment(self):
        assert estimate_grid_points(seg(-15, -10)) == DECADE_M[0]

    def test_ulp_lower_bound_exact(self):
        # exactly 1001 binary64 values in [1, 1 + 1000 ulp(1)]
        s = seg(1.0, 1.0 + 1000 * 2.0**-52)
        assert estimate_grid_points(s, GridMode.ULP) == 1000

    @pytest.mark.parametrize(
        "a, b",
        [
            (1.0, 1.0 + 1000 * 2.0**-52),
            (2.0 - 500 * 2.0**-52, 2.0 + 500 * 2.0**-51),
            (1e6, 1e6 + 3000 * math.ulp(1e6)),
        ],
    )
    def test_ulp_estimate_is_a_lower_bound(self, a, b):
        count, x = 0, a
        while x <= b:
            count += 1
            x = math.nextafter(x, math.inf)
        assert estimate_grid_points(seg(a, b), GridMode.ULP) <= count

    def test_moving_away_from_zero_shrinks_the_grid(self):
        frame = grid_curve([10.0**j for j in range(1, 10)])
        values = frame["M"].tolist()
        assert all(a > b for a, b in zip(values, values[1:]))
        assert list(frame.columns) == ["A", "B", "M"]


class TestGridPoints:
    def test_first_points(self):
        s = seg(10, 15)
        assert grid_point(s, 0) == 10.0
        assert grid_point(s, 1) == 10.0 + 15.0 * 2.0**-53

    def test_last_point_inside(self):
        s = seg(10, 15)
        assert grid_point(s, DECADE_M[0] - 1) <= 15.0

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            grid_point(seg(10, 15), DECADE_M[0])
        with pytest.raises(IndexError):
            grid_point(seg(10, 15), -1)

    def test_mirrored_points(self):
        grid = build_grid(seg(-15, -10))
        assert grid.mirrored
        assert point_at(grid, 0) == -10.0
        assert grid_point(seg(-15, -10), 0) == 10.0

    def test_ulp_grid_is_injective(self):
        s = seg(1, 2)
        points = [grid_point(s, i, GridMode.ULP) for i in range(200)]
        assert all(a < b for a, b in zip(points, points[1:]))

    @given(st.integers(min_value=0, max_value=DECADE_M[0] - 2))
    def test_non_decreasing(self, index):
        s = seg(10, 15)
        assert grid_point(s, index) <= grid_point(s, index + 1)
