import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbsde import DomainError, OpenInterval


def test_strict_membership():
    iv = OpenInterval(0.0, 10.0)
    assert iv.contains(5.0)
    assert not iv.contains(0.0)
    assert not iv.contains(10.0)
    assert iv.contains(np.array([1.0, 9.999]))
    assert not iv.contains(np.array([1.0, 10.0]))


def test_invalid_order_rejected():
    with pytest.raises(ValueError):
        OpenInterval(3.0, 3.0)
    with pytest.raises(ValueError):
        OpenInterval(5.0, 1.0)


def test_infinite_endpoints():
    iv = OpenInterval(-math.inf, math.inf)
    assert iv.contains(1e308)
    assert not iv.is_bounded
    assert OpenInterval(0.0, 1.0).is_bounded


def test_default_base_point():
    assert OpenInterval(2.0, 4.0).default_base_point() == 3.0
    assert OpenInterval(-math.inf, math.inf).default_base_point() == 0.0
    assert OpenInterval(1.0, math.inf).default_base_point() == 2.0
    assert OpenInterval(-math.inf, -3.0).default_base_point() == -4.0
    # half line containing zero keeps zero
    assert OpenInterval(-1.0, math.inf).default_base_point() == 0.0


def test_require_raises():
    iv = OpenInterval(0.0, 1.0)
    iv.require(0.5)
    with pytest.raises(DomainError):
        iv.require(1.5)


def test_clip_inside_stays_strict():
    iv = OpenInterval(0.0, 1.0)
    clipped = iv.clip_inside(np.array([-5.0, 0.5, 7.0]))
    assert iv.contains(clipped)


@given(st.floats(-100, 100), st.floats(1e-6, 100))
def test_clip_inside_is_idempotent(lo, width):
    iv = OpenInterval(lo, lo + width)
    x = np.linspace(lo - width, lo + 2 * width, 17)
    once = iv.clip_inside(x)
    twice = iv.clip_inside(once)
    assert np.array_equal(once, twice)
    assert iv.contains(once)


def test_interior_grid_inside():
    for iv in (OpenInterval(0.0, 1.0), OpenInterval(0.0, math.inf),
               OpenInterval(-math.inf, math.inf)):
        g = iv.interior_grid(64)
        assert iv.contains(g)
        assert np.all(np.diff(g) > 0)
