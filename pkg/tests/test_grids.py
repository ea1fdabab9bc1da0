import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calibkit.grids import GridSpec, GridSpecError


class TestParse:
    def test_box_single_range_is_total_count(self):
        g = GridSpec.parse("box:-1..1,count=1000")
        assert g.shape(3) == (10, 10, 10)
        assert g.shape(2) == (32, 32)
        pts = g.points(3)
        assert pts.shape == (1000, 3) and pts.min() == -1 and pts.max() == 1

    def test_box_per_axis(self):
        g = GridSpec.parse("box:0..1,count=3;-2..2,count=5")
        assert g.shape(2) == (3, 5)
        assert np.allclose(g.spacing(2), [0.5, 1.0])
        with pytest.raises(GridSpecError):
            g.points(3)

    def test_box_c_order(self):
        pts = GridSpec.parse("box:0..1,count=2;0..1,count=2").points(2)
        assert pts.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_shell(self):
        g = GridSpec.parse("shell:r=0.5..2,count=1000")
        pts = g.points(3, seed=1)
        r = np.linalg.norm(pts, axis=1)
        assert pts.shape == (1000, 3)
        assert r.min() >= 0.5 and r.max() <= 2
        assert np.array_equal(pts, g.points(3, seed=1))
        assert not np.array_equal(pts, g.points(3, seed=2))

    def test_whitespace(self):
        assert GridSpec.parse("shell: r = 1 .. 2 , count = 10").ranges == ((1.0, 2.0, 10),)

    @pytest.mark.parametrize(
        "text",
        ["box", "cube:0..1,count=3", "box:1..0,count=3", "box:0..1", "shell:r=0..1,count=3", "shell:r=1..2,count=0", "box:a..b,count=3"],
    )
    def test_rejects(self, text):
        with pytest.raises(GridSpecError):
            GridSpec.parse(text)

    def test_shell_has_no_axes(self):
        with pytest.raises(GridSpecError):
            GridSpec.parse("shell:r=1..2,count=3").axes(2)

    def test_str_roundtrip(self):
        text = "box:-1..1,count=27"
        assert str(GridSpec.parse(text)) == text

    @given(st.floats(-5, 5), st.floats(0.01, 5), st.integers(2, 30), st.integers(1, 4))
    def test_box_bounds(self, lo, width, per, n):
        g = GridSpec.parse(f"box:{lo!r}..{lo + width!r},count={per ** n}")
        pts = g.points(n)
        assert pts.shape == (per**n, n)
        assert np.all(pts >= lo - 1e-12) and np.all(pts <= lo + width + 1e-12)
