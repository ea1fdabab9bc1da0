import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calibkit.catalog import make_eta, make_special_lagrangian
from calibkit.exterior import (
    Covector,
    MultiIndex,
    embed,
    eval_frame,
    frame_gradient,
    hodge_star,
    hs_norm,
    max_abs_diff,
    pullback,
    random_covector,
    wedge,
)

from strategies import covectors, orthonormal, seeds

SYMP4 = Covector.basis(4, 1, 2) + Covector.basis(4, 3, 4)


def leibniz_eval(a: Covector, Q: np.ndarray) -> float:
    """Independent oracle: sum over terms of the Leibniz determinant of the selected rows."""
    total = 0.0
    for idx, c in a.items():
        rows = [i - 1 for i in idx]
        det = 0.0
        for perm in itertools.permutations(range(a.k)):
            inv = sum(1 for i in range(a.k) for j in range(i + 1, a.k) if perm[i] > perm[j])
            det += (-1) ** inv * math.prod(Q[rows[i], perm[i]] for i in range(a.k))
        total += c * det
    return total


class TestConstruction:
    def test_basis_sign_from_permutation(self):
        assert Covector.basis(3, 2, 1) == Covector.basis(3, 1, 2) * -1

    def test_repeated_index_is_zero(self):
        assert Covector.basis(3, 1, 1).is_zero()

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Covector.from_terms(3, {(1, 4): 1.0})
        with pytest.raises(ValueError):
            MultiIndex((2, 1), 3)

    def test_rejects_mixed_degree(self):
        with pytest.raises(ValueError):
            Covector.from_terms(3, {(1,): 1.0, (1, 2): 1.0})

    def test_small_coefficients_dropped(self):
        assert Covector.from_terms(3, {(1,): 1e-17}).is_zero()

    @given(covectors())
    def test_json_roundtrip(self, a):
        assert Covector.from_json(a.to_json()) == a


class TestWedge:
    def test_symp_square(self):
        # (dx12 + dx34)^2 = 2 dx1234
        assert wedge(SYMP4, SYMP4) == Covector.basis(4, 1, 2, 3, 4, coeff=2.0)

    def test_one_forms_anticommute(self):
        a, b = Covector.basis(3, 1), Covector.basis(3, 2)
        assert wedge(a, b) == -wedge(b, a)
        assert wedge(a, a).is_zero()

    @given(covectors(m=6, max_terms=4), covectors(m=6, max_terms=4))
    def test_graded_commutativity(self, a, b):
        if a.k + b.k > 6:
            return
        sign = (-1) ** (a.k * b.k)
        assert wedge(a, b).allclose(wedge(b, a) * sign, 1e-12)

    @given(covectors(m=5, k=2, max_terms=3), covectors(m=5, k=2, max_terms=3), covectors(m=5, k=1), st.floats(-2, 2))
    def test_bilinear(self, a, b, c, s):
        assert wedge(a * s + b, c).allclose(wedge(a, c) * s + wedge(b, c), 1e-10)


class TestHodge:
    def test_symp_self_dual(self):
        assert hodge_star(SYMP4) == SYMP4

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_star_eta(self, n):
        expected = Covector.zero(n + 1, 1)
        for j in range(1, n + 1):
            expected = expected - Covector.basis(n + 1, j)
        assert hodge_star(make_eta(n)) == expected

    def test_star_of_volume(self):
        assert hodge_star(Covector.volume(4)) == Covector(4, 0, {0: 1.0})

    @given(covectors())
    def test_star_star(self, a):
        assert hodge_star(hodge_star(a)) == a * (-1) ** (a.k * (a.m - a.k))

    @given(covectors())
    def test_star_isometry(self, a):
        assert math.isclose(hs_norm(hodge_star(a)), hs_norm(a), rel_tol=1e-12)

    @given(covectors(max_m=6))
    def test_wedge_with_star_is_norm_squared_volume(self, a):
        vol = wedge(a, hodge_star(a))
        assert math.isclose(vol.coeff(*range(1, a.m + 1)), hs_norm(a) ** 2, rel_tol=1e-12)


class TestPullbackEval:
    def test_x_plane_inclusion_of_sl(self):
        n = 3
        A = np.vstack([np.eye(n), np.zeros((n, n))])
        assert pullback(A, make_special_lagrangian(n).form).allclose(Covector.volume(n), 1e-14)

    @given(covectors(max_m=6), seeds())
    def test_eval_matches_leibniz(self, a, seed):
        Q = np.random.default_rng(seed).standard_normal((a.m, a.k))
        assert math.isclose(eval_frame(a, Q), leibniz_eval(a, Q), rel_tol=1e-9, abs_tol=1e-9)

    @given(covectors(max_m=6), seeds())
    def test_cauchy_schwarz(self, a, seed):
        Q = orthonormal(a.m, a.k, seed)
        assert eval_frame(a, Q) <= hs_norm(a) + 1e-12

    @given(covectors(max_m=6), seeds())
    def test_pullback_preserves_norm_under_orthogonal(self, a, seed):
        Q = orthonormal(a.m, a.m, seed)
        assert math.isclose(hs_norm(pullback(Q, a)), hs_norm(a), rel_tol=1e-12)

    @given(covectors(max_m=5), seeds())
    def test_pullback_commutes_with_evaluation(self, a, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((a.m, a.m))
        Q = rng.standard_normal((a.m, a.k))
        assert math.isclose(eval_frame(pullback(A, a), Q), eval_frame(a, A @ Q), rel_tol=1e-9, abs_tol=1e-9)

    def test_batched_eval_shape(self, rng):
        a = random_covector(5, 2, rng)
        Q = rng.standard_normal((4, 3, 5, 2))
        vals = eval_frame(a, Q)
        assert vals.shape == (4, 3)
        assert math.isclose(vals[1, 2], eval_frame(a, Q[1, 2]))

    def test_frame_shape_mismatch(self):
        with pytest.raises(ValueError):
            eval_frame(SYMP4, np.zeros((3, 2)))

    def test_pullback_degree_too_high(self):
        with pytest.raises(ValueError):
            pullback(np.zeros((4, 1)), SYMP4)

    def test_embed_is_exact_relabelling(self, rng):
        a = random_covector(3, 2, rng)
        at = [5, 2, 4]
        P = np.zeros((3, 6))
        for r, i in enumerate(at):
            P[r, i - 1] = 1
        assert max_abs_diff(embed(a, 6, at), pullback(P, a)) == 0.0


class TestGradient:
    @given(covectors(max_m=6), seeds())
    def test_matches_central_differences(self, a, seed):
        if a.k == 0:
            return
        Q = np.random.default_rng(seed).standard_normal((a.m, a.k))
        G = frame_gradient(a, Q)
        step = 1e-6
        fd = np.zeros_like(Q)
        for i in range(a.m):
            for j in range(a.k):
                E = np.zeros_like(Q)
                E[i, j] = step
                fd[i, j] = (eval_frame(a, Q + E) - eval_frame(a, Q - E)) / (2 * step)
        scale = max(1.0, float(np.max(np.abs(G))))
        assert np.max(np.abs(G - fd)) <= 1e-6 * scale

    @given(covectors(max_m=6), seeds())
    def test_euler_identity(self, a, seed):
        Q = np.random.default_rng(seed).standard_normal((a.m, a.k))
        lhs = float(np.sum(frame_gradient(a, Q) * Q))
        assert math.isclose(lhs, a.k * eval_frame(a, Q), rel_tol=1e-9, abs_tol=1e-9)
