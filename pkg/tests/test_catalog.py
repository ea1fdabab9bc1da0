import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calibkit import catalog
from calibkit.catalog import (
    direct_sum,
    gr_membership,
    hl_orthogonality_check,
    imaginary_special_lagrangian,
    is_co_member,
    kahler_form,
    make_associative,
    make_cayley,
    make_coassociative,
    make_special_lagrangian,
    make_symp,
    make_symp_power,
    resolve_form,
    sample_sl_frames,
    stabilize,
    subspace_pullback,
    x_plane_frame,
)
from calibkit.comass import comass_ascent
from calibkit.exterior import Covector, eval_frame, hodge_star, wedge
from calibkit.linalg import haar_orthogonal, haar_special_orthogonal

from strategies import seeds


class TestSpecialLagrangian:
    def test_n2_expansion(self):
        expected = Covector.basis(4, 1, 2) - Covector.basis(4, 3, 4)
        assert make_special_lagrangian(2).form == expected

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_term_count(self, n):
        assert len(make_special_lagrangian(n).form) == 2 ** (n - 1)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_x_plane_value(self, n):
        assert eval_frame(make_special_lagrangian(n).form, x_plane_frame(n)) == pytest.approx(1.0, abs=1e-14)

    @given(st.integers(2, 4), seeds())
    def test_real_part_of_complex_determinant(self, n, seed):
        # oracle: Re/Im dz_1..dz_n on columns (X; Y) equals Re/Im det(X + iY)
        Q = np.random.default_rng(seed).standard_normal((2 * n, n))
        det = np.linalg.det(Q[:n] + 1j * Q[n:])
        assert eval_frame(make_special_lagrangian(n).form, Q) == pytest.approx(det.real, rel=1e-9, abs=1e-9)
        assert eval_frame(imaginary_special_lagrangian(n), Q) == pytest.approx(det.imag, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("group", ["so", "su"])
    def test_sampled_frames_are_calibrated(self, group):
        frames = sample_sl_frames(3, 50, 7, group=group)
        vals = eval_frame(make_special_lagrangian(3).form, frames)
        assert np.max(np.abs(vals - 1)) <= 1e-10
        gram = np.einsum("sai,saj->sij", frames, frames)
        assert np.max(np.abs(gram - np.eye(3))) <= 1e-12

    @pytest.mark.parametrize("group", ["so", "su"])
    def test_lagrangian_orthogonality(self, group):
        rep = hl_orthogonality_check(3, 100, 42, group=group)
        assert rep.passed and rep.max_violation <= 1e-10
        assert rep.min_sl_value == pytest.approx(1.0, abs=1e-10)


class TestExceptional:
    def test_associative_terms(self):
        a = make_associative().form
        assert len(a) == 7
        assert {abs(c) for _, c in a.items()} == {1.0}

    def test_coassociative_is_hodge_dual(self):
        assert hodge_star(make_associative().form) == make_coassociative().form

    def test_cayley_x_plane(self):
        Q = np.vstack([np.eye(4), np.zeros((4, 4))])
        assert eval_frame(make_cayley().form, Q) == pytest.approx(1.0, abs=1e-14)

    def test_cayley_self_dual(self):
        phi = make_cayley().form
        assert hodge_star(phi) == phi

    def test_cayley_terms(self):
        # 6 terms from symp^2/2 and 8 from Re Omega, disjoint supports
        assert len(make_cayley().form) == 14


class TestSymplectic:
    def test_square_over_two(self):
        assert make_symp_power(2, 2).form == Covector.volume(4)

    def test_symp_on_r4(self):
        assert make_symp(2).form == Covector.basis(4, 1, 2) + Covector.basis(4, 3, 4)

    def test_power_rejects_bad_k(self):
        with pytest.raises(ValueError):
            make_symp_power(2, 3)

    @pytest.mark.parametrize("ell", [2, 3, 4])
    def test_top_power_is_volume(self, ell):
        assert make_symp_power(ell, ell).form.allclose(Covector.volume(2 * ell), 1e-14)

    def test_kahler_differs_from_pairs_by_permutation(self):
        # (x, y) ordering vs adjacent pairs: same form after relabelling
        perm = np.zeros((4, 4))
        for j, i in enumerate([1, 3, 2, 4]):
            perm[i - 1, j] = 1
        from calibkit.exterior import pullback

        assert pullback(perm, kahler_form(2)).allclose(make_symp(2).form, 1e-14)


class TestResolve:
    @pytest.mark.parametrize("name", ["vol3", "sl3", "symp2", "symp3_2", "eta3", "kahler2", "assoc", "coassoc", "cayley"])
    def test_known_names(self, name):
        assert isinstance(resolve_form(name), Covector)

    def test_unknown(self):
        with pytest.raises(KeyError):
            resolve_form("nonsense")

    def test_standard_catalog_contents(self):
        cat = catalog.standard_catalog()
        assert set(cat) == {"vol3", "vol4", "vol5", "vol6", "symp2", "symp2_2", "symp3_2", "symp4_3", "sl2", "sl3", "assoc", "coassoc", "cayley"}


class TestBuilding:
    def test_stabilize_frames(self, rng):
        """Frames V x R with V calibrated give value 1; generic Haar frames stay below 1."""
        sl2 = make_special_lagrangian(2).form
        st_ = stabilize(sl2, 1)
        frames = sample_sl_frames(2, 100, 3)
        ext = np.zeros((100, 5, 3))
        ext[:, :4, :2] = frames
        ext[:, 4, 2] = 1.0
        assert np.max(np.abs(eval_frame(st_, ext) - 1)) <= 1e-9
        haar = np.stack([haar_orthogonal(5, rng)[:, :3] for _ in range(1000)])
        assert np.max(eval_frame(st_, haar)) < 1 - 1e-9

    def test_direct_sum_of_volumes(self):
        w = direct_sum([(Covector.volume(3), 3), (Covector.volume(3), 3)])
        assert w == Covector.basis(6, 1, 2, 3) + Covector.basis(6, 4, 5, 6)
        est = comass_ascent(w, known_value=1.0, seed=1)
        assert est.certified and est.lower == pytest.approx(1.0, abs=1e-6)

    def test_direct_sum_co_membership_needs_dominant_block(self):
        w = direct_sum([(Covector.volume(3), 3), (Covector.volume(3) * 0.5, 3)])
        first = np.vstack([np.eye(3), np.zeros((3, 3))])
        second = np.vstack([np.zeros((3, 3)), np.eye(3)])
        assert is_co_member(w, first)
        assert not is_co_member(w, second)
        assert not is_co_member(w, (first + second) / math.sqrt(2))

    def test_direct_sum_rejects_small_degree(self):
        with pytest.raises(ValueError):
            direct_sum([(make_symp(2).form, 4), (make_symp(2).form, 4)])

    @given(st.integers(2, 5), st.integers(0, 10**6))
    def test_subspace_pullback_comass(self, ell, seed):
        """comass((iota o pi)^* tau) == comass(tau) for orthonormal-row P."""
        rng = np.random.default_rng(seed)
        m = ell + int(rng.integers(0, 2))
        tau = wedge(Covector.basis(ell, 1), Covector.basis(ell, 2)) * float(rng.uniform(0.5, 2))
        P = haar_orthogonal(m, rng)[:ell]
        pulled = subspace_pullback(tau, P)
        a = comass_ascent(tau, seed=0, starts=8).lower
        b = comass_ascent(pulled, seed=0, starts=8).lower
        assert a == pytest.approx(b, abs=2e-6)

    def test_subspace_pullback_rejects_non_isometry(self):
        with pytest.raises(ValueError):
            subspace_pullback(make_symp(2).form, np.ones((4, 5)))


class TestMembership:
    def test_folding_reflection_not_member(self):
        A = np.diag([1.0, 1.0, -1.0])
        assert not is_co_member(Covector.volume(3), A)

    @pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
    def test_scaled_x_plane_member(self, lam):
        assert is_co_member(make_special_lagrangian(3).form, lam * x_plane_frame(3))

    def test_rotated_x_plane_member(self, rng):
        U = haar_special_orthogonal(3, rng)
        T = np.kron(np.eye(2), U)
        assert is_co_member(make_special_lagrangian(3).form, 2.0 * T @ x_plane_frame(3))

    def test_gr_membership(self):
        g = gr_membership(make_special_lagrangian(2).form, x_plane_frame(2))
        assert g.is_member and g.value == pytest.approx(1.0)
        assert not gr_membership(make_special_lagrangian(2).form, 2 * x_plane_frame(2)).is_member

    def test_shape_check(self):
        with pytest.raises(ValueError):
            is_co_member(Covector.volume(3), np.eye(2))
