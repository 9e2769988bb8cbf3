import numpy as np
import pytest

from risjoint.ambiguity import (align_bilinear, align_parafac, nmse, nmse_db, normalize_first_row,
                                to_db)
from risjoint.errors import AlignmentError, DimensionError, UndefinedMetricError
from risjoint.linalg import RngStream
from risjoint.parafac import als_estimate, unfold
from risjoint.scene import SceneConfig, make_scene, synthesize_received


def crandn(gen, *shape):
    return gen.standard_normal(shape) + 1j * gen.standard_normal(shape)


class TestNmse:
    def test_perfect(self):
        ref = crandn(np.random.default_rng(0), 3, 4)
        assert nmse(ref, ref) == 0.0
        assert nmse_db(ref, ref) == -np.inf
        assert nmse_db(ref, ref, floor_db=-120.0) == -120.0

    def test_null_estimate(self):
        ref = crandn(np.random.default_rng(1), 3, 4)
        assert nmse(np.zeros_like(ref), ref) == pytest.approx(1.0)
        assert nmse_db(np.zeros_like(ref), ref) == pytest.approx(0.0)

    def test_double(self):
        ref = crandn(np.random.default_rng(2), 3, 4)
        assert nmse(2 * ref, ref) == pytest.approx(1.0)

    def test_zero_reference(self):
        with pytest.raises(UndefinedMetricError):
            nmse(np.ones((2, 2)), np.zeros((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            nmse(np.ones((2, 2)), np.ones((2, 3)))

    def test_scale_invariance(self):
        gen = np.random.default_rng(3)
        ref, est = crandn(gen, 5, 5), crandn(gen, 5, 5)
        a = 3.7 * np.exp(0.4j)
        assert nmse(a * est, a * ref) == pytest.approx(nmse(est, ref), rel=1e-12)

    def test_to_db(self):
        assert to_db(0.01) == pytest.approx(-20.0)
        assert to_db(0.0) == -np.inf


class TestAlignParafac:
    def test_planted_ambiguity(self):
        gen = np.random.default_rng(4)
        Hr, He = crandn(gen, 8, 4), crandn(gen, 4, 10)
        lam = crandn(gen, 4)
        Hr_al, He_al, report = align_parafac(Hr * lam, He / lam[:, None], Hr)
        assert np.max(np.abs(Hr_al - Hr)) <= 1e-12
        assert np.max(np.abs(He_al - He)) <= 1e-12
        assert report.residual <= 1e-12

    def test_identity(self):
        gen = np.random.default_rng(5)
        Hr, He = crandn(gen, 6, 3), crandn(gen, 3, 7)
        Hr_al, He_al, report = align_parafac(Hr, He, Hr)
        np.testing.assert_allclose(report.scale_factors, 1.0, atol=1e-15)
        assert report.residual == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(Hr_al, Hr, atol=1e-15)

    def test_noiseless_als_pipeline(self):
        scene = make_scene(SceneConfig(K=8, N=4, M=4, T=16, P=4), RngStream(6))
        rec = synthesize_received(scene.channels, scene.signal, scene.phases, np.inf, None)
        res = als_estimate(unfold(rec), scene.phases)
        Hr, He, _ = align_parafac(res.Hr_hat, res.He_hat, scene.channels.Hr)
        assert nmse(Hr, scene.channels.Hr) <= 1e-10
        assert nmse(He, scene.He) <= 1e-10

    def test_grid_search_optimality(self):
        gen = np.random.default_rng(7)
        Hr_ref, Hr_hat = crandn(gen, 5, 2), crandn(gen, 5, 2)
        _, _, report = align_parafac(Hr_hat, np.ones((2, 1)), Hr_ref)
        grid = np.linspace(-3, 3, 121)
        cands = (grid[:, None] + 1j * grid[None, :]).ravel()
        for n in range(2):
            best = np.linalg.norm(Hr_ref[:, n] - report.scale_factors[n] * Hr_hat[:, n])
            others = np.linalg.norm(Hr_ref[:, n, None] - Hr_hat[:, n, None] * cands[None, :], axis=0)
            assert best <= others.min() + 1e-12

    def test_idempotent(self):
        gen = np.random.default_rng(8)
        Hr, Hr_hat, He_hat = crandn(gen, 6, 3), crandn(gen, 6, 3), crandn(gen, 3, 5)
        a1, b1, _ = align_parafac(Hr_hat, He_hat, Hr)
        a2, b2, _ = align_parafac(a1, b1, Hr)
        assert np.max(np.abs(a2 - a1)) <= 1e-12
        assert np.max(np.abs(b2 - b1)) <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_composition(self, seed):
        gen = np.random.default_rng(seed)
        Hr = crandn(gen, 7, 4)
        lam = crandn(gen, 4)
        Hr_al, _, _ = align_parafac(Hr * lam, np.ones((4, 1)), Hr)
        assert nmse(Hr_al, Hr) <= 1e-12

    def test_zero_column(self):
        Hr_hat = np.ones((3, 2), complex)
        Hr_hat[:, 1] = 0
        with pytest.raises(AlignmentError):
            align_parafac(Hr_hat, np.ones((2, 2)), np.ones((3, 2)))

    def test_first_row_normalization(self):
        gen = np.random.default_rng(9)
        Hr, He = crandn(gen, 5, 3), crandn(gen, 3, 4)
        Hr_al, He_al, _ = align_parafac(Hr, He, mode="first_row_normalization")
        np.testing.assert_allclose(Hr_al[0], 1.0)
        np.testing.assert_allclose(Hr_al @ He_al, Hr @ He, atol=1e-12)

    def test_zero_first_entry(self):
        Hr = np.ones((3, 2), complex)
        Hr[0, 1] = 0
        with pytest.raises(AlignmentError):
            normalize_first_row(Hr, np.ones((2, 2)))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            align_parafac(np.ones((2, 1)), np.ones((1, 2)), np.ones((2, 1)), mode="nope")


class TestAlignBilinear:
    def planted(self, c0, seed=10):
        gen = np.random.default_rng(seed)
        Hs, X = crandn(gen, 6, 3), crandn(gen, 3, 9)
        return Hs, X, align_bilinear(Hs * c0, X / c0, [0, 1, 2], X[:, :3])

    def test_planted_scalar(self):
        Hs, X, (Hs_al, X_al, _) = self.planted(0.3 - 2.1j)
        assert np.max(np.abs(X_al - X)) <= 1e-12
        assert np.max(np.abs(Hs_al - Hs)) <= 1e-12

    def test_pure_phase(self):
        Hs, X, (Hs_al, X_al, report) = self.planted(np.exp(1j * np.pi / 4))
        assert abs(abs(report.scale_factors[0]) - 1.0) <= 1e-12
        assert np.max(np.abs(X_al - X)) <= 1e-12

    def test_product_unchanged(self):
        gen = np.random.default_rng(11)
        Hs, X = crandn(gen, 4, 2), crandn(gen, 2, 6)
        Hs_al, X_al, _ = align_bilinear(Hs, X, [0, 1], crandn(gen, 2, 2))
        np.testing.assert_allclose(Hs_al @ X_al, Hs @ X, atol=1e-12)

    def test_errors(self):
        X = np.ones((2, 4), complex)
        with pytest.raises(AlignmentError):
            align_bilinear(np.ones((3, 2)), X, [], np.zeros((2, 0)))
        with pytest.raises(AlignmentError):
            align_bilinear(np.ones((3, 2)), X, [0, 1], np.ones((2, 2)))
        with pytest.raises(AlignmentError):
            align_bilinear(np.ones((3, 2)), np.zeros((2, 4)), [0, 1], np.eye(2))
