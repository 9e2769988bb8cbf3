import numpy as np
import pytest

from risjoint.ambiguity import align_parafac, nmse
from risjoint.errors import DimensionError
from risjoint.linalg import RngStream, khatri_rao
from risjoint.parafac import AlsOptions, als_estimate, als_init, fold, unfold
from risjoint.scene import SceneConfig, make_scene, noiseless_entry, synthesize_received


def scene_and_views(seed, snr=np.inf, **dims):
    cfg = SceneConfig(**dims)
    scene = make_scene(cfg, RngStream(seed))
    rec = synthesize_received(scene.channels, scene.signal, scene.phases, snr, RngStream(seed, 1))
    return scene, unfold(rec)


class TestUnfold:
    def test_scalar(self):
        v = unfold(np.full((1, 1, 1), 3 + 1j))
        assert v.Y1.shape == v.Y2.shape == v.Y3.shape == (1, 1)
        assert v.Y1[0, 0] == v.Y2[0, 0] == v.Y3[0, 0] == 3 + 1j

    def test_index_convention(self):
        gen = np.random.default_rng(0)
        Y = gen.standard_normal((3, 4, 2)) + 1j * gen.standard_normal((3, 4, 2))
        v = unfold(Y)
        K, T, P = Y.shape
        for k in range(K):
            for t in range(T):
                for p in range(P):
                    assert v.Y1[t * P + p, k] == Y[k, t, p]
                    assert v.Y2[p * K + k, t] == Y[k, t, p]
                    assert v.Y3[k * T + t, p] == Y[k, t, p]

    def test_factor_identities(self):
        scene, v = scene_and_views(3, K=2, M=2, N=2, T=3, P=2)
        Hr, He, Phi = scene.channels.Hr, scene.He, scene.phases.Phi
        assert np.max(np.abs(v.Y1 - khatri_rao(He.T, Phi) @ Hr.T)) <= 1e-12
        assert np.max(np.abs(v.Y2 - khatri_rao(Phi, Hr) @ He)) <= 1e-12
        assert np.max(np.abs(v.Y3 - khatri_rao(Hr, He.T) @ Phi.T)) <= 1e-12

    def test_matches_entry_oracle(self):
        scene, v = scene_and_views(4, K=3, M=2, N=3, T=4, P=5)
        K, T, P = v.shape
        for k in range(K):
            for t in range(T):
                for p in range(P):
                    ref = noiseless_entry(scene.channels, scene.He, scene.phases, k, t, p)
                    assert abs(v.Y2[p * K + k, t] - ref) <= 1e-12

    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_fold_round_trip(self, mode):
        gen = np.random.default_rng(mode)
        Y = gen.standard_normal((3, 5, 2)) + 1j * gen.standard_normal((3, 5, 2))
        np.testing.assert_array_equal(fold(unfold(Y), mode), Y)


class TestAlsInit:
    def test_orthogonal_rows(self):
        gen = np.random.default_rng(2)
        Q, _ = np.linalg.qr(gen.standard_normal((6, 6)) + 1j * gen.standard_normal((6, 6)))
        U = Q[:3]  # orthonormal rows
        norms = np.array([5.0, 3.0, 1.0])
        init = als_init(norms[:, None] * U, 3)
        for i in range(3):
            assert np.linalg.norm(init[i]) == pytest.approx(norms[i])
            overlap = abs(np.vdot(init[i], U[i])) / np.linalg.norm(init[i])
            assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_zero_data(self):
        assert not np.any(als_init(np.zeros((6, 5)), 3))

    def test_spans_true_row_space(self):
        scene, v = scene_and_views(7, K=8, M=6, N=4, T=16, P=4)
        He = scene.He
        init = als_init(v.Y2, 4)
        proj = init @ np.linalg.pinv(He) @ He
        assert np.linalg.norm(init - proj) <= 1e-8 * np.linalg.norm(init)

    def test_rank_deficient_stays_finite(self):
        scene, v = scene_and_views(1, K=8, M=2, N=6, T=16, P=8)
        init = als_init(v.Y2, 6)
        assert np.all(np.isfinite(init))
        assert np.all(np.linalg.norm(init, axis=1) > 0)

    def test_too_many_rows(self):
        with pytest.raises(DimensionError):
            als_init(np.ones((4, 3)), 4)


class TestAlsEstimate:
    @pytest.mark.parametrize("seed", range(5))
    def test_noiseless_recovery(self, seed):
        scene, v = scene_and_views(seed, K=8, N=4, M=4, T=16, P=4)
        res = als_estimate(v, scene.phases, AlsOptions())
        Hr, He, _ = align_parafac(res.Hr_hat, res.He_hat, scene.channels.Hr)
        assert res.iterations <= 15
        assert nmse(Hr, scene.channels.Hr) <= 1e-10
        assert nmse(He, scene.He) <= 1e-10

    def test_single_ls_solve_from_true_he(self):
        scene, v = scene_and_views(2, K=8, N=4, M=4, T=16, P=4)
        res = als_estimate(v, scene.phases, AlsOptions(i_max=1), He_init=scene.He)
        assert res.iterations == 1
        assert np.max(np.abs(res.Hr_hat - scene.channels.Hr)) <= 1e-12

    def test_infinite_epsilon_stops_after_one(self):
        scene, v = scene_and_views(2, K=8, N=4, M=4, T=16, P=4)
        res = als_estimate(v, scene.phases, AlsOptions(epsilon=np.inf))
        assert res.iterations == 1 and res.converged

    @pytest.mark.parametrize("seed", range(4))
    def test_residual_non_increasing(self, seed):
        scene, v = scene_and_views(seed, snr=5.0, K=16, N=8, M=6, T=30, P=8)
        res = als_estimate(v, scene.phases, AlsOptions(epsilon=1e-14, i_max=15))
        h = np.array(res.residual_history)
        assert np.all(h[1:] <= h[:-1] * (1 + 1e-10))

    def test_stopping_contract(self):
        scene, v = scene_and_views(9, snr=10.0, K=16, N=8, M=6, T=30, P=8)
        opts = AlsOptions(epsilon=1e-5, i_max=15)
        res = als_estimate(v, scene.phases, opts)
        assert res.iterations <= opts.i_max
        if res.converged:
            assert res.final_delta <= opts.epsilon

    def test_ambiguity_is_diagonal(self):
        scene, v = scene_and_views(11, K=8, N=4, M=4, T=16, P=4)
        res = als_estimate(v, scene.phases, AlsOptions(epsilon=1e-14))
        _, _, report = align_parafac(res.Hr_hat, res.He_hat, scene.channels.Hr)
        assert report.residual <= 1e-8

    def test_random_init(self):
        scene, v = scene_and_views(5, K=8, N=4, M=4, T=16, P=4)
        res = als_estimate(v, scene.phases, AlsOptions(init_mode="random", i_max=50, epsilon=1e-14),
                           rng=RngStream(5))
        Hr, _, _ = align_parafac(res.Hr_hat, res.He_hat, scene.channels.Hr)
        assert nmse(Hr, scene.channels.Hr) <= 1e-8

    def test_random_init_needs_rng(self):
        scene, v = scene_and_views(5, K=8, N=4, M=4, T=16, P=4)
        with pytest.raises(ValueError):
            als_estimate(v, scene.phases, AlsOptions(init_mode="random"))

    def test_phase_rows_must_match(self):
        scene, v = scene_and_views(5, K=8, N=4, M=4, T=16, P=4)
        with pytest.raises(DimensionError):
            als_estimate(v, scene.phases.Phi[:3])

    def test_nmse_improves_with_snr(self):
        errs = {}
        for snr in (0.0, 10.0, 20.0):
            vals = []
            for seed in range(100):
                scene, v = scene_and_views(seed, snr=snr, K=8, N=4, M=4, T=16, P=4)
                res = als_estimate(v, scene.phases)
                Hr, _, _ = align_parafac(res.Hr_hat, res.He_hat, scene.channels.Hr)
                vals.append(nmse(Hr, scene.channels.Hr))
            errs[snr] = np.mean(vals)
        assert errs[0.0] >= errs[10.0] >= errs[20.0]
