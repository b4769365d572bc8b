import numpy as np
import pytest

from SkillRL.align import (
    ALIGN_PRESETS,
    AlignConfig,
    FeatureAligner,
    FeatureStats,
    TapStats,
    feats_reward,
    fit_feature_stats,
    fit_tap_samples,
    load_feature_stats,
    mahalanobis,
    save_feature_stats,
    tap_stats,
    window_means,
)
from SkillRL.env.character import OBS_DIM, part_slices
from SkillRL.misc.errors import ConfigError, InsufficientDataError, ShapeError
from SkillRL.rl import TAP_NAMES, PartwiseCritic

TORSO_ONLY = AlignConfig(weights=(1, 0, 0, 0, 0, 0, 0, 0), reward_weight=0.01)


def unit_stats(dim=2, scale=1.0):
    cov = scale * np.eye(dim)
    return TapStats(mean=np.zeros(dim), cov=cov, inv=np.linalg.inv(cov), count=100)


def test_mahalanobis_values():
    assert mahalanobis(np.array([3.0, 4.0]), unit_stats()) == pytest.approx(5.0)
    assert mahalanobis(np.array([2.0, 0.0]), unit_stats(scale=4.0)) == pytest.approx(1.0)
    assert mahalanobis(np.zeros(2), unit_stats()) == 0.0
    batch = mahalanobis(np.array([[3.0, 4.0], [0.0, 1.0]]), unit_stats())
    assert np.allclose(batch, [5.0, 1.0])
    with pytest.raises(ShapeError):
        mahalanobis(np.zeros(3), unit_stats())


def random_affine(rng, dim):
    q1, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    q2, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    A = q1 @ np.diag(rng.uniform(0.5, 2.0, size=dim)) @ q2
    return A, rng.normal(scale=3.0, size=dim)


def test_mahalanobis_is_affine_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5000, 3))
    base = tap_stats(x, epsilon=0.0)
    f = rng.normal(scale=2.0, size=(8, 3))
    expected = mahalanobis(f, base)
    for _ in range(100):
        A, b = random_affine(rng, 3)
        moved = tap_stats(x @ A.T + b, epsilon=0.0)
        assert np.max(np.abs(mahalanobis(f @ A.T + b, moved) - expected)) <= 1e-6


def test_constant_features_are_regularized():
    stats = tap_stats(np.ones((10, 3)), epsilon=1e-5)
    assert np.allclose(stats.cov, 0.0)
    assert np.allclose(stats.inv, 1e5 * np.eye(3))
    assert np.isfinite(mahalanobis(np.full(3, 1.1), stats))


def test_gaussian_estimates():
    rng = np.random.default_rng(1)
    mean = np.array([1.0, -2.0])
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    stats = tap_stats(rng.multivariate_normal(mean, cov, size=100000))
    assert stats.count == 100000
    assert np.allclose(stats.mean, mean, atol=0.02)
    assert np.allclose(stats.cov, cov, atol=0.03)
    assert np.allclose(stats.inv @ (stats.cov + 1e-5 * np.eye(2)), np.eye(2), atol=1e-8)


def test_tap_stats_needs_enough_samples():
    with pytest.raises(InsufficientDataError):
        tap_stats(np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        tap_stats(np.zeros(5))


def test_window_means():
    f = np.arange(5, dtype=np.float64)[:, None]
    assert np.allclose(window_means(f, 2)[:, 0], [0.5, 1.5, 2.5, 3.5])
    assert np.allclose(window_means(f, 5)[:, 0], [2.0])
    assert window_means(f, 6).shape == (0, 1)


def _torso_stats(dim=2):
    return FeatureStats(taps={TAP_NAMES[0]: unit_stats(dim)}, window=4)


def test_feats_reward_threshold_and_scale():
    stats = _torso_stats()
    at_one = {"f0_torso": np.tile([0.6, 0.8], (4, 1))}
    assert feats_reward(at_one, stats, TORSO_ONLY) == pytest.approx(-0.01)
    below = {"f0_torso": np.tile([0.3, 0.4], (4, 1))}
    assert feats_reward(below, stats, TORSO_ONLY) == 0.0
    at_two = {"f0_torso": np.tile([1.2, 1.6], (4, 1))}
    assert feats_reward(at_two, stats, TORSO_ONLY) == pytest.approx(-0.02)
    # the window mean is what counts
    swinging = {"f0_torso": np.array([[0.0, 0.0], [1.2, 1.6]])}
    assert feats_reward(swinging, stats, TORSO_ONLY) == pytest.approx(-0.01)


def test_feats_reward_batch_and_missing_stats():
    stats = _torso_stats()
    batch = {"f0_torso": np.stack([np.tile([0.6, 0.8], (4, 1)), np.zeros((4, 2))])}
    assert np.allclose(feats_reward(batch, stats, TORSO_ONLY), [-0.01, 0.0])
    with pytest.raises(InsufficientDataError):
        feats_reward({"f0_torso": np.zeros((4, 2))}, FeatureStats(taps={}), TORSO_ONLY)


def test_align_presets():
    config = AlignConfig.from_preset("f0_no_torso")
    assert config.weighted_taps == TAP_NAMES[1:5]
    assert config.reward_weight == ALIGN_PRESETS["f0_no_torso"][1]
    assert AlignConfig.from_preset("f0_f1_f2").weighted_taps == TAP_NAMES[:7]
    with pytest.raises(ConfigError) as e:
        AlignConfig.from_preset("f3_only")
    assert e.value.key == "align.preset"


def test_align_config_overrides(config):
    align = dict(config["align"])
    align.update({"weights": [0, 0, 0, 0, 0, 0, 0, 1], "reward_weight": 0.1, "threshold": 2.0})
    merged = AlignConfig.from_config(align)
    assert merged.weighted_taps == ("f3", )
    assert merged.reward_weight == 0.1
    assert merged.thresholds == (2.0, ) * len(TAP_NAMES)
    align["weights"] = [1, 1]
    with pytest.raises(ConfigError) as e:
        AlignConfig.from_config(align)
    assert e.value.key == "align.weights"


def _walking_critic():
    return PartwiseCritic(part_slices(), latent_dim=4, part_dim=8, hidden_dims=[16, 16, 8])


def _sequences(n=3, T=40):
    rng = np.random.default_rng(2)
    z = np.tile(np.eye(4)[0], (T, 1))
    return [(rng.normal(size=(T, OBS_DIM)), z) for _ in range(n)]


def test_fit_feature_stats_and_save(tmp_path):
    critic = _walking_critic()
    stats = fit_feature_stats(critic, _sequences(), window=4)
    assert list(stats.taps) == list(TAP_NAMES)
    assert stats["f3"].count == 3 * 37
    assert stats["f1"].dim == critic.tap_dims["f1"]

    path = save_feature_stats(stats, str(tmp_path / "stats.skf"), {"config_hash": "abc"})
    loaded = load_feature_stats(path, "abc")
    assert loaded.window == 4
    for name in TAP_NAMES:
        assert np.array_equal(loaded[name].inv, stats[name].inv)
        assert loaded[name].count == stats[name].count

    partial = fit_tap_samples({"f3": np.random.default_rng(0).normal(size=(20, 8))})
    assert list(partial.taps) == ["f3"]


def test_feature_aligner_reward(config):
    critic = _walking_critic()
    stats = fit_feature_stats(critic, _sequences(), window=4)
    aligner = FeatureAligner(critic, stats, AlignConfig.from_config(config["align"]))
    assert all(not p.requires_grad for p in critic.parameters())
    windows = [np.random.default_rng(3).normal(size=(6, OBS_DIM)) * 5.0, np.zeros((2, OBS_DIM))]
    rewards = aligner.reward(windows, z=np.tile(np.eye(4)[1], (2, 1)))
    assert rewards.shape == (2, )
    assert np.all(rewards <= 0.0)

    with pytest.raises(InsufficientDataError):
        FeatureAligner(critic, FeatureStats(taps={}), TORSO_ONLY)
