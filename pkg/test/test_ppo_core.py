import itertools

import numpy as np
import pytest
import torch

from SkillRL.env.character import OBS_DIM, part_slices
from SkillRL.misc.errors import ShapeError
from SkillRL.net import SkillAdam
from SkillRL.rl import (
    TAP_NAMES,
    Critic,
    GaussianActor,
    PartwiseCritic,
    PpoConfig,
    RolloutBuffer,
    compute_gae,
    ppo_update,
)


def test_gae_single_step():
    adv, ret = compute_gae(np.array([1.0]), np.array([0.0, 0.0]), np.array([0.0]), 0.99, 0.95)
    assert adv[0] == pytest.approx(1.0)
    assert ret[0] == pytest.approx(1.0)


def test_gae_two_steps():
    adv, _ = compute_gae(np.ones(2), np.zeros(3), np.zeros(2), 0.99, 0.95)
    assert np.allclose(adv, [1.9405, 1.0])


def test_gae_stops_at_episode_end():
    rewards = np.array([1.0, 5.0])
    values = np.array([0.5, 2.0, 3.0])
    adv, ret = compute_gae(rewards, values, np.array([1.0, 0.0]), 0.99, 0.95)
    assert adv[0] == pytest.approx(1.0 - 0.5)
    assert adv[1] == pytest.approx(5.0 + 0.99 * 3.0 - 2.0)
    assert np.allclose(ret, adv + values[:-1])


def test_gae_batched_envs():
    rewards = np.ones([3, 2])
    adv, _ = compute_gae(rewards, np.zeros([4, 2]), np.zeros([3, 2]), 1.0, 1.0)
    assert np.allclose(adv[:, 0], [3.0, 2.0, 1.0])
    assert np.allclose(adv[:, 0], adv[:, 1])


def test_gae_shape_mismatch():
    with pytest.raises(ShapeError):
        compute_gae(np.ones(3), np.zeros(3), np.zeros(3), 0.99, 0.95)
    with pytest.raises(ShapeError):
        compute_gae(np.ones(3), np.zeros(4), np.zeros(2), 0.99, 0.95)


def discounted_advantage(rewards, values, dones, gamma):
    horizon = len(rewards)
    adv = np.zeros(horizon)
    for t in range(horizon):
        ret, discount = 0.0, 1.0
        for k in range(t, horizon):
            ret += discount * rewards[k]
            discount *= gamma
            if dones[k]:
                break
        else:
            ret += discount * values[horizon]
        adv[t] = ret - values[t]
    return adv


def test_gae_without_decay_is_the_discounted_return():
    rng = np.random.default_rng(0)
    for pattern in itertools.product([0.0, 1.0], repeat=5):
        dones = np.array(pattern)
        rewards = rng.normal(size=5)
        values = rng.normal(size=6)
        adv, ret = compute_gae(rewards, values, dones, 0.9, 1.0)
        expected = discounted_advantage(rewards, values, dones, 0.9)
        assert np.max(np.abs(adv - expected)) <= 1e-12
        assert np.max(np.abs(ret - (expected + values[:-1]))) <= 1e-12


def test_ppo_config_validation():
    with pytest.raises(ValueError):
        PpoConfig(gamma=0.0)
    with pytest.raises(ValueError):
        PpoConfig(lam=1.5)
    with pytest.raises(ValueError):
        PpoConfig(minibatch=0)


def _batch(n=16, in_dim=5, act_dim=3, advantage=None):
    gen = torch.Generator().manual_seed(0)
    return {
        "actor_in": torch.randn(n, in_dim, generator=gen),
        "obs": torch.randn(n, in_dim, generator=gen),
        "action": torch.randn(n, act_dim, generator=gen),
        "logp": torch.zeros(n),
        "advantage": torch.zeros(n) if advantage is None else advantage,
        "return": torch.ones(n),
    }


def test_ppo_zero_advantage_keeps_actor():
    actor = GaussianActor(5, 3, std=0.1, hidden_dims=[8])
    critic = Critic(5, [8])
    before = [p.detach().clone() for p in actor.parameters()]
    critic_before = [p.detach().clone() for p in critic.parameters()]
    config = PpoConfig(epochs=2, minibatch=4)
    stats = ppo_update(
        actor, critic, _batch(), config, SkillAdam(actor.parameters(), lr=1e-3),
        SkillAdam(critic.parameters(), lr=1e-3), torch.Generator().manual_seed(0),
    )
    for a, b in zip(before, actor.parameters()):
        assert torch.equal(a, b)
    assert any(not torch.equal(a, b) for a, b in zip(critic_before, critic.parameters()))
    assert stats["aborted"] == 0
    assert stats["policy_loss"] == pytest.approx(0.0, abs=1e-7)
    assert stats["value_loss"] > 0


def test_ppo_aux_loss_and_latent():
    actor = GaussianActor(5, 3, std=0.1, hidden_dims=[8])
    critic = Critic(7, [8])
    batch = _batch(advantage=torch.randn(16, generator=torch.Generator().manual_seed(1)))
    batch["latent"] = torch.randn(16, 2)
    calls = []

    def aux(mb):
        calls.append(mb["actor_in"].shape[0])
        return torch.zeros(())

    ppo_update(
        actor, critic, batch, PpoConfig(epochs=1, minibatch=8), SkillAdam(actor.parameters()),
        SkillAdam(critic.parameters()), torch.Generator().manual_seed(0), aux_loss=aux,
    )
    assert calls == [8, 8]


def test_ppo_aborts_on_non_finite_loss():
    actor = GaussianActor(5, 3, std=0.1)
    critic = Critic(5)
    batch = _batch()
    batch["return"][0] = float("nan")
    stats = ppo_update(
        actor, critic, batch, PpoConfig(epochs=1, minibatch=16), SkillAdam(actor.parameters()),
        SkillAdam(critic.parameters()), torch.Generator().manual_seed(0),
    )
    assert stats["aborted"] == 1


def test_gaussian_actor():
    actor = GaussianActor(4, 2, std=0.5, hidden_dims=[8])
    obs = torch.randn(3, 4)
    action, logp, info = actor.sample(obs, deterministic=True)
    assert torch.equal(action, info["mean"])
    eval_logp, entropy = actor.evaluate(obs, action)
    assert torch.allclose(logp, eval_logp)
    assert entropy.shape == (3, )
    a1, _, _ = actor.sample(obs, generator=torch.Generator().manual_seed(5))
    a2, _, _ = actor.sample(obs, generator=torch.Generator().manual_seed(5))
    assert torch.equal(a1, a2)
    with pytest.raises(ValueError):
        GaussianActor(4, 2, std=0.0)


def test_partwise_critic_taps():
    critic = PartwiseCritic(part_slices(), latent_dim=4, part_dim=8, hidden_dims=[16, 16, 8])
    obs = torch.zeros(2, OBS_DIM)
    z = torch.zeros(2, 4)
    taps, value = critic.features(obs, z)
    assert list(taps) == list(TAP_NAMES)
    assert {name: t.shape[-1] for name, t in taps.items()} == dict(critic.tap_dims)
    assert value.shape == (2, )
    again, _ = critic.features(obs, z)
    for name in TAP_NAMES:
        assert torch.equal(taps[name], again[name])
        assert torch.all(taps[name] >= 0)
    with pytest.raises(ValueError):
        critic.features(obs)
    with pytest.raises(ValueError):
        critic.features(torch.zeros(2, 10), z)


def test_rollout_buffer():
    buffer = RolloutBuffer(3, 2, {"obs": {"shape": [4], "dtype": np.float32}})
    for t in range(3):
        buffer.add_sample({
            "obs": np.full([2, 4], t), "reward": np.ones(2), "done": np.zeros(2), "value": np.zeros(2),
        })
    assert buffer.full
    with pytest.raises(ShapeError):
        buffer.add_sample({"obs": np.zeros([2, 4]), "reward": np.ones(2), "done": np.zeros(2), "value": np.zeros(2)})
    with pytest.raises(ShapeError):
        buffer.flatten()
    buffer.finish(np.zeros(2), 1.0, 1.0)
    batch = buffer.flatten()
    assert batch["obs"].shape == (6, 4)
    assert batch["advantage"].shape == (6, )
    assert batch["return"][0].item() == pytest.approx(3.0)
    assert batch["obs"].dtype == torch.float32

    buffer.reset()
    with pytest.raises(ShapeError):
        buffer.add_sample({"obs": np.zeros([3, 4]), "reward": np.ones(3), "done": np.zeros(3), "value": np.zeros(3)})
    with pytest.raises(ShapeError):
        buffer.add_sample({"obs": np.zeros([2, 4]), "reward": np.ones(2), "value": np.zeros(2)})
    with pytest.raises(ShapeError):
        buffer.finish(np.zeros(2), 0.99, 0.95)


def test_ppo_solves_a_one_dimensional_bandit():
    gen = torch.Generator().manual_seed(0)
    actor = GaussianActor(1, 1, std=0.3)
    critic = Critic(1)
    actor_optim = SkillAdam(actor.parameters(), lr=1e-2)
    critic_optim = SkillAdam(critic.parameters(), lr=1e-2)
    config = PpoConfig(epochs=1, minibatch=256)
    obs = torch.ones(256, 1)
    for _ in range(500):
        with torch.no_grad():
            action, logp, _ = actor.sample(obs, generator=gen)
        reward = -(action[:, 0] - 2.0)**2
        batch = {
            "actor_in": obs, "obs": obs, "action": action, "logp": logp,
            "advantage": reward, "return": reward,
        }
        stats = ppo_update(actor, critic, batch, config, actor_optim, critic_optim, gen)
        assert stats["aborted"] == 0
    with torch.no_grad():
        mean = actor(torch.ones(1, 1)).item()
    assert mean == pytest.approx(2.0, abs=0.1)


def point_mass_rollout(actor, goals, generator, deterministic=False, horizon=20):
    """A point on a line pushed by a clipped force towards `goals`; reward is minus the distance. """
    pos = np.zeros_like(goals)
    steps = []
    for _ in range(horizon):
        obs = torch.as_tensor((goals - pos)[:, None], dtype=torch.float32)
        with torch.no_grad():
            action, logp, _ = actor.sample(obs, deterministic, generator)
        pos = pos + 0.1 * np.clip(action[:, 0].numpy().astype(np.float64), -1.0, 1.0)
        steps.append((obs, action, logp, -np.abs(goals - pos)))
    return steps


@pytest.mark.slow
def test_ppo_improves_point_mass_return():
    rng = np.random.default_rng(0)
    gen = torch.Generator().manual_seed(0)
    actor = GaussianActor(1, 1, std=0.3, hidden_dims=[32])
    critic = Critic(1, [32])
    actor_optim = SkillAdam(actor.parameters(), lr=3e-3)
    critic_optim = SkillAdam(critic.parameters(), lr=3e-3)
    config = PpoConfig(epochs=4, minibatch=160)
    eval_goals = rng.uniform(-1.0, 1.0, size=256)

    def evaluate():
        steps = point_mass_rollout(actor, eval_goals, gen, deterministic=True)
        return float(np.mean(sum(step[3] for step in steps)))

    baseline = evaluate()
    horizon, num_envs = 20, 32
    buffer = RolloutBuffer(horizon, num_envs, {
        "obs": {"shape": [1], "dtype": np.float32},
        "action": {"shape": [1], "dtype": np.float32},
        "logp": {"shape": [], "dtype": np.float32},
    })
    for _ in range(200):
        buffer.reset()
        steps = point_mass_rollout(actor, rng.uniform(-1.0, 1.0, size=num_envs), gen, horizon=horizon)
        for t, (obs, action, logp, reward) in enumerate(steps):
            with torch.no_grad():
                value = critic(obs).numpy()
            buffer.add_sample({
                "obs": obs.numpy(), "action": action.numpy(), "logp": logp.numpy(), "reward": reward,
                "done": np.full(num_envs, float(t == horizon - 1)), "value": value,
            })
        buffer.finish(np.zeros(num_envs), 0.99, 0.95)
        batch = buffer.flatten(["obs", "action", "logp"])
        batch["actor_in"] = batch["obs"]
        ppo_update(actor, critic, batch, config, actor_optim, critic_optim, gen)
    trained = evaluate()
    assert baseline < 0
    assert trained - baseline >= 0.5 * abs(baseline)
