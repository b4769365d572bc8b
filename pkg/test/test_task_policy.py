import os
import mock

import numpy as np
import pytest
import torch

from SkillRL.data import reference_walk_dataset
from SkillRL.env.character import OBS_DIM
from SkillRL.env.grasp_env import TASK_OBS_DIM, GraspEnv
from SkillRL.misc.errors import CheckpointError
from SkillRL.net import save_checkpoint
from SkillRL.skill.space import SkillSpace
from SkillRL.task import (
    RewardParams,
    Stage,
    StageState,
    TaskObservables,
    goal_reward,
    grasp_reward,
    location_reward,
    reach_reward,
    reach_target,
    stage_transition,
    total_reward,
)
from SkillRL.task.episode import EpisodeStats, run_task_episodes
from SkillRL.task.policy import HighLevelPolicy, load_task_policy
from SkillRL.task.trainer import TaskTrainer


def observables(root=(0.0, 0.81), palm=(0.3, 1.0), obj=(2.0, 0.55), init_height=0.55, **kwargs):
    values = dict(
        root_pos=np.array(root), root_vel=np.zeros(2), root_angle=0.0, facing=1,
        palm=np.array(palm), finger_tips=np.array([palm, palm]), object_pos=np.array(obj),
        object_vel=np.zeros(2), object_init_height=init_height, object_size=0.1,
        table_width=0.6, goal_x=0.0, in_contact=False,
    )
    values.update(kwargs)
    return TaskObservables(**values)


def test_location_reward_perfect_tracking():
    params = RewardParams(boost_factor=1.0)
    r = location_reward([0.0], [1.0], [1.0], [1e-6], 1.0, params)
    assert r == pytest.approx(1.1, abs=1e-6)


def test_location_reward_terms():
    only_pos = RewardParams(w_vel=0.0, w_face=0.0)
    assert location_reward([0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0], 1.0, only_pos) == pytest.approx(0.3 * np.exp(-1.0))
    only_vel = RewardParams(w_pos=0.0, w_face=0.0)
    assert location_reward([0.0], [1.0], [-1.0], [3.0], 1.0, only_vel) == 0.0
    far = location_reward([0.0], [1.0], [1.0], [0.6], 1.0)
    near = location_reward([0.0], [1.0], [1.0], [0.4], 1.0)
    unboosted = location_reward([0.0], [1.0], [1.0], [0.4], 1.0, RewardParams(boost_factor=1.0))
    assert near == pytest.approx(1.5 * unboosted)
    assert near > far


def test_reach_reward():
    target = reach_target([2.0, 0.55], 0.6, 1)
    assert np.allclose(target, [1.8, 0.75])
    assert reach_reward(target, [2.0, 0.55], 0.6, 1) == pytest.approx(1.0)
    assert reach_reward(target + [0.0, 1.0], [2.0, 0.55], 0.6, 1) == pytest.approx(np.exp(-1.0))
    # approaching from the other side mirrors the target
    assert np.allclose(reach_target([2.0, 0.55], 0.6, -1), [2.2, 0.75])


def test_grasp_reward():
    assert grasp_reward(0.0, 0.0, 0.0, False, 0.0) == pytest.approx(2.0)
    assert grasp_reward(0.0, 0.0, 0.2, True, 0.0) == pytest.approx(2.0 + 1.2)
    assert grasp_reward(0.0, 0.0, 0.2, False, 0.0) == pytest.approx(2.0)
    assert grasp_reward(0.0, 0.0, 0.0, False, 30.0) == pytest.approx(2.0)
    assert grasp_reward(0.0, 0.0, 0.0, False, 40.0) == pytest.approx(1.0)
    assert grasp_reward(1.0, 0.5, 0.0, False, 0.0) == pytest.approx(1.0)


def test_goal_reward():
    assert goal_reward(1.1, 0.0, 0.0) == pytest.approx(13.8)
    assert goal_reward(1.1, quality=-2.0) == pytest.approx(3.3)
    assert goal_reward(1.1, quality=4.0) == pytest.approx(18.3)


def test_total_reward():
    r = total_reward(1.1, 0.5, 0.5, Stage.LOCOMOTION)
    assert r == pytest.approx(0.4 * 1.1 + 0.6 * np.log(2.0), abs=1e-6)
    assert r == pytest.approx(0.8559, abs=1e-4)
    # outside Locomotion the walking prior weight moves to the task reward
    assert total_reward(1.1, 0.5, None, Stage.GRASP) == pytest.approx(0.8 * 1.1 + 0.2 * np.log(2.0), abs=1e-6)
    with pytest.raises(ValueError):
        total_reward(1.1, 0.5, None, Stage.LOCOMOTION)


def test_locomotion_to_pregrasp():
    state = StageState.initial(0.55)
    same, bonus = stage_transition(state, observables(root=(0.5, 0.81), obj=(2.0, 0.55)))
    assert same.stage == Stage.LOCOMOTION and bonus == 0.0
    nxt, bonus = stage_transition(state, observables(root=(1.1, 0.81), obj=(2.0, 0.55)))
    assert nxt.stage == Stage.PREGRASP
    assert bonus == 1.0


def test_pregrasp_needs_palm_above_object():
    state = StageState(Stage.PREGRASP, (True, True, False, False), 0.55)
    # object top at 0.6
    nxt, bonus = stage_transition(state, observables(palm=(2.0, 0.65)))
    assert nxt.stage == Stage.GRASP and bonus == 1.0
    for palm in [(2.15, 0.65), (2.0, 0.75), (2.0, 0.58)]:
        same, bonus = stage_transition(state, observables(palm=palm))
        assert same.stage == Stage.PREGRASP and bonus == 0.0


def test_lift_reaches_postgrasp_once():
    state = StageState(Stage.GRASP, (True, True, True, False), 0.55)
    same, _ = stage_transition(state, observables(obj=(2.0, 0.6)))
    assert same.stage == Stage.GRASP
    nxt, bonus = stage_transition(state, observables(obj=(2.0, 0.67)))
    assert nxt.stage == Stage.POSTGRASP and bonus == 1.0
    again, bonus = stage_transition(nxt, observables(obj=(2.0, 0.8)))
    assert again.stage == Stage.POSTGRASP and bonus == 0.0


def scripted_episode():
    """Walk up to a box at x=2 on a 0.55 m table, lower the palm onto it, lift it, drop it and lift again. """
    frames = []
    for x in np.arange(0, 17) * 0.1:
        frames.append(observables(root=(x, 0.81), palm=(x + 0.3, 1.3)))
    for y in [1.0, 0.8, 0.75, 0.65, 0.62]:
        frames.append(observables(root=(1.6, 0.81), palm=(2.0, y)))
    for h in [0.55, 0.58, 0.64, 0.67, 0.75, 0.55, 0.8]:
        frames.append(observables(root=(1.6, 0.81), palm=(2.0, h + 0.1), obj=(2.0, h)))
    return frames


def test_scripted_episode_passes_each_stage_once():
    state = StageState.initial(0.55)
    transitions, bonuses = [], []
    for step, obs in enumerate(scripted_episode()):
        nxt, bonus = stage_transition(state, obs)
        if nxt.stage != state.stage:
            transitions.append((step, state.stage, nxt.stage))
        bonuses.append(bonus)
        state = nxt
    # root 0.9 m from the box, palm 0.05 m over its top, box lifted 0.12 m
    assert transitions == [
        (11, Stage.LOCOMOTION, Stage.PREGRASP),
        (20, Stage.PREGRASP, Stage.GRASP),
        (25, Stage.GRASP, Stage.POSTGRASP),
    ]
    assert [step for step, bonus in enumerate(bonuses) if bonus > 0] == [11, 20, 25]
    assert sum(bonuses) == pytest.approx(3.0)
    assert state.stage == Stage.POSTGRASP
    assert all(state.entered)


def test_reward_params_reject_negative():
    with pytest.raises(ValueError):
        RewardParams(w_pos=-0.1)


def test_high_level_policy_emits_unit_latents(config):
    policy = HighLevelPolicy.from_config(config)
    obs = np.random.default_rng(0).normal(size=(5, TASK_OBS_DIM))
    raw, logp, z = policy.act(obs, generator=torch.Generator().manual_seed(0))
    assert raw.shape == z.shape == (5, 4)
    assert logp.shape == (5, )
    assert np.allclose(np.linalg.norm(z, axis=-1), 1.0)
    _, _, z1 = policy.act(obs, deterministic=True)
    _, _, z2 = policy.act(obs, deterministic=True)
    assert np.array_equal(z1, z2)
    assert policy.value(obs).shape == (5, )


def test_load_task_policy_checks_kind(config, tmp_path):
    policy = HighLevelPolicy.from_config(config)
    path = save_checkpoint(str(tmp_path / "policy.skf"), policy.tensors(), {"kind": "task", "config_hash": "h"})
    loaded, meta = load_task_policy(path, config, "h")
    for a, b in zip(policy.parameters(), loaded.parameters()):
        assert torch.equal(a, b)
    wrong = save_checkpoint(str(tmp_path / "skill.skf"), policy.tensors(), {"kind": "skill"})
    with pytest.raises(CheckpointError):
        load_task_policy(wrong, config)


def test_grasp_env_reset_and_step(config, character):
    env = GraspEnv.from_config(config, character=character)
    obs, info = env.reset(seed=0, options={"table_height": 0.6})
    assert obs.shape == (TASK_OBS_DIM, ) == env.observation_space.shape
    assert info["scene"].table_height == pytest.approx(0.6)
    assert info["stage"] == Stage.LOCOMOTION
    assert obs[OBS_DIM + 9] == 1.0
    assert np.array_equal(obs[:OBS_DIM], info["char_obs"])

    obs, reward, terminated, truncated, info = env.step(np.zeros(9))
    assert np.isfinite(reward)
    assert info["feet"].shape == (4, 2)
    assert info["foot_contact"].shape == (4, )
    assert {"bonus", "lift", "at_goal", "upright", "fallen", "diverged"} <= set(info)
    assert not truncated


def test_grasp_env_snapshot_keeps_stage(config, character):
    env = GraspEnv.from_config(config, character=character)
    env.reset(seed=1)
    env.step(np.zeros(9))
    snap = env.snapshot()
    expected, *_ = env.step(np.zeros(9))
    env.reset(seed=5)
    env.restore(snap)
    assert env.stage_state.stage == Stage(snap["stage"])
    obs, *_ = env.step(np.zeros(9))
    assert np.array_equal(obs, expected)


def _info(stage=0, lift=0.0, x=0.0, at_goal=False, fallen=False):
    return {
        "stage": stage, "lift": lift, "at_goal": at_goal, "upright": not fallen, "fallen": fallen,
        "feet": np.array([[x, 0.0]] * 4), "foot_contact": np.ones(4, dtype=bool), "char_obs": np.zeros(OBS_DIM),
    }


def test_episode_stats():
    stats = EpisodeStats(table_height=0.5)
    stats.update(0, _info(x=0.0), 0.5, 1 / 30, 0.1)
    stats.update(0, _info(x=0.01), 0.5, 1 / 30, 0.1)
    stats.update(2, _info(stage=3, lift=0.15, x=0.01, at_goal=True), 0.5, 1 / 30, 0.1)
    row = stats.row()
    assert row["grasp_success"] == 1.0
    assert row["goal_success"] == 1.0
    assert row["max_stage"] == 3
    assert row["loco_r_p1"] == pytest.approx(np.log(2.0))
    assert row["mean_log_r_p1"] == pytest.approx(np.log(np.log(2.0)))
    # 0.3 m/s over contact: the first move skates, the second step stands still
    assert row["contact_frames"] == 8
    assert row["skate_frames"] == 4

    stats.update(3, _info(stage=3, lift=0.15, at_goal=True, fallen=True), 0.5, 1 / 30, 0.1)
    assert not stats.goal_success()
    assert stats.fell


def test_episode_stats_lift_threshold():
    stats = EpisodeStats(table_height=0.5)
    stats.update(2, _info(stage=2, lift=0.099), 0.5, 1 / 30, 0.1)
    assert not stats.grasp_success(0.1)
    assert stats.grasp_success(0.05)


def test_run_task_episodes_is_deterministic(config, character):
    space = SkillSpace.from_config(config)
    policy = HighLevelPolicy.from_config(config)
    options = [{"table_height": 0.5}, {"table_height": 0.7}]
    first = run_task_episodes(policy, space, config, [0, 1], options, record=True, character=character)
    second = run_task_episodes(policy, space, config, [0, 1], options, record=True, character=character)
    assert len(first) == 2
    for a, b in zip(first, second):
        np.testing.assert_equal(a.row(), b.row())
        assert 1 <= a.steps <= config["task"]["episode_length"]
        assert len(a.observations) == a.steps + 1
    assert [s.table_height for s in first] == pytest.approx([0.5, 0.7])


def reporting_stage(env, stage):
    step = env.step

    def wrapped(action):
        obs, reward, terminated, truncated, info = step(action)
        return obs, reward, terminated, truncated, dict(info, stage=int(stage))
    return wrapped


def test_task_reward_is_weighted_by_the_reached_stage(config, character, run_logger):
    walk = reference_walk_dataset(config, character=character)
    trainer = TaskTrainer(config, SkillSpace.from_config(config), walk, run_logger, seed=0, character=character)
    trainer.start()
    for env in trainer.envs:
        env.step = reporting_stage(env, Stage.PREGRASP)
    with mock.patch("SkillRL.task.trainer.total_reward", side_effect=total_reward) as weighted:
        trainer.collect(torch.Generator().manual_seed(0))
    assert weighted.call_count > 0
    for call in weighted.call_args_list:
        r_goal, d, d_walk, stage, params = call.args
        assert stage == Stage.PREGRASP
        assert d_walk is None


@pytest.mark.slow
def test_task_trainer_smoke(config, character, run_logger, tmp_path):
    walk = reference_walk_dataset(config, character=character)
    space = SkillSpace.from_config(config)
    trainer = TaskTrainer(config, space, walk, run_logger, seed=0, config_hash="0123abcd", character=character)
    path = trainer.train(2, checkpoint_dir=str(tmp_path / "ckpt"))
    assert os.path.basename(path) == "task_000002.skf"
    policy, meta = load_task_policy(path, config, "0123abcd")
    assert meta["iteration"] == 2
    assert all(p.requires_grad is False for p in trainer.space.parameters())
    header = open(os.path.join(run_logger.log_dir, "metrics.csv")).readline().strip().split(",")
    assert any(name.startswith("task/") for name in header)


@pytest.mark.slow
def test_task_trainer_resume_matches_uninterrupted(config, character, run_logger, tmp_path):
    walk = reference_walk_dataset(config, character=character)
    space = SkillSpace.from_config(config)
    full = TaskTrainer(config, space, walk, run_logger, seed=0, character=character)
    full.train(2, checkpoint_dir=str(tmp_path / "ckpt"))

    resumed = TaskTrainer(config, space, walk, run_logger, seed=0, character=character)
    resumed.load(str(tmp_path / "ckpt" / "task_000001.skf"))
    assert resumed.iteration == 1
    resumed.train(2)
    for a, b in zip(full.policy.parameters(), resumed.policy.parameters()):
        assert torch.allclose(a, b)
