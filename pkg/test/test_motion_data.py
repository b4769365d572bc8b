import os

import numpy as np
import pytest

from SkillRL.data import (
    Dataset,
    MotionClip,
    PoseFrame,
    clip_roundtrip,
    generate_grasp_pose,
    generate_reach_clip,
    load_clip,
    load_dataset,
    reference_walk_dataset,
    sample_transition,
    save_dataset,
    slerp_interpolate,
    synth_gait,
    two_link_ik,
)
from SkillRL.env.sim2d import Scene
from SkillRL.exp.config import get_profile
from SkillRL.math import shortest_arc_lerp, wrap_angle
from SkillRL.misc.errors import ClipFormatError, InsufficientDataError, ParameterError, UnreachableError


def make_clip(T=5, weight=1.0, name="clip"):
    times = np.arange(T) / 30
    return MotionClip(
        times=times, root_pos=np.stack([times, np.full(T, 0.8)], axis=1), root_angle=np.linspace(0, 0.1, T),
        joint_angles=np.tile(np.linspace(-0.3, 0.3, 9), (T, 1)), fps=30, weight=weight, name=name,
    )


CLIP_YAML = """version: 1
name: bad
fps: 30
weight: {weight}
source: mocap-analog
frames:
{frames}
"""
ROW = "- [0.0, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.75]"


def test_clip_roundtrip_is_exact(tmp_path):
    clip = synth_gait(0.7, 1.0, 1.0)
    loaded = clip_roundtrip(clip, str(tmp_path / "walk.yaml"))
    assert loaded.equals(clip)
    assert loaded.meta["stride"] == 0.7


@pytest.mark.parametrize("weight, frames", [(0.0, ROW + "\n" + ROW), (-1.0, ROW + "\n" + ROW), (1.0, ROW)])
def test_invalid_clip_file(tmp_path, weight, frames):
    path = tmp_path / "bad.yaml"
    path.write_text(CLIP_YAML.format(weight=weight, frames=frames))
    with pytest.raises(ClipFormatError) as e:
        load_clip(str(path))
    assert e.value.path == str(path)


def test_clip_format_error_positions(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(CLIP_YAML.format(weight=1.0, frames=ROW + "\n- [0.1, 0.0, oops, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.75]"))
    with pytest.raises(ClipFormatError) as e:
        load_clip(str(path))
    assert e.value.position.startswith("8:")

    path.write_text("version: 1\nframes: [unclosed\n")
    with pytest.raises(ClipFormatError):
        load_clip(str(path))
    with pytest.raises(ClipFormatError):
        load_clip(str(tmp_path / "missing.yaml"))


def test_clip_in_memory_validation():
    with pytest.raises(ClipFormatError):
        make_clip(T=1)
    with pytest.raises(ClipFormatError):
        make_clip(weight=0.0)
    clip = make_clip()
    with pytest.raises(ClipFormatError):
        MotionClip(clip.times, clip.root_pos, clip.root_angle, clip.joint_angles, fps=30, source="unknown")


def test_single_clip_always_chosen(rng):
    dataset = Dataset([make_clip()])
    for _ in range(20):
        c, f = dataset.sample_index(rng)
        assert c == 0
        assert 0 <= f < 4
    a, b = sample_transition(dataset, rng)
    assert b.time - a.time == pytest.approx(1 / 30)


def test_weighted_sampling_frequencies(rng):
    dataset = Dataset([make_clip(weight=3.0, name="a"), make_clip(weight=1.0, name="b")])
    assert np.allclose(dataset.weights, [0.75, 0.25])
    c, f = dataset.sample_indices(rng, 100000)
    assert np.mean(c == 0) == pytest.approx(0.75, abs=0.01)
    assert f.max() < 4


def test_empty_dataset_sampling(rng):
    with pytest.raises(InsufficientDataError):
        Dataset([]).sample_index(rng)


def test_dataset_save_load(tmp_path):
    dataset = Dataset([make_clip(name="a"), make_clip(weight=2.0, name="b")])
    save_dataset(dataset, str(tmp_path))
    loaded = load_dataset(str(tmp_path))
    assert loaded.hash() == dataset.hash()
    assert len(load_dataset(str(tmp_path), sources=["interpolated"])) == 0
    with pytest.raises(InsufficientDataError):
        load_dataset(str(tmp_path / "nothing"))


def test_normalized_keeps_ratios():
    dataset = Dataset([make_clip(weight=3.0), make_clip(weight=1.0)]).normalized()
    assert dataset.total_weight == pytest.approx(1.0)
    assert dataset.raw_weights[0] == pytest.approx(0.75)


def test_shortest_arc():
    assert wrap_angle(np.pi) == pytest.approx(-np.pi)
    # from 3 rad to -3 rad the short way crosses pi
    assert shortest_arc_lerp(3.0, -3.0, 0.5) == pytest.approx(3.0 + (2 * np.pi - 6.0) / 2)


def test_slerp_interpolate_endpoints_and_midpoint():
    a = PoseFrame(root_pos=np.array([0.0, 0.8]), root_angle=0.0, joint_angles=np.zeros(9))
    b = PoseFrame(root_pos=np.array([1.0, 0.6]), root_angle=0.4, joint_angles=np.ones(9))
    clip = slerp_interpolate(a, b, T=10, clamp_feet=False)
    assert len(clip) == 11
    assert clip.source == "interpolated"
    assert np.array_equal(clip.joint_angles[0], a.joint_angles)
    assert np.array_equal(clip.joint_angles[-1], b.joint_angles)
    assert np.array_equal(clip.root_pos[-1], b.root_pos)
    assert np.allclose(clip.joint_angles[5], 0.5)
    assert clip.root_angle[5] == pytest.approx(0.2)
    with pytest.raises(ParameterError):
        slerp_interpolate(a, b, T=1)


def test_slerp_interpolate_clamps_feet(character):
    a = PoseFrame(root_pos=np.array([0.0, 2.0]), root_angle=0.0, joint_angles=character.model.rest_pose)
    clip = slerp_interpolate(a, a, T=4, character=character)
    assert np.allclose(clip.root_pos[:, 1], character.hip_height)


def test_synth_gait():
    clip = synth_gait(0.7, 1.4, 10, fps=30)
    assert len(clip) == 300
    assert clip.source == "mocap-analog"
    # root advances at stride * cadence
    assert clip.root_pos[-1, 0] - clip.root_pos[0, 0] == pytest.approx(0.98 * (299 / 30))
    # front and rear legs are half a cycle apart
    assert not np.allclose(clip.joint_angles[:, 0], clip.joint_angles[:, 3])


@pytest.mark.parametrize("stride, cadence", [(0.2, 1.0), (1.5, 1.0), (0.7, 0.1), (0.7, 3.0)])
def test_synth_gait_ranges(stride, cadence):
    with pytest.raises(ParameterError):
        synth_gait(stride, cadence, 2.0)


def test_reference_walk_dataset(rng):
    config = get_profile("desk")
    walk = reference_walk_dataset(config)
    assert len(walk) == len(config["data"]["walk_variants"])
    assert walk.total_weight == pytest.approx(1.0)
    heldout = reference_walk_dataset(config, rng=rng, heldout=True)
    assert heldout.hash() != walk.hash()
    assert all(clip.name.startswith("heldout_") for clip in heldout)
    with pytest.raises(ValueError):
        reference_walk_dataset(config, heldout=True)


@pytest.mark.parametrize("side, facing", [("left", 1), ("right", -1)])
def test_grasp_pose_at_shoulder_height(character, rng, side, facing):
    height = character.hip_height + character.model.shoulder_offset
    scene = Scene(table_height=height, table_width=0.6, table_x=3.0, object_size=0.1, start_x=0.0, goal_x=0.0)
    grasp = dict(get_profile("desk")["grasp"], max_table_height=1.4)
    pose = generate_grasp_pose(scene, side, rng, character, grasp)
    assert pose.root_angle == 0.0
    assert pose.facing == facing
    assert pose.tip_error(character) < 1e-9
    assert np.allclose(pose.foot_heights(character), 0.0, atol=1e-9)
    # the stance keeps clear of the table
    assert abs(pose.root_pos[0] - scene.table_x) >= scene.table_width / 2 + grasp["stance_margin"] - 1e-9


def test_grasp_pose_tip_on_target_when_reachable(character, rng):
    reached = 0
    for height in np.linspace(0.1, 1.2, 12):
        scene = Scene(table_height=float(height), table_width=0.6, table_x=3.0, object_size=0.1, start_x=0.0, goal_x=0.0)
        try:
            pose = generate_grasp_pose(scene, "left", rng, character)
        except UnreachableError:
            continue
        reached += 1
        assert pose.tip_error(character) < 1e-9
        assert np.allclose(pose.foot_heights(character), 0.0, atol=1e-9)
    assert reached > 0


def test_grasp_pose_unreachable(character, rng):
    scene = Scene(table_height=0.02, table_width=0.6, table_x=3.0, object_size=0.1, start_x=0.0, goal_x=0.0)
    with pytest.raises(UnreachableError):
        generate_grasp_pose(scene, "left", rng, character)
    with pytest.raises(ValueError):
        generate_grasp_pose(scene, "up", rng, character)


def test_two_link_ik():
    first, rel = two_link_ik(0.0, -2.0, 1.0, 1.0, bend=1.0)
    assert first == pytest.approx(0.0)
    assert rel == pytest.approx(0.0, abs=1e-7)
    first, rel = two_link_ik(1.0, -1.0, 1.0, 1.0, bend=1.0)
    end = np.array([np.sin(first), -np.cos(first)]) + np.array([np.sin(first + rel), -np.cos(first + rel)])
    assert np.allclose(end, [1.0, -1.0])
    with pytest.raises(UnreachableError):
        two_link_ik(0.0, -3.0, 1.0, 1.0, bend=1.0)
    with pytest.raises(UnreachableError):
        two_link_ik(0.0, -0.1, 1.0, 0.5, bend=1.0)


def test_reach_clip_ends_in_grasp(character, rng):
    height = character.hip_height + character.model.shoulder_offset
    scene = Scene(table_height=height, table_width=0.6, table_x=3.0, object_size=0.1, start_x=0.0, goal_x=0.0)
    grasp = dict(get_profile("desk")["grasp"], max_table_height=1.4)
    clip = generate_reach_clip(scene, "left", rng, character, grasp, T=10)
    assert len(clip) == 11
    assert clip.source == "interpolated"
    assert clip.meta["table_height"] == pytest.approx(height)
    assert np.allclose(clip.joint_angles[0], character.model.rest_pose)
