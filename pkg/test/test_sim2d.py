import numpy as np
import pytest

from SkillRL.env.sim2d import Scene, SimState, World
from SkillRL.misc.errors import SimulationError

DT = 1.0 / 120


def airborne(character, world, height=5.0):
    state = character.rest_state(world)
    q = state.q.copy()
    q[1] += height
    state = SimState(q=q, u=state.u, obj_q=state.obj_q, obj_u=state.obj_u, facing=state.facing, scene=state.scene)
    return world.with_object(state, [state.q[0] + 50.0, 20.0, 0.0])


def test_free_fall(character, world):
    state = airborne(character, world)
    nxt = world.step(state, np.zeros(9), DT)
    assert nxt.u[1] == pytest.approx(-9.81 * DT, abs=1e-9)
    assert nxt.q[1] == pytest.approx(state.q[1] + DT * nxt.u[1], abs=1e-12)
    assert np.allclose(nxt.u[[0, 2]], 0.0, atol=1e-9)
    assert np.allclose(nxt.u[3:], 0.0, atol=1e-9)
    assert nxt.obj_u[1] == pytest.approx(-9.81 * DT, abs=1e-9)
    assert nxt.contacts == ()

    torso = next(b for b in world.bodies(nxt) if b.name == "torso")
    assert torso.linear_velocity[1] == pytest.approx(-9.81 * DT, abs=1e-9)


def test_zero_gravity_rest_is_stationary(character):
    world = World(character.articulation, gravity=0.0)
    state = airborne(character, world)
    nxt = world.step(state, np.zeros(9), DT)
    assert np.array_equal(nxt.q, state.q)
    assert np.array_equal(nxt.obj_q, state.obj_q)
    assert nxt.time == pytest.approx(DT)


def test_object_settles_on_table(character, world, scene):
    state = world.reset_scene(scene, 0)
    for _ in range(100):
        torques = character.apply_pd_control(state, character.articulation.rest_pose)
        state = world.step(state, torques, DT)
    assert abs(state.obj_u[1]) < 0.05
    assert state.obj_q[1] == pytest.approx(scene.table_height + world.object_size / 2, abs=0.01)
    assert world.contacts_between(state, World.OBJECT, World.TABLE)


def test_reset_scene_is_deterministic(world, scene):
    a = world.reset_scene(scene, 7)
    b = world.reset_scene(scene, 7)
    assert a.equals(b)
    assert a.q[0] == 0.0
    assert a.facing == 1
    assert world.lowest_point(a.q, a.facing) == pytest.approx(-a.q[1])


def test_reset_scene_rejects_table_overlap(world):
    scene = Scene(table_height=0.5, table_width=0.6, table_x=0.0, object_size=0.1, start_x=0.0, goal_x=0.0)
    with pytest.raises(SimulationError):
        world.reset_scene(scene, 0)


def test_scene_validation():
    with pytest.raises(SimulationError):
        Scene(table_height=0.5, table_width=0.05, table_x=1.0, object_size=0.1, start_x=0.0, goal_x=0.0)
    with pytest.raises(SimulationError):
        Scene(table_height=-0.1, table_width=0.6, table_x=1.0, object_size=0.1, start_x=0.0, goal_x=0.0)


def test_scene_sample_faces_table(rng):
    ranges = {"table_height": [0.1, 1.0], "table_width": [0.5, 0.8],
              "table_distance": [1.5, 4.0], "goal_distance": [1.5, 4.0]}
    for _ in range(10):
        scene = Scene.sample(ranges, rng, 0.1)
        assert 1.5 <= abs(scene.table_x) <= 4.0
        assert 0.1 <= scene.table_height <= 1.0
        # the goal is behind the character relative to the table
        assert (scene.goal_x - scene.table_x) * scene.facing < 0
    fixed = Scene.sample(ranges, rng, 0.1, table_height=0.3, facing=-1)
    assert fixed.table_height == 0.3
    assert fixed.facing == -1


def test_step_rejects_bad_input(world, scene):
    state = world.reset_scene(scene, 0)
    with pytest.raises(SimulationError):
        world.step(state, np.zeros(4), DT)
    with pytest.raises(SimulationError):
        world.step(state, np.zeros(9), 0.0)
    with pytest.raises(SimulationError):
        world.step(state, np.full(9, np.nan), DT)
    bad = world.with_object(state, [np.nan, 0.0, 0.0])
    with pytest.raises(SimulationError):
        world.step(bad, np.zeros(9), DT)


def test_torques_are_clamped(character, world):
    state = airborne(character, world)
    big = world.step(state, np.full(9, 1e6), DT)
    capped = world.step(state, character.articulation.torque_limit, DT)
    assert np.allclose(big.u, capped.u)


def test_joint_limit_impulse_is_inelastic(character):
    world = World(character.articulation, gravity=0.0)
    state = airborne(character, world)
    u = state.u.copy()
    u[10] = -60.0       # elbow, driven well past its lower limit within one step
    state = SimState(q=state.q, u=u, obj_q=state.obj_q, obj_u=state.obj_u, facing=state.facing, scene=state.scene)
    nxt = world.step(state, np.zeros(9), DT)
    assert nxt.q[10] == pytest.approx(character.articulation.lower[7], abs=1e-12)
    assert nxt.u[10] > u[10]
    assert world.mechanical_energy(nxt) < world.mechanical_energy(state)
    # the impulse goes through the mass matrix, so the root reacts
    assert not np.allclose(nxt.u[:3], 0.0)


def test_energy_never_rises_without_torques(world, scene):
    state = world.reset_scene(scene, 0)
    standing = state.q[1]
    energy, heights = [world.mechanical_energy(state)], [state.q[1]]
    for _ in range(300):
        state = world.step(state, np.zeros(9), DT)
        energy.append(world.mechanical_energy(state))
        heights.append(state.q[1])
    energy = np.array(energy)
    assert np.max(energy[100:] - energy[:-100]) <= 1e-3
    # the character collapses instead of being thrown up
    assert max(heights) <= standing + 0.01
    assert np.all(state.q[3:] >= world.art.lower) and np.all(state.q[3:] <= world.art.upper)
