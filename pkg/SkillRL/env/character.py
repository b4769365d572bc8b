"""
The planar character: a torso root, two 3-link legs (thigh, shin, foot), one 2-link arm and a
1-DoF two-finger gripper. This module builds its articulation, turns PD targets into torques and
featurizes simulator states into the 30-dim observation documented in
``docs/source/modules/observation.rst``.

Angle conventions (canonical frame, character facing +x): a link at angle 0 hangs straight down,
positive angles swing it forward. Hip flexion is positive, knee bend is negative, a positive elbow
folds the forearm forward and a forward torso lean is a negative root angle.
"""

from typing import Any, Dict, Optional, Sequence, Tuple

from dataclasses import dataclass

import numpy as np

from SkillRL.env.sim2d import Articulation, ContactPoint, Link, RevoluteJoint, Scene, SimState, World
from SkillRL.misc.errors import ShapeError, SimulationError


JOINT_NAMES = (
    "hip_front", "knee_front", "ankle_front",
    "hip_rear", "knee_rear", "ankle_rear",
    "shoulder", "elbow", "gripper",
)
# joint name -> gain / limit group
JOINT_KIND = {
    "hip_front": "hip", "knee_front": "knee", "ankle_front": "ankle",
    "hip_rear": "hip", "knee_rear": "knee", "ankle_rear": "ankle",
    "shoulder": "shoulder", "elbow": "elbow", "gripper": "gripper",
}
NUM_ACTUATED = len(JOINT_NAMES)

# generalized coordinate layout q = [x, y, theta, joints...]
ROOT = slice(0, 3)
FRONT_LEG_COORDS = slice(3, 6)
REAR_LEG_COORDS = slice(6, 9)
SHOULDER, ELBOW, GRIPPER = 9, 10, 11

OBS_DIM = 30
PART_NAMES = ("torso", "arm_upper", "arm_lower", "front_leg", "rear_leg")
PART_SLICES: Dict[str, slice] = {
    "torso": slice(0, 5),
    "arm_upper": slice(5, 7),
    "arm_lower": slice(7, 14),
    "front_leg": slice(14, 22),
    "rear_leg": slice(22, 30),
}

GROUND_TOUCH_POINTS = ("pelvis", "shoulder", "head")
FOOT_POINTS = ("heel_front", "toe_front", "heel_rear", "toe_rear")


def part_slices() -> Tuple[slice, ...]:
    return tuple(PART_SLICES[name] for name in PART_NAMES)


def mirror_legs(obs: np.ndarray) -> np.ndarray:
    """Swap the front-leg and rear-leg slices along the last axis. """
    obs = np.array(obs, copy=True)
    front = obs[..., PART_SLICES["front_leg"]].copy()
    obs[..., PART_SLICES["front_leg"]] = obs[..., PART_SLICES["rear_leg"]]
    obs[..., PART_SLICES["rear_leg"]] = front
    return obs


def pd_torques(
    angles: np.ndarray,
    velocities: np.ndarray,
    targets: np.ndarray,
    kp: np.ndarray,
    kd: np.ndarray,
    limit: np.ndarray,
) -> np.ndarray:
    """tau = clamp(kp * (target - angle) - kd * vel, -limit, limit) """
    tau = kp * (targets - angles) - kd * velocities
    return np.clip(tau, -limit, limit)


def _rod_inertia(mass: float, length: float) -> float:
    return mass * length**2 / 12.0


@dataclass(frozen=True)
class CharacterModel:
    """
    Dimensions (m), masses (kg) and per-joint PD gains of the planar character.

    `kp`, `kd`, `torque_limit`, `lower`, `upper` are arrays over the actuated joints in
    `JOINT_NAMES` order.
    """
    torso_mass: float
    shoulder_offset: float
    head_offset: float
    thigh_length: float
    thigh_mass: float
    shin_length: float
    shin_mass: float
    foot_height: float
    heel_length: float
    toe_length: float
    foot_mass: float
    upper_arm_length: float
    upper_arm_mass: float
    forearm_length: float
    forearm_mass: float
    finger_length: float
    kp: np.ndarray
    kd: np.ndarray
    torque_limit: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    leg_armature: float
    arm_armature: float
    gripper_armature: float
    rest_pose: np.ndarray

    def __post_init__(self):
        if len(self.kp) != NUM_ACTUATED or len(self.kd) != NUM_ACTUATED:
            raise SimulationError(f"expected gains for {NUM_ACTUATED} joints")
        if np.any(self.kp <= 0) or np.any(self.kd <= 0):
            raise SimulationError("PD gains must be positive")

    @classmethod
    def from_config(cls, config: Any) -> "CharacterModel":
        gains = np.array([config["gains"][JOINT_KIND[name]] for name in JOINT_NAMES], dtype=np.float64)
        limits = np.array([config["limits"][JOINT_KIND[name]] for name in JOINT_NAMES], dtype=np.float64)
        keys = (
            "torso_mass", "shoulder_offset", "head_offset", "thigh_length", "thigh_mass", "shin_length",
            "shin_mass", "foot_height", "heel_length", "toe_length", "foot_mass", "upper_arm_length",
            "upper_arm_mass", "forearm_length", "forearm_mass", "finger_length",
        )
        rest_pose = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.75])
        return cls(
            **{key: float(config[key]) for key in keys},
            kp=gains[:, 0], kd=gains[:, 1], torque_limit=gains[:, 2],
            lower=limits[:, 0], upper=limits[:, 1],
            leg_armature=float(config["armature"]["leg"]),
            arm_armature=float(config["armature"]["arm"]),
            gripper_armature=float(config["armature"]["gripper"]),
            rest_pose=np.clip(rest_pose, limits[:, 0], limits[:, 1]),
        )

    @property
    def hip_height(self) -> float:
        return self.thigh_length + self.shin_length + self.foot_height

    @property
    def arm_reach(self) -> float:
        return self.upper_arm_length + self.forearm_length + self.finger_length

    def build_articulation(self) -> Articulation:
        L1, L2 = self.thigh_length, self.shin_length
        heel, toe, fh = self.heel_length, self.toe_length, self.foot_height
        foot_len = heel + toe
        links = [
            Link("torso", -1, (0.0, self.head_offset / 2), self.torso_mass,
                 _rod_inertia(self.torso_mass, self.head_offset), (0.1, self.head_offset / 2)),
        ]
        joints = []
        points = [
            ContactPoint("pelvis", 0, (0.0, 0.0)),
            ContactPoint("shoulder", 0, (0.0, self.shoulder_offset)),
            ContactPoint("head", 0, (0.0, self.head_offset)),
        ]
        foot_inertia = self.foot_mass * (foot_len**2 + fh**2) / 12.0
        for side, base in (("front", 3), ("rear", 6)):
            thigh, shin, foot = len(links), len(links) + 1, len(links) + 2
            links += [
                Link(f"thigh_{side}", 0, (0.0, -L1 / 2), self.thigh_mass, _rod_inertia(self.thigh_mass, L1), (0.05, L1 / 2)),
                Link(f"shin_{side}", thigh, (0.0, -L2 / 2), self.shin_mass, _rod_inertia(self.shin_mass, L2), (0.04, L2 / 2)),
                Link(f"foot_{side}", shin, ((toe - heel) / 2, -fh / 2), self.foot_mass, foot_inertia, (foot_len / 2, fh / 2)),
            ]
            for offset, (name, parent, child, anchor) in enumerate((
                (f"hip_{side}", 0, thigh, (0.0, 0.0)),
                (f"knee_{side}", thigh, shin, (0.0, -L1)),
                (f"ankle_{side}", shin, foot, (0.0, -L2)),
            )):
                idx = base - 3 + offset
                joints.append(RevoluteJoint(
                    name, parent, child, anchor, coord=base + offset,
                    limit=(self.lower[idx], self.upper[idx]), torque_limit=self.torque_limit[idx],
                    armature=self.leg_armature,
                ))
            points += [
                ContactPoint(f"knee_{side}", thigh, (0.0, -L1)),
                ContactPoint(f"heel_{side}", foot, (-heel, -fh)),
                ContactPoint(f"toe_{side}", foot, (toe, -fh)),
            ]

        upper, fore = len(links), len(links) + 1
        finger_a, finger_b = len(links) + 2, len(links) + 3
        La, Lb, Lf = self.upper_arm_length, self.forearm_length, self.finger_length
        links += [
            Link("upper_arm", 0, (0.0, -La / 2), self.upper_arm_mass, _rod_inertia(self.upper_arm_mass, La), (0.04, La / 2)),
            Link("forearm", upper, (0.0, -Lb / 2), self.forearm_mass, _rod_inertia(self.forearm_mass, Lb), (0.035, Lb / 2)),
            # massless fingers, the aperture inertia is the gripper armature
            Link("finger_a", fore, (0.0, -Lf / 2), 0.0, 0.0),
            Link("finger_b", fore, (0.0, -Lf / 2), 0.0, 0.0),
        ]
        joints += [
            RevoluteJoint("shoulder", 0, upper, (0.0, self.shoulder_offset), coord=SHOULDER,
                          limit=(self.lower[6], self.upper[6]), torque_limit=self.torque_limit[6], armature=self.arm_armature),
            RevoluteJoint("elbow", upper, fore, (0.0, -La), coord=ELBOW,
                          limit=(self.lower[7], self.upper[7]), torque_limit=self.torque_limit[7], armature=self.arm_armature),
            RevoluteJoint("gripper", fore, finger_a, (0.0, -Lb), coord=GRIPPER, sign=1.0,
                          limit=(self.lower[8], self.upper[8]), torque_limit=self.torque_limit[8], armature=self.gripper_armature / 2),
            RevoluteJoint("gripper_mirror", fore, finger_b, (0.0, -Lb), coord=GRIPPER, sign=-1.0,
                          limit=(self.lower[8], self.upper[8]), torque_limit=self.torque_limit[8], armature=self.gripper_armature / 2),
        ]
        points += [
            ContactPoint("palm", fore, (0.0, -Lb)),
            ContactPoint("finger_a", finger_a, (0.0, -Lf)),
            ContactPoint("finger_b", finger_b, (0.0, -Lf)),
        ]
        return Articulation(links, joints, points, self.rest_pose)

    def apply_pd_control(self, state: SimState, target_angles: Sequence[float]) -> np.ndarray:
        targets = np.asarray(target_angles, dtype=np.float64)
        if targets.shape != (NUM_ACTUATED, ):
            raise ShapeError(f"expected {NUM_ACTUATED} PD targets, got shape {targets.shape}")
        return pd_torques(state.joint_angles, state.joint_velocities, targets, self.kp, self.kd, self.torque_limit)


class Character:
    """
    A `CharacterModel` bound to its articulation, providing featurization and derived
    observables (gripper tip, palm, finger tips, aperture) in world and root-local frames.
    """
    def __init__(self, model: CharacterModel):
        self.model = model
        self.articulation = model.build_articulation()

    @classmethod
    def from_config(cls, config: Any) -> "Character":
        return cls(CharacterModel.from_config(config))

    @property
    def hip_height(self) -> float:
        return self.model.hip_height

    def apply_pd_control(self, state: SimState, target_angles: Sequence[float]) -> np.ndarray:
        return self.model.apply_pd_control(state, target_angles)

    def rest_state(self, world: World, x: float=0.0, facing: int=1, scene: Optional[Scene]=None) -> SimState:
        """The default stance at root x `x` with the feet on the ground, at rest. Without a
        scene the table is placed far ahead of the character. """
        art = self.articulation
        if scene is None:
            scene = Scene(
                table_height=0.5, table_width=0.6, table_x=x + facing * 100.0,
                object_size=world.object_size, start_x=x, goal_x=x,
            )
        q = np.concatenate([[x, 0.0, 0.0], art.rest_pose])
        q[1] = -world.lowest_point(q, facing)
        obj_q = np.array([scene.table_x, scene.table_height + world.object_size / 2, 0.0])
        return SimState(q=q, u=np.zeros(art.num_coords), obj_q=obj_q, obj_u=np.zeros(3), facing=facing, scene=scene)

    def local_points(self, q: np.ndarray, names: Sequence[str]) -> np.ndarray:
        """Positions of the named points in the root frame (canonical, root at the origin). """
        q_local = np.array(q, dtype=np.float64, copy=True)
        q_local[:3] = 0.0
        P = self.articulation.point_positions(q_local, 1)
        return np.stack([P[self.articulation.point_index[name]] for name in names])

    def world_point(self, state: SimState, name: str) -> np.ndarray:
        return self.articulation.point(name, state.q, state.facing)

    def gripper_tip(self, state: SimState) -> np.ndarray:
        return 0.5 * (self.world_point(state, "finger_a") + self.world_point(state, "finger_b"))

    def palm(self, state: SimState) -> np.ndarray:
        return self.world_point(state, "palm")

    def aperture(self, q: np.ndarray) -> float:
        return 2.0 * self.model.finger_length * float(np.sin(q[GRIPPER]))

    def featurize_coords(self, q: np.ndarray, u: np.ndarray, facing: int) -> np.ndarray:
        """Observation from generalized coordinates and velocities, see `featurize`. """
        q = np.asarray(q, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        if q.shape != (self.articulation.num_coords, ) or u.shape != q.shape:
            raise ShapeError(f"expected coordinates of length {self.articulation.num_coords}, got {q.shape} and {u.shape}")
        theta = q[2]
        c, s = np.cos(theta), np.sin(theta)
        vx, vy = facing * u[0], u[1]
        local_v = (c*vx + s*vy, -s*vx + c*vy)
        tips = self.local_points(q, ("finger_a", "finger_b", "toe_front", "toe_rear"))
        grip = 0.5 * (tips[0] + tips[1])
        j, w = q[3:], u[3:]
        obs = np.array([
            # torso
            q[1], theta, local_v[0], local_v[1], u[2],
            # arm, upper
            j[6], w[6],
            # arm, lower + gripper
            j[7], w[7], j[8], w[8], grip[0], grip[1], self.aperture(q),
            # front leg
            j[0], w[0], j[1], w[1], j[2], w[2], tips[2, 0], tips[2, 1],
            # rear leg
            j[3], w[3], j[4], w[4], j[5], w[5], tips[3, 0], tips[3, 1],
        ])
        return obs

    def featurize(self, state: SimState) -> np.ndarray:
        """
        The 30-dim observation of `state`: root height, root angle, root linear velocity and
        angular velocity in the root frame, joint angles and velocities grouped by body part, and
        root-local gripper tip, foot tips and gripper aperture.
        """
        if not state.is_finite():
            raise SimulationError("cannot featurize a non-finite state")
        return self.featurize_coords(state.q, state.u, state.facing)

    def pose_coords(self, root_pos: Sequence[float], root_angle: float, joint_angles: Sequence[float]) -> np.ndarray:
        return np.concatenate([np.asarray(root_pos, dtype=np.float64), [root_angle], np.asarray(joint_angles, dtype=np.float64)])

    def featurize_transition(self, frame_a: Any, frame_b: Any, fps: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Observations of two consecutive reference frames. Velocities are the finite difference
        ``(b - a) * fps`` (angles wrapped) and are shared by both observations.
        """
        qa = self.pose_coords(frame_a.root_pos, frame_a.root_angle, frame_a.joint_angles)
        qb = self.pose_coords(frame_b.root_pos, frame_b.root_angle, frame_b.joint_angles)
        delta = qb - qa
        delta[2:] = (delta[2:] + np.pi) % (2*np.pi) - np.pi
        u = delta * fps
        return self.featurize_coords(qa, u, 1), self.featurize_coords(qb, u, 1)

    def touches_ground(self, state: SimState, names: Sequence[str]=GROUND_TOUCH_POINTS) -> bool:
        heights = [self.world_point(state, name)[1] for name in names]
        return bool(min(heights) <= 0.0)

    def foot_contacts(self, state: SimState) -> Dict[str, bool]:
        touching = {c.body_a for c in state.contacts if c.body_b in (World.GROUND, World.TABLE)}
        return {name: name in touching for name in FOOT_POINTS}
