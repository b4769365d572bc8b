"""
Planar rigid-body simulator: a static ground half-plane, a static table box, one dynamic box
object and one articulated character in reduced coordinates.

The character is a tree of links with a floating root ``(x, y, theta)`` followed by one
generalized coordinate per revolute joint. Two joints may share a coordinate with opposite
signs, which is how the two fingers of the gripper follow one aperture angle. Geometry is
expressed in a canonical frame where the character faces +x; a facing of -1 mirrors every
root-relative x offset.

Contacts are penalty springs ``ke * depth`` along the contact normal plus regularized Coulomb
friction. Springs are explicit; normal damping and friction are treated linearly implicitly,
so one step solves ``(M + dt K) du = dt (f - K u)`` with ``K`` the assembled damping matrix,
then updates positions with the new velocities (semi-implicit Euler). Joint limits act as an
inelastic impulse through the mass matrix, applied to the new velocities before the position
update.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from SkillRL.misc.errors import SimulationError


@dataclass(frozen=True)
class RigidBody:
    """State of one rigid body as seen in the world frame. """
    name: str
    position: Tuple[float, float]
    angle: float
    linear_velocity: Tuple[float, float]
    angular_velocity: float
    mass: float
    inertia: float
    half_extents: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.mass > 0 or not self.inertia > 0:
            raise SimulationError(f"body {self.name}: mass and inertia must be positive")
        values = [*self.position, self.angle, *self.linear_velocity, self.angular_velocity]
        if not np.all(np.isfinite(values)):
            raise SimulationError(f"body {self.name}: non-finite state {values}")


@dataclass(frozen=True)
class Link:
    name: str
    parent: int
    com: Tuple[float, float]
    mass: float
    inertia: float
    half_extents: Tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class RevoluteJoint:
    """
    A revolute joint between `parent` and `child` links. The child angle is
    ``angle(parent) + sign * q[coord]``; `anchor` is the joint position in the parent frame.
    """
    name: str
    parent: int
    child: int
    anchor: Tuple[float, float]
    coord: int
    limit: Tuple[float, float]
    torque_limit: float
    sign: float = 1.0
    armature: float = 0.0

    def __post_init__(self):
        if self.limit[0] > self.limit[1]:
            raise SimulationError(f"joint {self.name}: lower limit {self.limit[0]} exceeds upper limit {self.limit[1]}")
        if self.torque_limit < 0:
            raise SimulationError(f"joint {self.name}: negative torque limit")


@dataclass(frozen=True)
class ContactPoint:
    name: str
    link: int
    offset: Tuple[float, float]


@dataclass(frozen=True)
class Scene:
    table_height: float
    table_width: float
    table_x: float
    object_size: float
    start_x: float
    goal_x: float

    def __post_init__(self):
        if not self.table_width > self.object_size:
            raise SimulationError(f"table width {self.table_width} must exceed object size {self.object_size}")
        if self.table_height < 0 or self.object_size <= 0:
            raise SimulationError("table height must be non-negative and object size positive")

    @classmethod
    def sample(
        cls,
        ranges: Any,
        rng: np.random.Generator,
        object_size: float,
        table_height: Optional[float]=None,
        facing: Optional[int]=None,
    ) -> "Scene":
        """
        Draw a scene from the `[lo, hi]` intervals in `ranges` (table_height, table_width,
        table_distance, goal_distance). The character starts at x=0 facing the table; the goal
        lies on the character's side of the table, `goal_distance` away from it, so the
        character retreats after the grasp.
        """
        def uniform(key):
            lo, hi = ranges[key]
            return float(rng.uniform(lo, hi))
        if facing is None:
            facing = 1 if rng.random() < 0.5 else -1
        height = uniform("table_height") if table_height is None else float(table_height)
        width = uniform("table_width")
        table_x = facing * uniform("table_distance")
        goal_x = table_x - facing * uniform("goal_distance")
        return cls(table_height=height, table_width=width, table_x=table_x, object_size=object_size,
                   start_x=0.0, goal_x=goal_x)

    @property
    def facing(self) -> int:
        return 1 if self.table_x >= self.start_x else -1

    @property
    def table_top(self) -> float:
        return self.table_height


@dataclass(frozen=True)
class Contact:
    body_a: str
    body_b: str
    point: Tuple[float, float]
    normal: Tuple[float, float]
    depth: float
    impulse: float


@dataclass(frozen=True)
class SimState:
    """
    Full simulator state. `q`/`u` are the character generalized coordinates and velocities
    ``[x, y, theta, joints...]``; `obj_q`/`obj_u` the object pose ``(x, y, angle)`` and velocity.
    """
    q: np.ndarray
    u: np.ndarray
    obj_q: np.ndarray
    obj_u: np.ndarray
    facing: int
    scene: Scene
    time: float = 0.0
    contacts: Tuple[Contact, ...] = field(default_factory=tuple)

    @property
    def joint_angles(self) -> np.ndarray:
        return self.q[3:]

    @property
    def joint_velocities(self) -> np.ndarray:
        return self.u[3:]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.u))
                    and np.all(np.isfinite(self.obj_q)) and np.all(np.isfinite(self.obj_u)))

    def equals(self, other: "SimState") -> bool:
        """Bitwise equality of every numeric field. """
        return (
            np.array_equal(self.q, other.q) and np.array_equal(self.u, other.u)
            and np.array_equal(self.obj_q, other.obj_q) and np.array_equal(self.obj_u, other.obj_u)
            and self.facing == other.facing and self.scene == other.scene and self.time == other.time
        )


def _rotate(angle: np.ndarray, vec: np.ndarray) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([c*vec[..., 0] - s*vec[..., 1], s*vec[..., 0] + c*vec[..., 1]], axis=-1)


def _perp(vec: np.ndarray) -> np.ndarray:
    return np.stack([-vec[..., 1], vec[..., 0]], axis=-1)


class Articulation:
    """
    Kinematic tree of `links` connected by `joints`, with named contact `points`.

    Link 0 is the floating root. Every point on a link is expressed as a sum of link-frame
    vectors ``sum_l R(phi_l) T[l]``, which gives positions, Jacobians and velocity-product
    terms as a handful of array operations.
    """
    def __init__(
        self,
        links: Sequence[Link],
        joints: Sequence[RevoluteJoint],
        points: Sequence[ContactPoint],
        rest_pose: Sequence[float],
    ):
        self.links = list(links)
        self.joints = list(joints)
        self.points = list(points)
        num_links = len(self.links)
        coords = sorted({j.coord for j in self.joints})
        if coords != list(range(3, 3 + len(coords))):
            raise SimulationError(f"joint coordinates must be contiguous from 3, got {coords}")
        self.num_coords = 3 + len(coords)
        self.num_actuated = len(coords)
        self.rest_pose = np.asarray(rest_pose, dtype=np.float64)
        if self.rest_pose.shape != (self.num_actuated, ):
            raise SimulationError(f"rest pose needs {self.num_actuated} values, got {self.rest_pose.shape}")

        # per-coordinate limits, torque limits and armature
        self.lower = np.full(self.num_actuated, -np.inf)
        self.upper = np.full(self.num_actuated, np.inf)
        self.torque_limit = np.zeros(self.num_actuated)
        self.armature = np.zeros(self.num_coords)
        self.coord_names: List[Optional[str]] = [None] * self.num_actuated
        for joint in self.joints:
            idx = joint.coord - 3
            if self.coord_names[idx] is None:
                self.coord_names[idx] = joint.name
                self.lower[idx], self.upper[idx] = joint.limit
                self.torque_limit[idx] = joint.torque_limit
            elif (self.lower[idx], self.upper[idx]) != tuple(joint.limit):
                raise SimulationError(f"joints sharing coordinate {joint.coord} disagree on limits")
            self.armature[joint.coord] += joint.armature

        # angle of link l = A[l] @ q
        self.A = np.zeros([num_links, self.num_coords])
        self.A[0, 2] = 1.0
        self.parent_joint: Dict[int, RevoluteJoint] = {}
        for joint in self.joints:
            if joint.child in self.parent_joint:
                raise SimulationError(f"link {joint.child} has two parent joints")
            if joint.parent >= joint.child:
                raise SimulationError("links must be listed parent first")
            self.parent_joint[joint.child] = joint
        for l in range(1, num_links):
            joint = self.parent_joint[l]
            self.A[l] = self.A[joint.parent]
            self.A[l, joint.coord] += joint.sign

        massive = [l for l, link in enumerate(self.links) if link.mass > 0]
        self.com_links = np.array(massive, dtype=np.int64)
        self.com_mass = np.array([self.links[l].mass for l in massive])
        self.link_inertia = np.array([link.inertia for link in self.links])
        self.T_com = np.stack([self._terms(l, self.links[l].com) for l in massive])
        self.T_pts = np.stack([self._terms(p.link, p.offset) for p in self.points])
        self.point_index = {p.name: i for i, p in enumerate(self.points)}
        self.total_mass = float(self.com_mass.sum())

    def _terms(self, link: int, offset: Tuple[float, float]) -> np.ndarray:
        T = np.zeros([len(self.links), 2])
        T[link] += offset
        while link != 0:
            joint = self.parent_joint[link]
            T[joint.parent] += joint.anchor
            link = joint.parent
        return T

    def _eval(self, T: np.ndarray, q: np.ndarray, u: np.ndarray, facing: int):
        phi = self.A @ q
        omega = self.A @ u
        Rv = _rotate(phi[None, :], T)                               # (P, L, 2)
        dRv = _perp(Rv)
        S = np.array([facing, 1.0])
        pos = q[None, :2] + Rv.sum(axis=1) * S
        J = np.einsum("pld,ln->pdn", dRv, self.A) * S[None, :, None]
        J[:, 0, 0] += 1.0
        J[:, 1, 1] += 1.0
        bias = -np.einsum("l,pld->pd", omega**2, Rv) * S
        return pos, J, bias

    def com_kinematics(self, q: np.ndarray, u: np.ndarray, facing: int):
        return self._eval(self.T_com, q, u, facing)

    def point_kinematics(self, q: np.ndarray, u: np.ndarray, facing: int):
        return self._eval(self.T_pts, q, u, facing)

    def point_positions(self, q: np.ndarray, facing: int) -> np.ndarray:
        phi = self.A @ q
        Rv = _rotate(phi[None, :], self.T_pts)
        return q[None, :2] + Rv.sum(axis=1) * np.array([facing, 1.0])

    def point(self, name: str, q: np.ndarray, facing: int) -> np.ndarray:
        T = self.T_pts[self.point_index[name]]
        Rv = _rotate(self.A @ q, T)
        return q[:2] + Rv.sum(axis=0) * np.array([facing, 1.0])

    def link_angles(self, q: np.ndarray) -> np.ndarray:
        return self.A @ q

    def mass_matrix(self, J_com: np.ndarray) -> np.ndarray:
        M = np.einsum("c,cdn,cdm->nm", self.com_mass, J_com, J_com)
        M += np.einsum("l,ln,lm->nm", self.link_inertia, self.A, self.A)
        M[np.diag_indices_from(M)] += self.armature
        return M


class World:
    """
    The simulated scene around one articulated character.

    Parameters
    ----------
    articulation :  The character tree.
    gravity :  Gravity acceleration in m/s^2, acting along -y.
    contact_stiffness :  Penalty spring constant ke in N/m.
    contact_damping :  Normal damping kd in N*s/m, applied only while the contact closes.
    friction_coeff :  Coulomb coefficient mu.
    friction_damping :  Upper bound of the regularized tangential damping in N*s/m.
    object_mass :  Mass of the box object in kg.
    object_size :  Edge length of the box object in m.
    """
    GROUND = "ground"
    TABLE = "table"
    OBJECT = "object"

    def __init__(
        self,
        articulation: Articulation,
        gravity: float=9.81,
        contact_stiffness: float=1.0e4,
        contact_damping: float=100.0,
        friction_coeff: float=0.8,
        friction_damping: float=1.0e4,
        object_mass: float=1.0,
        object_size: float=0.1,
        init_noise: float=0.0,
    ):
        self.art = articulation
        self.gravity = float(gravity)
        self.ke = float(contact_stiffness)
        self.kd = float(contact_damping)
        self.mu = float(friction_coeff)
        self.kf = float(friction_damping)
        self.object_mass = float(object_mass)
        self.object_size = float(object_size)
        self.object_inertia = self.object_mass * self.object_size**2 / 6.0
        self.init_noise = float(init_noise)
        self.nc = articulation.num_coords
        self.dof = self.nc + 3
        half = self.object_size / 2
        self._corners = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])

    @classmethod
    def from_config(cls, articulation: Articulation, sim_config: Any) -> "World":
        return cls(
            articulation,
            gravity=sim_config["gravity"],
            contact_stiffness=sim_config["contact_stiffness"],
            contact_damping=sim_config["contact_damping"],
            friction_coeff=sim_config["friction_coeff"],
            friction_damping=sim_config["friction_damping"],
            object_mass=sim_config["object_mass"],
            object_size=sim_config["object_size"],
            init_noise=sim_config.get("init_noise", 0.0),
        )

    # geometry
    def _table_penetration(self, p: np.ndarray, scene: Scene):
        hw = scene.table_width / 2
        top = scene.table_height
        left = p[0] - (scene.table_x - hw)
        right = (scene.table_x + hw) - p[0]
        down = top - p[1]
        if left <= 0 or right <= 0 or down <= 0 or p[1] <= 0:
            return None
        depth, normal = min((down, (0.0, 1.0)), (left, (-1.0, 0.0)), (right, (1.0, 0.0)))
        return depth, np.array(normal)

    def _object_penetration(self, p: np.ndarray, obj_q: np.ndarray):
        half = self.object_size / 2
        local = _rotate(-obj_q[2], p - obj_q[:2])
        pen_x = half - abs(local[0])
        pen_y = half - abs(local[1])
        if pen_x <= 0 or pen_y <= 0:
            return None
        if pen_x < pen_y:
            depth, n_local = pen_x, np.array([1.0 if local[0] >= 0 else -1.0, 0.0])
        else:
            depth, n_local = pen_y, np.array([0.0, 1.0 if local[1] >= 0 else -1.0])
        return depth, _rotate(obj_q[2], n_local)

    def object_corners(self, obj_q: np.ndarray) -> np.ndarray:
        return obj_q[None, :2] + _rotate(obj_q[2], self._corners)

    def _object_jacobian(self, p: np.ndarray, obj_q: np.ndarray) -> np.ndarray:
        r = p - obj_q[:2]
        return np.array([[1.0, 0.0, -r[1]], [0.0, 1.0, r[0]]])

    def _collect_contacts(self, state: SimState, P: np.ndarray, J_pts: np.ndarray):
        """List of (name_a, name_b, point, normal, depth, relative-velocity Jacobian). """
        contacts = []
        scene = state.scene
        for k, point in enumerate(self.art.points):
            p = P[k]
            J = np.zeros([2, self.dof])
            J[:, :self.nc] = J_pts[k]
            if p[1] < 0:
                contacts.append((point.name, self.GROUND, p, np.array([0.0, 1.0]), -p[1], J))
            hit = self._table_penetration(p, scene)
            if hit is not None:
                contacts.append((point.name, self.TABLE, p, hit[1], hit[0], J))
            hit = self._object_penetration(p, state.obj_q)
            if hit is not None:
                J_rel = J.copy()
                J_rel[:, self.nc:] = -self._object_jacobian(p, state.obj_q)
                contacts.append((point.name, self.OBJECT, p, hit[1], hit[0], J_rel))
        for p in self.object_corners(state.obj_q):
            J = np.zeros([2, self.dof])
            J[:, self.nc:] = self._object_jacobian(p, state.obj_q)
            if p[1] < 0:
                contacts.append((self.OBJECT, self.GROUND, p, np.array([0.0, 1.0]), -p[1], J))
            hit = self._table_penetration(p, scene)
            if hit is not None:
                contacts.append((self.OBJECT, self.TABLE, p, hit[1], hit[0], J))
        return contacts

    def _validate(self, state: SimState, torques: np.ndarray, dt: float):
        if not dt > 0:
            raise SimulationError(f"dt must be positive, got {dt}")
        if torques.shape != (self.art.num_actuated, ):
            raise SimulationError(f"expected {self.art.num_actuated} joint torques, got shape {torques.shape}")
        if not state.is_finite():
            bad = [name for name in ("q", "u", "obj_q", "obj_u") if not np.all(np.isfinite(getattr(state, name)))]
            raise SimulationError(f"non-finite input state in {bad}")
        if not np.all(np.isfinite(torques)):
            raise SimulationError("non-finite joint torques")

    def _limit_velocity(self, M: np.ndarray, q: np.ndarray, vel: np.ndarray, dt: float) -> np.ndarray:
        """
        Inelastic joint-limit impulse. Returns the velocity closest to `vel` in the metric `M`
        among those whose position update ``q + dt * u`` keeps every joint inside its limits.
        Zero velocity is among them, so the kinetic energy never grows.

        The constraints are rows ``s * u[c] <= b``; the active set is grown with violated rows and
        shrunk by rows whose impulse would pull, as in a primal active-set QP.
        """
        art = self.art
        joints = q[3:]
        coord = np.concatenate([np.arange(art.num_actuated)] * 2) + 3
        sign = np.concatenate([np.ones(art.num_actuated), -np.ones(art.num_actuated)])
        bound = np.concatenate([art.upper - joints, joints - art.lower]) / dt
        keep = np.isfinite(bound)
        coord, sign, bound = coord[keep], sign[keep], np.maximum(bound[keep], 0.0)

        def violated(v: np.ndarray) -> np.ndarray:
            return sign * v[coord] > bound + 1e-12

        active = violated(vel)
        if not np.any(active):
            return vel
        M_inv = scipy.linalg.cho_solve(scipy.linalg.cho_factor(M), np.eye(len(vel)))
        v = vel
        for _ in range(2 * len(bound) + 1):
            rows = np.flatnonzero(active)
            if len(rows) == 0:
                break
            c, s = coord[rows], sign[rows]
            G = s[:, None] * M_inv[np.ix_(c, c)] * s[None, :]
            lam = scipy.linalg.solve(G, s * vel[c] - bound[rows], assume_a="pos")
            if np.any(lam < 0):
                active[rows[np.argmin(lam)]] = False
                continue
            v = vel - M_inv[:, c] @ (s * lam)
            entering = violated(v) & ~active
            if not np.any(entering):
                return v
            active |= entering
        return v

    def step(self, state: SimState, joint_torques: Sequence[float], dt: float) -> SimState:
        """Advance the world by `dt` seconds with the given joint torques (clamped to motor limits). """
        torques = np.asarray(joint_torques, dtype=np.float64)
        self._validate(state, torques, dt)
        art = self.art
        torques = np.clip(torques, -art.torque_limit, art.torque_limit)
        q, u = state.q, state.u

        com, J_com, bias_com = art.com_kinematics(q, u, state.facing)
        P, J_pts, _ = art.point_kinematics(q, u, state.facing)

        M = np.zeros([self.dof, self.dof])
        M[:self.nc, :self.nc] = art.mass_matrix(J_com)
        M[self.nc:, self.nc:] = np.diag([self.object_mass, self.object_mass, self.object_inertia])

        f = np.zeros(self.dof)
        f[3:self.nc] += torques
        gravity_force = np.array([0.0, -self.gravity])
        f[:self.nc] += np.einsum("c,cdn,d->n", art.com_mass, J_com, gravity_force)
        f[:self.nc] -= np.einsum("c,cdn,cd->n", art.com_mass, J_com, bias_com)
        f[self.nc+1] -= self.object_mass * self.gravity

        vel = np.concatenate([u, state.obj_u])
        K = np.zeros([self.dof, self.dof])
        raw = self._collect_contacts(state, P, J_pts)
        damped = []
        for (_, _, _, normal, depth, J) in raw:
            tangent = np.array([-normal[1], normal[0]])
            Jn = normal @ J
            Jt = tangent @ J
            vn = Jn @ vel
            vt = Jt @ vel
            f += self.ke * depth * Jn
            kd = self.kd if vn < 0 else 0.0
            fn_est = self.ke * depth + kd * max(-vn, 0.0)
            ct = min(self.kf, self.mu * fn_est / max(abs(vt), 1e-6))
            K += kd * np.outer(Jn, Jn) + ct * np.outer(Jt, Jt)
            damped.append((kd, Jn))

        A = M + dt * K
        du = scipy.linalg.solve(A, dt * (f - K @ vel), assume_a="pos")
        vel_new = self._limit_velocity(M, q, vel + du, dt)
        u_new = vel_new[:self.nc]
        obj_u_new = vel_new[self.nc:]
        q_new = q + dt * u_new
        obj_q_new = state.obj_q + dt * obj_u_new
        # roundoff only, the limit impulse already stops every joint at its bound
        q_new[3:] = np.clip(q_new[3:], art.lower, art.upper)

        contacts = tuple(
            Contact(
                body_a=a, body_b=b, point=(float(p[0]), float(p[1])), normal=(float(n[0]), float(n[1])),
                depth=float(d), impulse=float(max(self.ke * d - kd * (Jn @ vel_new), 0.0) * dt),
            )
            for (a, b, p, n, d, _), (kd, Jn) in zip(raw, damped)
        )
        new_state = SimState(
            q=q_new, u=u_new, obj_q=obj_q_new, obj_u=obj_u_new,
            facing=state.facing, scene=state.scene, time=state.time + dt, contacts=contacts,
        )
        if not new_state.is_finite():
            raise SimulationError(f"simulation diverged at t={state.time:.4f}s")
        return new_state

    def reset_scene(self, scene: Scene, rng_seed: int) -> SimState:
        """
        Place the character at `scene.start_x` in its rest pose (joint angles jittered by
        `init_noise`) with the lowest foot on the ground, facing the table, and the object
        resting centered on the table top.
        """
        rng = np.random.default_rng(rng_seed)
        art = self.art
        joints = art.rest_pose + self.init_noise * rng.standard_normal(art.num_actuated)
        joints = np.clip(joints, art.lower, art.upper)
        q = np.concatenate([[scene.start_x, 0.0, 0.0], joints])
        facing = scene.facing
        q[1] = -self.lowest_point(q, facing)
        obj_q = np.array([scene.table_x, scene.table_height + self.object_size / 2, 0.0])
        state = SimState(
            q=q, u=np.zeros(art.num_coords), obj_q=obj_q, obj_u=np.zeros(3), facing=facing, scene=scene,
        )
        for name, p in zip((pt.name for pt in art.points), art.point_positions(q, facing)):
            if self._table_penetration(p, scene) is not None:
                raise SimulationError(f"initial pose intersects the table at point {name}")
        return state

    def lowest_point(self, q: np.ndarray, facing: int) -> float:
        """Height of the lowest character point relative to the root height stored in `q`. """
        q = q.copy()
        q[1] = 0.0
        return float(self.art.point_positions(q, facing)[:, 1].min())

    def mechanical_energy(self, state: SimState) -> float:
        """Kinetic + gravitational potential + elastic contact energy. """
        art = self.art
        com, J_com, _ = art.com_kinematics(state.q, state.u, state.facing)
        M = art.mass_matrix(J_com)
        kinetic = 0.5 * state.u @ M @ state.u
        kinetic += 0.5 * self.object_mass * float(state.obj_u[:2] @ state.obj_u[:2])
        kinetic += 0.5 * self.object_inertia * state.obj_u[2]**2
        potential = self.gravity * (float(art.com_mass @ com[:, 1]) + self.object_mass * state.obj_q[1])
        P = art.point_positions(state.q, state.facing)
        _, J_pts, _ = art.point_kinematics(state.q, state.u, state.facing)
        elastic = sum(0.5 * self.ke * c[4]**2 for c in self._collect_contacts(state, P, J_pts))
        return float(kinetic + potential + elastic)

    def bodies(self, state: SimState) -> List[RigidBody]:
        """World-frame view of every massive link and the object. """
        art = self.art
        com, J_com, _ = art.com_kinematics(state.q, state.u, state.facing)
        vel = np.einsum("cdn,n->cd", J_com, state.u)
        phi = art.link_angles(state.q)[art.com_links] * state.facing
        omega = (art.A @ state.u)[art.com_links] * state.facing
        bodies = []
        for i, l in enumerate(art.com_links):
            link = art.links[l]
            bodies.append(RigidBody(
                name=link.name, position=tuple(com[i]), angle=float(phi[i]), linear_velocity=tuple(vel[i]),
                angular_velocity=float(omega[i]), mass=link.mass, inertia=link.inertia, half_extents=link.half_extents,
            ))
        half = self.object_size / 2
        bodies.append(RigidBody(
            name=self.OBJECT, position=tuple(state.obj_q[:2]), angle=float(state.obj_q[2]),
            linear_velocity=tuple(state.obj_u[:2]), angular_velocity=float(state.obj_u[2]),
            mass=self.object_mass, inertia=self.object_inertia, half_extents=(half, half),
        ))
        return bodies

    def contacts_between(self, state: SimState, body_a: str, body_b: str) -> List[Contact]:
        return [c for c in state.contacts if c.body_a == body_a and c.body_b == body_b]

    def with_object(self, state: SimState, obj_q: Sequence[float], obj_u: Sequence[float]=(0.0, 0.0, 0.0)) -> SimState:
        return replace(state, obj_q=np.asarray(obj_q, dtype=np.float64), obj_u=np.asarray(obj_u, dtype=np.float64))
