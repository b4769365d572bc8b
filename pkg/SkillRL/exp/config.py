"""
Built-in configuration profiles and validation.

Two profiles exist. ``desk`` is sized for a CPU and is the default; ``paper`` carries the
full-size hyper-parameters (low-level training, high-level training, feature alignment,
reward parameters and the active-strategy constants) and is configuration-complete but not
expected to finish on a desk machine. Values marked ``local choice`` fill in constants that
the full-size tables leave open.
"""

from typing import Any, Dict, Optional, Sequence, Tuple

import copy
import numbers

from SkillRL.misc.errors import ConfigError


DESK: Dict[str, Any] = {
    "seed": 0,
    "profile": "desk",
    "sim": {
        "physics_hz": 120,              # simulation rate 120 Hz
        "control_hz": 30,               # local choice, 4 substeps per action
        "gravity": 9.81,
        "contact_stiffness": 1.0e4,     # local choice
        "contact_damping": 100.0,       # local choice
        "friction_coeff": 0.8,          # local choice
        "friction_damping": 1.0e4,      # local choice, viscous cap of the regularized friction
        "object_mass": 1.0,
        "object_size": 0.1,
        "init_noise": 0.01,             # rad, joint jitter of the initial pose
    },
    "character": {
        "torso_mass": 30.0,
        "shoulder_offset": 0.45,
        "head_offset": 0.6,
        "thigh_length": 0.38,
        "thigh_mass": 5.0,
        "shin_length": 0.38,
        "shin_mass": 3.5,
        "foot_height": 0.05,
        "heel_length": 0.05,
        "toe_length": 0.15,
        "foot_mass": 1.0,
        "upper_arm_length": 0.3,
        "upper_arm_mass": 2.0,
        "forearm_length": 0.26,
        "forearm_mass": 1.5,
        "finger_length": 0.08,
        # [kp, kd, torque limit]
        "gains": {
            "hip": [300.0, 10.0, 150.0],
            "knee": [250.0, 8.0, 150.0],
            "ankle": [100.0, 4.0, 80.0],
            "shoulder": [100.0, 4.0, 60.0],
            "elbow": [60.0, 3.0, 40.0],
            "gripper": [20.0, 0.5, 5.0],
        },
        # [lo, hi] in radians
        "limits": {
            "hip": [-0.8, 2.4],
            "knee": [-2.4, 0.0],
            "ankle": [-1.0, 1.0],
            "shoulder": [-1.0, 3.0],
            "elbow": [0.0, 2.5],
            "gripper": [0.0, 0.9],
        },
        "armature": {
            "leg": 0.1,
            "arm": 0.05,
            "gripper": 0.01,
        },
    },
    "scene": {
        "table_height": [0.1, 1.0],     # rescaled from 0.05-1.65 m for the planar body
        "table_width": [0.5, 0.8],
        "table_distance": [1.5, 4.0],   # start to table, 1.5-4 m
        "goal_distance": [1.5, 4.0],
    },
    "data": {
        "fps": 30,
        "data_dir": "data",
        "interp_frames": 60,            # local choice, 2 s at 30 fps
        "clamp_feet": True,
        "gait": {
            "hip_height": 0.72,
            "clearance": 0.08,
            "stance_fraction": 0.6,
        },
        # stride (m), cadence (Hz), duration (s), weight; plain walking weighted highest
        "walk_variants": [
            {"name": "walk_normal", "stride": 0.7, "cadence": 1.0, "duration": 4.0, "weight": 0.3},
            {"name": "walk_slow", "stride": 0.5, "cadence": 0.8, "duration": 4.0, "weight": 0.15},
            {"name": "walk_brisk", "stride": 0.9, "cadence": 1.3, "duration": 3.0, "weight": 0.15},
            {"name": "walk_short", "stride": 0.45, "cadence": 1.2, "duration": 3.0, "weight": 0.1},
            {"name": "walk_long", "stride": 1.0, "cadence": 1.0, "duration": 3.0, "weight": 0.15},
            {"name": "walk_shuffle", "stride": 0.4, "cadence": 0.6, "duration": 5.0, "weight": 0.15},
        ],
        "heldout_jitter": 0.1,
    },
    "grasp": {
        "knee_max": 2.0,
        "lean_max": 1.2,
        "min_table_height": 0.05,
        "max_table_height": 1.25,
        "full_squat_height": 0.1,       # table height at which the squat bottoms out
        "stance_margin": 0.2,
        "stance_jitter": 0.05,
    },
    "net": {
        "actor_hidden": [256, 128],                 # paper profile: [1024, 1024, 512]
        "high_level_hidden": [128, 64],             # paper profile: [1024, 512]
        "disc_hidden": [256, 128],
        "critic_part_dim": 32,
        "critic_hidden": [128, 128, 64],            # f1, f2, f3
    },
    "skill": {
        "latent_dim": 16,               # paper profile: 64
        "iterations": 200,
        "num_envs": 16,
        "horizon": 64,
        "episode_length": 300,
        "action_std": 0.055,
        "lr": 1.0e-4,                   # paper profile: 2e-5, raised for desk-scale iteration counts
        "gamma": 0.99,
        "lam": 0.95,
        "clip_ratio": 0.2,              # local choice
        "epochs": 5,                    # local choice
        "policy_minibatch": 1024,       # paper profile: 16384
        "disc_minibatch": 256,          # paper profile: 4096
        "max_grad_norm": 1.0,           # local choice
        "grad_penalty": 5.0,
        "disc_weight_decay": 1.0e-4,
        "enc_weight_decay": 0.0,
        "disc_reward_weight": 0.5,
        "enc_reward_weight": 0.5,
        "diversity_bonus": 0.01,
        "ref_init_prob": 0.5,           # local choice
        "checkpoint_every": 50,
    },
    "task": {
        "iterations": 200,
        "num_envs": 16,
        "horizon": 64,
        "episode_length": 300,
        "action_std": 0.1,
        "lr": 1.0e-4,                   # paper profile: 2e-5
        "gamma": 0.99,
        "lam": 0.95,
        "clip_ratio": 0.2,
        "epochs": 5,
        "policy_minibatch": 1024,
        "disc_minibatch": 256,
        "max_grad_norm": 1.0,
        "grad_penalty": 5.0,
        "disc_weight_decay": 1.0e-4,
        "w_goal": 0.4,
        "w_p1": 0.2,
        "w_p2": 0.4,
        "stage_bonus": 1.0,             # local choice
        "boost_factor": 1.5,            # local choice
        "boost_radius": 0.5,
        "v_target": 1.0,                # local choice
        "locomotion_radius": 1.0,
        "pregrasp_height": 0.1,
        "lift_height": 0.1,
        "high_level_interval": 1,       # local choice, one latent per control step
        "checkpoint_every": 50,
    },
    "rewards": {
        "w_pos": 0.3,
        "w_vel": 0.6,
        "w_face": 0.1,
        "w_grasp": 1.0,
        "w_height": 2.0,
        "w_obj_vel": 1.0,
        "h_lift_target": 0.2,
        "v_threshold": 30.0,
        "reach_height": 0.2,
        "w_balance": 0.0,               # local choice, equilibrium term after the grasp
    },
    "active": {
        "num_bins": 8,                  # local choice
        "height_range": [0.1, 1.0],
        "episodes_per_bin": 8,
        "s0": 0.2,
        "w_succ": 0.4,
        "w_disc": 0.4,
        "data_ratio": 0.2,
        "strategy": "both",
        "clips_per_bin": 2,
        "retry_cap": 20,
        "iterations": 2,
        "min_improvement": 0.01,
    },
    "align": {
        "preset": "f0_f1",
        "weights": None,                # overrides the preset weight vector
        "reward_weight": None,          # overrides the preset global weight
        "threshold": 1.0,
        "epsilon": 1.0e-5,              # local choice
        "window": 10,
        "stats_episodes": 16,
    },
    "analysis": {
        "sr_lift": 0.1,
        "goal_radius": 0.5,
        "balance_fraction": 0.6,
        "skate_speed": 0.1,             # local choice
        "pilot_samples": 1024,
        "export_samples": 200,
        "episodes": 16,
    },
    "log": {
        "level": "info",
        "backup_stdout": True,
    },
}


PAPER_OVERRIDES: Dict[str, Any] = {
    "profile": "paper",
    "net": {
        "actor_hidden": [1024, 1024, 512],
        "high_level_hidden": [1024, 512],
        "disc_hidden": [1024, 1024, 512],
        "critic_part_dim": 128,
        "critic_hidden": [1024, 1024, 512],
    },
    "skill": {
        "latent_dim": 64,               # low-level table: Latent Dimension
        "iterations": 10000,            # 10,000 epochs
        "num_envs": 4096,
        "horizon": 32,
        "lr": 2.0e-5,                   # low-level table: Learning Rate
        "policy_minibatch": 16384,      # low-level table: Policy Mini-batchsize
        "disc_minibatch": 4096,         # low-level table: Disc/Enc Mini-batchsize
        "checkpoint_every": 500,
    },
    "task": {
        "iterations": 10000,
        "num_envs": 4096,
        "horizon": 32,
        "lr": 2.0e-5,                   # high-level table: Learning Rate
        "policy_minibatch": 16384,
        "disc_minibatch": 4096,
        "checkpoint_every": 500,
    },
    "scene": {
        "table_width": [0.8, 0.8],      # simple scenes use a 0.8 m table
    },
    "active": {
        "episodes_per_bin": 256,
    },
    "analysis": {
        "pilot_samples": 8192,
        "episodes": 1024,
    },
}


PROFILES = ("desk", "paper")
STRATEGIES = ("both", "success", "disc", "random")
ALIGN_PRESETS = ("f0_no_torso", "f0", "f0_no_torso_f1", "f0_f1", "f0_f1_f2")
LOG_LEVELS = ("debug", "warning", "error", "info")

# dotted key -> (lo, hi); both inclusive, None for unbounded
RANGES: Dict[str, Tuple[Optional[float], Optional[float]]] = {
    "sim.physics_hz": (1, None),
    "sim.control_hz": (1, None),
    "sim.gravity": (0.0, None),
    "sim.contact_stiffness": (0.0, None),
    "sim.contact_damping": (0.0, None),
    "sim.friction_coeff": (0.0, None),
    "sim.friction_damping": (0.0, None),
    "sim.object_mass": (1e-6, None),
    "sim.object_size": (1e-3, None),
    "sim.init_noise": (0.0, None),
    "data.fps": (1, None),
    "data.interp_frames": (2, None),
    "data.heldout_jitter": (0.0, 1.0),
    "skill.latent_dim": (2, None),
    "skill.iterations": (0, None),
    "skill.num_envs": (1, None),
    "skill.horizon": (1, None),
    "skill.episode_length": (1, None),
    "skill.action_std": (1e-8, None),
    "skill.lr": (0.0, None),
    "skill.gamma": (1e-8, 1.0),
    "skill.lam": (0.0, 1.0),
    "skill.clip_ratio": (0.0, 1.0),
    "skill.epochs": (1, None),
    "skill.policy_minibatch": (1, None),
    "skill.disc_minibatch": (1, None),
    "skill.grad_penalty": (0.0, None),
    "skill.disc_weight_decay": (0.0, None),
    "skill.enc_weight_decay": (0.0, None),
    "skill.disc_reward_weight": (0.0, None),
    "skill.enc_reward_weight": (0.0, None),
    "skill.diversity_bonus": (0.0, None),
    "skill.ref_init_prob": (0.0, 1.0),
    "skill.checkpoint_every": (1, None),
    "task.iterations": (0, None),
    "task.num_envs": (1, None),
    "task.horizon": (1, None),
    "task.episode_length": (1, None),
    "task.action_std": (1e-8, None),
    "task.gamma": (1e-8, 1.0),
    "task.lam": (0.0, 1.0),
    "task.clip_ratio": (0.0, 1.0),
    "task.epochs": (1, None),
    "task.w_goal": (0.0, None),
    "task.w_p1": (0.0, None),
    "task.w_p2": (0.0, None),
    "task.stage_bonus": (0.0, None),
    "task.boost_factor": (0.0, None),
    "task.high_level_interval": (1, None),
    "task.checkpoint_every": (1, None),
    "active.num_bins": (2, None),
    "active.episodes_per_bin": (1, None),
    "active.data_ratio": (0.0, None),
    "active.clips_per_bin": (1, None),
    "active.retry_cap": (1, None),
    "active.iterations": (0, None),
    "align.epsilon": (0.0, None),
    "align.window": (1, None),
    "align.stats_episodes": (1, None),
    "analysis.balance_fraction": (0.0, 1.0),
    "analysis.episodes": (1, None),
}
for _key in ("w_pos", "w_vel", "w_face", "w_grasp", "w_height", "w_obj_vel", "h_lift_target", "w_balance"):
    RANGES["rewards." + _key] = (0.0, None)

CHOICES: Dict[str, Sequence[str]] = {
    "profile": PROFILES,
    "active.strategy": STRATEGIES,
    "align.preset": ALIGN_PRESETS,
    "log.level": LOG_LEVELS,
}

# keys whose value is a free-form list of records
OPAQUE_KEYS = ("data.walk_variants", "align.weights")


def _merge(base: Dict[str, Any], new: Dict[str, Any]) -> Dict[str, Any]:
    for key, value in new.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def get_profile(name: str="desk") -> Dict[str, Any]:
    """Return a fresh nested dict of the named profile. """
    if name not in PROFILES:
        raise ConfigError("profile", f"unknown profile {name!r}, expected one of {list(PROFILES)}")
    config = copy.deepcopy(DESK)
    if name == "paper":
        _merge(config, PAPER_OVERRIDES)
    return config


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _check_leaf(key: str, value: Any, reference: Any):
    if reference is None or key in OPAQUE_KEYS:
        return
    if isinstance(reference, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected a boolean, got {value!r}")
    elif _is_number(reference):
        if not _is_number(value):
            raise ConfigError(key, f"expected a number, got {value!r}")
        if isinstance(reference, numbers.Integral) and not float(value).is_integer():
            raise ConfigError(key, f"expected an integer, got {value!r}")
    elif isinstance(reference, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
    elif isinstance(reference, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {value!r}")
        if reference and all(_is_number(r) for r in reference):
            if not all(_is_number(v) for v in value):
                raise ConfigError(key, f"expected a list of numbers, got {value!r}")
            if len(reference) in (2, 3) and key.split(".")[0] in ("character", "scene") and len(value) != len(reference):
                raise ConfigError(key, f"expected {len(reference)} values, got {len(value)}")


def _walk(config: Dict[str, Any], reference: Dict[str, Any], prefix: str=""):
    for key, value in config.items():
        dotted = prefix + str(key)
        if key not in reference:
            raise ConfigError(dotted, "unknown key")
        ref_value = reference[key]
        if isinstance(ref_value, dict):
            if not isinstance(value, dict):
                raise ConfigError(dotted, f"expected a section, got {value!r}")
            _walk(value, ref_value, dotted + ".")
        else:
            _check_leaf(dotted, value, ref_value)


def _lookup(config: Dict[str, Any], dotted: str) -> Any:
    node = config
    for part in dotted.split("."):
        node = node[part]
    return node


def validate_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Check that every key of `config` exists in the profile schema, that leaves carry values of
    the declared kind and that ranged values lie inside their range. Raises ConfigError naming the
    dotted key on the first violation.
    """
    _walk(config, DESK)
    for dotted, (lo, hi) in RANGES.items():
        try:
            value = _lookup(config, dotted)
        except KeyError:
            continue
        if lo is not None and value < lo:
            raise ConfigError(dotted, f"value {value} below minimum {lo}")
        if hi is not None and value > hi:
            raise ConfigError(dotted, f"value {value} above maximum {hi}")
    for dotted, choices in CHOICES.items():
        try:
            value = _lookup(config, dotted)
        except KeyError:
            continue
        if value not in choices:
            raise ConfigError(dotted, f"{value!r} is not one of {list(choices)}")

    for section in ("gains", "limits"):
        for joint, values in config.get("character", {}).get(section, {}).items():
            if section == "gains" and any(v <= 0 for v in values[:2]):
                raise ConfigError(f"character.gains.{joint}", "PD gains must be positive")
            if section == "gains" and values[2] < 0:
                raise ConfigError(f"character.gains.{joint}", "torque limit must be non-negative")
            if section == "limits" and values[0] > values[1]:
                raise ConfigError(f"character.limits.{joint}", "lower limit exceeds upper limit")
    for key, interval in config.get("scene", {}).items():
        if interval[0] > interval[1] or interval[0] < 0:
            raise ConfigError(f"scene.{key}", f"invalid interval {interval}")
    scene = config.get("scene", {})
    if "table_width" in scene and "sim" in config and scene["table_width"][0] <= config["sim"]["object_size"]:
        raise ConfigError("scene.table_width", "table must be wider than the object")
    sim = config.get("sim", {})
    if "physics_hz" in sim and "control_hz" in sim and sim["physics_hz"] % sim["control_hz"] != 0:
        raise ConfigError("sim.control_hz", "physics rate must be a multiple of the control rate")
    hr = config.get("active", {}).get("height_range")
    if hr is not None and (len(hr) != 2 or hr[0] >= hr[1]):
        raise ConfigError("active.height_range", f"invalid interval {hr}")
    return config


# run-length and logging keys; they change how long a run goes, not what it trains
RUN_CONTROL_KEYS = ("seed", "skill.iterations", "task.iterations", "active.iterations", "analysis.episodes", "log")


def fingerprint_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """A copy of `config` without the `RUN_CONTROL_KEYS`; checkpoints are compared on its hash. """
    config = copy.deepcopy(dict(config))
    for dotted in RUN_CONTROL_KEYS:
        *parents, leaf = dotted.split(".")
        node = config
        for part in parents:
            node = node.get(part, {})
        if isinstance(node, dict):
            node.pop(leaf, None)
    return config
