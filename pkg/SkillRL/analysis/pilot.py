"""
How do the features of a walking-only critic separate walking from reaching?

Every tap of the critic is evaluated on four sets of motion: the walking data it was trained
on, a held-out walking set from the same family, reach motion produced by a trained task
policy (an analog of recorded reaching) and generated reach clips. The Frechet distance of
every set to the training walk, per tap, goes into one table; raw features go into an export
for external embedding plots.
"""

from typing import Any, Dict, List, Optional, Tuple

from collections import OrderedDict

import numpy as np
import pandas as pd

from SkillRL.analysis.fid import FeatureSet, fid
from SkillRL.data import Dataset, generate_reach_clip, reference_walk_dataset
from SkillRL.env.character import Character
from SkillRL.env.sim2d import Scene
from SkillRL.exp import derive_seed
from SkillRL.logger import logger
from SkillRL.misc.errors import UnreachableError
from SkillRL.rl.critic import TAP_NAMES
from SkillRL.skill.features import dataset_sequences, encode_sequence, sequence_taps
from SkillRL.skill.space import SkillSpace
from SkillRL.task.episode import run_task_episodes
from SkillRL.task.policy import HighLevelPolicy

REFERENCE = "walk_train"
PILOT_SETS = ("walk_train", "walk_heldout", "reach_analog", "interpolated")


def interpolated_reach_dataset(config: Any, rng: np.random.Generator, frames: int, character: Optional[Character]=None) -> Dataset:
    """Generated reach clips over random scenes until they hold at least `frames` frames. """
    clips, total, misses = [], 0, 0
    while total < frames:
        scene = Scene.sample(config["scene"], rng, config["sim"]["object_size"])
        try:
            clip = generate_reach_clip(
                scene, "left" if scene.facing > 0 else "right", rng, character, config["grasp"],
                T=int(config["data"]["interp_frames"]), fps=config["data"]["fps"], name=f"pilot_reach_{len(clips)}",
            )
        except UnreachableError:
            misses += 1
            if misses > int(config["active"]["retry_cap"]) * 10:
                raise
            continue
        clips.append(clip)
        total += len(clip)
    return Dataset(clips)


def pooled_taps(space: SkillSpace, sequences: List[Tuple[np.ndarray, np.ndarray]]) -> Dict[str, np.ndarray]:
    """Per-step tap activations of all sequences, stacked. """
    pooled: Dict[str, list] = {name: [] for name in TAP_NAMES}
    for obs, z in sequences:
        taps = sequence_taps(space.critic, obs, z)
        for name in TAP_NAMES:
            pooled[name].append(taps[name])
    return {name: np.concatenate(values, axis=0) for name, values in pooled.items()}


def _subsample(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    if len(x) <= n:
        return x
    return x[np.sort(rng.choice(len(x), size=n, replace=False))]


def pilot_sequences(
    space: SkillSpace,
    config: Any,
    seed: int,
    character: Character,
    policy: Optional[HighLevelPolicy]=None,
    walk_train: Optional[Dataset]=None,
) -> "OrderedDict[str, List[Tuple[np.ndarray, np.ndarray]]]":
    """``(obs, z)`` sequences of every pilot set; the reach analog is left out without a policy. """
    samples = int(config["analysis"]["pilot_samples"])
    latent_dim = space.latent_dim
    walk_train = walk_train if walk_train is not None else reference_walk_dataset(config, character=character)
    heldout = reference_walk_dataset(config, np.random.default_rng(derive_seed(seed, "pilot.heldout")), heldout=True, character=character)
    interpolated = interpolated_reach_dataset(config, np.random.default_rng(derive_seed(seed, "pilot.reach")), samples, character)

    sets = OrderedDict()
    sets["walk_train"] = dataset_sequences(character, walk_train, space.disc_enc, latent_dim)
    sets["walk_heldout"] = dataset_sequences(character, heldout, space.disc_enc, latent_dim)
    if policy is not None:
        episodes = int(config["analysis"]["episodes"])
        seeds = [derive_seed(seed, "pilot.analog", e) for e in range(episodes)]
        stats = run_task_episodes(policy, space, config, seeds, record=True, character=character)
        sets["reach_analog"] = [encode_sequence(np.stack(s.observations), space.disc_enc, latent_dim) for s in stats]
    else:
        logger.warning("no task policy given, the reach analog set is skipped")
    sets["interpolated"] = dataset_sequences(character, interpolated, space.disc_enc, latent_dim)
    return sets


def pilot_study(
    space: SkillSpace,
    config: Any,
    seed: int,
    character: Optional[Character]=None,
    policy: Optional[HighLevelPolicy]=None,
    walk_train: Optional[Dataset]=None,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Returns
    -------
    (fid_table, export) :  One row per tap with the FID of every set to the training walk, and
        the exported features (columns tap, dataset, sample, v0, v1, ...).
    """
    character = character or Character.from_config(config["character"])
    rng = np.random.default_rng(derive_seed(seed, "pilot.subsample"))
    samples = int(config["analysis"]["pilot_samples"])
    export_n = int(config["analysis"]["export_samples"])
    sets = pilot_sequences(space, config, seed, character, policy, walk_train)
    features = OrderedDict((name, pooled_taps(space, seqs)) for name, seqs in sets.items())

    table, export = [], []
    for tap in TAP_NAMES:
        ref = FeatureSet(tap, _subsample(features[REFERENCE][tap], samples, rng), REFERENCE)
        row = {"tap": tap}
        for name, taps in features.items():
            other = ref if name == REFERENCE else FeatureSet(tap, _subsample(taps[tap], samples, rng), name)
            row[f"{REFERENCE}|{name}"] = fid(ref, other)
        table.append(row)
        for name, taps in features.items():
            x = _subsample(taps[tap], export_n, rng)
            for k, v in enumerate(x):
                export.append({"tap": tap, "dataset": name, "sample": k, **{f"v{i}": float(val) for i, val in enumerate(v)}})
    return pd.DataFrame(table), pd.DataFrame(export)


def fid_ratios(table: pd.DataFrame, name: str, reference: str="walk_heldout") -> pd.Series:
    """Per tap, the FID of `name` to the training walk divided by the held-out walking FID. """
    ref = table[f"{REFERENCE}|{reference}"].to_numpy()
    return pd.Series(table[f"{REFERENCE}|{name}"].to_numpy() / np.maximum(ref, 1e-12), index=table["tap"])
