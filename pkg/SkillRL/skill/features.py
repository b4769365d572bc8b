from typing import Dict, List, Optional, Tuple

from collections import OrderedDict

import numpy as np
import torch

from SkillRL.data import Dataset
from SkillRL.env.character import Character
from SkillRL.rl.critic import PartwiseCritic
from SkillRL.skill.disc_enc import DiscEnc


@torch.no_grad()
def critic_features(
    critic: PartwiseCritic,
    obs: torch.Tensor,
    z: Optional[torch.Tensor]=None,
) -> Tuple["OrderedDict[str, torch.Tensor]", torch.Tensor]:
    """
    Tap activations and values of `critic` for a window of observations.

    `obs` may carry any leading shape, e.g. (W, obs_dim) or (B, W, obs_dim); a `z` of shape
    (latent_dim, ) or with fewer leading axes is broadcast over the window.
    """
    if z is not None:
        while z.dim() < obs.dim():
            z = z.unsqueeze(-2)
        z = z.expand(*obs.shape[:-1], z.shape[-1])
    return critic.features(obs, z)


def clip_observations(character: Character, clip) -> np.ndarray:
    """
    Observations of every frame of a clip. Velocities are forward differences; the last frame
    reuses the velocity of the one before it.
    """
    coords = clip.coords()
    delta = np.diff(coords, axis=0)
    delta[:, 2:] = (delta[:, 2:] + np.pi) % (2*np.pi) - np.pi
    vel = np.concatenate([delta, delta[-1:]], axis=0) * clip.fps
    return np.stack([character.featurize_coords(q, u, 1) for q, u in zip(coords, vel)])


@torch.no_grad()
def dataset_sequences(
    character: Character,
    dataset: Dataset,
    disc_enc: Optional[DiscEnc]=None,
    latent_dim: int=0,
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    One ``(obs, z)`` pair of arrays per clip. The latent of each transition is the encoder mean
    ``mu_q(s_t, s_{t+1})`` (the last frame repeats the one before it); without an encoder the
    latents are zero.
    """
    return [encode_sequence(clip_observations(character, clip), disc_enc, latent_dim) for clip in dataset]


@torch.no_grad()
def encode_sequence(
    obs: np.ndarray,
    disc_enc: Optional[DiscEnc]=None,
    latent_dim: int=0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Pair an observation sequence with the encoder latents of its transitions. """
    if disc_enc is not None and disc_enc.enc_head is not None and len(obs) > 1:
        o = torch.as_tensor(obs, dtype=torch.float32)
        mu = disc_enc.encode(o[:-1], o[1:]).numpy()
        z = np.concatenate([mu, mu[-1:]], axis=0)
    else:
        z = np.zeros([len(obs), latent_dim], dtype=np.float32)
    return obs, z


def sequence_taps(
    critic: PartwiseCritic,
    obs: np.ndarray,
    z: np.ndarray,
) -> Dict[str, np.ndarray]:
    """Per-step tap activations of one sequence as float64 arrays. """
    taps, _ = critic_features(
        critic, torch.as_tensor(obs, dtype=torch.float32),
        torch.as_tensor(z, dtype=torch.float32) if critic.latent_dim > 0 else None,
    )
    return {name: value.numpy().astype(np.float64) for name, value in taps.items()}


def transition_pairs(character: Character, dataset: Dataset) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    Observation pairs of every consecutive frame pair of every clip, as the discriminator sees
    reference data. Clip `c` contributes two (len - 1, obs_dim) arrays.
    """
    starts, nexts = [], []
    for clip in dataset:
        pairs = [character.featurize_transition(clip.frame(f), clip.frame(f + 1), clip.fps) for f in range(len(clip) - 1)]
        starts.append(np.stack([a for a, _ in pairs]))
        nexts.append(np.stack([b for _, b in pairs]))
    return starts, nexts
