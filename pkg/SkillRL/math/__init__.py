from typing import Union

import numpy as np

from .distributions import FixedStdNormal, gaussian_log_prob


def wrap_angle(angle: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Map angles into [-pi, pi). """
    return (angle + np.pi) % (2*np.pi) - np.pi


def shortest_arc_lerp(a: Union[float, np.ndarray], b: Union[float, np.ndarray], t: Union[float, np.ndarray]):
    """
    Interpolate from angle `a` to angle `b` along the shorter arc of the unit circle. This is
    the planar case of quaternion slerp: a rotation about a fixed axis advances at constant
    angular rate.
    """
    return a + t * wrap_angle(np.asarray(b) - np.asarray(a))


def unit_sphere(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """`n` samples distributed uniformly on the unit sphere in `dim` dimensions. """
    z = rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)
