"""Population and clone-interaction sampling.

Every operation is a pure function of its :class:`~mirrormatch.streams.StreamKey`:
calling it twice with the same key returns identical values. The draw
algorithms are frozen so that golden outputs stay stable:

* standard normals: inverse normal CDF applied to the key's uniform
  stream (zero-guarded at 2**-54);
* unit-ball points: normal direction normalized to the sphere, radius
  U**(1/k) -- rejection-free in any dimension;
* batch draw order: direction block, then radii, then noise block.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .streams import StreamKey

PER_INTERACTION = "per-interaction"
FIXED_SUBJECT_CLONE = "fixed-subject-clone"

_MIN_UNIFORM = 2.0**-54  # ndtri(0) is -inf; clamp the (prob 2**-53) exact zero


class CloneDraw(NamedTuple):
    """One interaction outcome: true distance and clone distance."""

    true_norm: float
    clone_dist: float


def _check_dim(k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"dimension k must be a positive integer, got {k!r}")


def _check_count(count: int) -> None:
    if not isinstance(count, int) or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")


def _standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.random(shape)
    np.maximum(u, _MIN_UNIFORM, out=u)
    return ndtri(u)


def _ball_points(rng: np.random.Generator, k: int, count: int) -> np.ndarray:
    directions = _standard_normals(rng, (count, k))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    # an exactly-zero normal vector has probability 2**(-53 k) per draw but
    # would poison a whole batch with NaNs; map it to the origin instead
    np.maximum(norms, np.finfo(float).tiny, out=norms)
    directions /= norms
    radii = rng.random((count, 1)) ** (1.0 / k)
    return directions * radii


def sample_unit_ball_batch(k: int, count: int, stream: StreamKey) -> np.ndarray:
    """Draw ``count`` points uniformly from the k-dimensional unit ball."""
    _check_dim(k)
    _check_count(count)
    return _ball_points(stream.generator(), k, count)


def sample_unit_ball(k: int, stream: StreamKey) -> np.ndarray:
    """Draw one point uniformly from the k-dimensional unit ball."""
    return sample_unit_ball_batch(k, 1, stream)[0]


def sample_gaussian_batch(k: int, count: int, variance: float, stream: StreamKey) -> np.ndarray:
    """Draw ``count`` isotropic Gaussian vectors with the given per-coordinate variance."""
    _check_dim(k)
    _check_count(count)
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance!r}")
    return np.sqrt(variance) * _standard_normals(stream.generator(), (count, k))


def sample_gaussian_vector(k: int, variance: float, stream: StreamKey) -> np.ndarray:
    """Draw one mean-zero isotropic Gaussian vector."""
    return sample_gaussian_batch(k, 1, variance, stream)[0]


def draw_clone_batch(
    k: int,
    count: int,
    sigma_subject2: float,
    sigma_other2: float,
    mode: str = PER_INTERACTION,
    subject_fixed_noise: np.ndarray | None = None,
    *,
    stream: StreamKey,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` full clone interactions; returns (true_norms, clone_dists).

    Per-interaction mode regenerates the subject's proxy for every
    interaction, so the combined noise on the clone difference is a
    single Gaussian with per-coordinate variance
    ``sigma_subject2 + sigma_other2``. Fixed-subject-clone mode reuses
    one subject noise vector (supplied by the caller) across all
    interactions in the batch.
    """
    _check_dim(k)
    _check_count(count)
    if not (sigma_subject2 > 0 and sigma_other2 > 0):
        raise ValueError("noise variances must be positive")
    if mode == PER_INTERACTION:
        if subject_fixed_noise is not None:
            raise ValueError("subject_fixed_noise is only meaningful in fixed-subject-clone mode")
    elif mode == FIXED_SUBJECT_CLONE:
        if subject_fixed_noise is None:
            raise ValueError("fixed-subject-clone mode requires subject_fixed_noise")
        subject_fixed_noise = np.asarray(subject_fixed_noise, dtype=np.float64)
        if subject_fixed_noise.shape != (k,):
            raise ValueError(f"subject_fixed_noise must have shape ({k},)")
    else:
        raise ValueError(f"unknown clone mode {mode!r}")

    rng = stream.generator()
    points = _ball_points(rng, k, count)
    true_norms = np.linalg.norm(points, axis=1)
    if mode == PER_INTERACTION:
        combined = np.sqrt(sigma_subject2 + sigma_other2) * _standard_normals(rng, (count, k))
        clone_diff = points + combined
    else:
        eps_other = np.sqrt(sigma_other2) * _standard_normals(rng, (count, k))
        clone_diff = points + eps_other - subject_fixed_noise[None, :]
    return true_norms, np.linalg.norm(clone_diff, axis=1)


def draw_clone_interaction(
    k: int,
    sigma_subject2: float,
    sigma_other2: float,
    mode: str = PER_INTERACTION,
    subject_fixed_noise: np.ndarray | None = None,
    *,
    stream: StreamKey,
) -> CloneDraw:
    """Draw a single clone interaction."""
    norms, dists = draw_clone_batch(
        k, 1, sigma_subject2, sigma_other2, mode, subject_fixed_noise, stream=stream
    )
    return CloneDraw(float(norms[0]), float(dists[0]))
