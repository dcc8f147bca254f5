"""Spatial deployment: Poisson point processes on rectangles and disks.

Positions are plain (n, 2) float arrays in meters. Every sampler takes an
explicit numpy Generator so a trial owns its randomness end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Field", "Deployment", "sample_ppp", "sample_uniform",
           "sample_ppp_disk", "distance"]


@dataclass(frozen=True)
class Field:
    """Rectangular deployment region, dimensions in meters."""

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("field dimensions must be positive")

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class Deployment:
    """One realized drop: device, access-point and interferer positions."""

    ue_positions: np.ndarray
    ap_positions: np.ndarray
    aggressor_positions: np.ndarray = field(
        default_factory=lambda: np.empty((0, 2)))
    aggressor_ap_positions: np.ndarray = field(
        default_factory=lambda: np.empty((0, 2)))

    @property
    def n_ue(self) -> int:
        return len(self.ue_positions)


def sample_ppp(density: float, field: Field, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson point process on a rectangular field.

    The count is Poisson(density * area); points are i.i.d. uniform.
    Returns an (n, 2) array (possibly empty).
    """
    if density < 0:
        raise ValueError("density must be >= 0")
    n = int(rng.poisson(density * field.area))
    return sample_uniform(n, field, rng)


def sample_uniform(n: int, field: Field, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform points on the field, shape (n, 2)."""
    pts = rng.uniform(0.0, 1.0, size=(n, 2))
    pts[:, 0] *= field.width
    pts[:, 1] *= field.height
    return pts


def sample_ppp_disk(density: float, radius: float,
                    rng: np.random.Generator,
                    center=(0.0, 0.0)) -> np.ndarray:
    """Homogeneous PPP on a disk; used by the single-source study geometry."""
    if density < 0:
        raise ValueError("density must be >= 0")
    n = int(rng.poisson(density * math.pi * radius * radius))
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return pts + np.asarray(center, dtype=float)


def distance(p, q) -> float:
    """Euclidean distance between two 2D points, meters."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(math.hypot(p[0] - q[0], p[1] - q[1]))


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(len(a), len(b)) matrix of Euclidean distances."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    diff = a[:, None, :] - b[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])
