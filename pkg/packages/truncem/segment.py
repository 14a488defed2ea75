"""
Segment Core
Piecewise-linear path snapshots on [-tau, 0]: the state of the truncated EM scheme.

A segment stores m+1 equidistant node values; node i holds the value at
theta = (i - m) * delta, so node m is theta = 0 and node 0 is theta = -tau.
Values between nodes are linear interpolations.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

# Clamp band for theta, relative to tau
THETA_TOLERANCE = 1e-12

# Node snapping band, in units of the node spacing
_NODE_SNAP = 1e-12

SUPPORTED_POWERS = (1, 2, 3, 4)


@lru_cache(maxsize=None)
def _gauss_legendre(n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes mapped to [0, 1] and weights summing to 1"""
    x, w = np.polynomial.legendre.leggauss(n_points)
    u = 0.5 * (x + 1.0)
    u.setflags(write=False)
    w = 0.5 * w
    w.setflags(write=False)
    return u, w


@dataclass(frozen=True, eq=False)
class Segment:
    """Continuous-path snapshot on [-tau, 0] stored at m+1 equidistant nodes"""

    nodes: np.ndarray
    delta: float

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64)
        if nodes.ndim == 1:
            nodes = nodes.reshape(-1, 1)
        if nodes.ndim != 2 or nodes.shape[0] < 2 or nodes.shape[1] < 1:
            raise DomainError(
                f"Segment needs at least two nodes of dimension >= 1, got shape {nodes.shape}"
            )
        delta = float(self.delta)
        if not np.isfinite(delta) or delta <= 0.0:
            raise DomainError(f"Node spacing must be positive and finite, got {self.delta}")
        if not np.all(np.isfinite(nodes)):
            raise DomainError("Segment nodes must be finite")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "delta", delta)

    @classmethod
    def _trusted(cls, nodes: np.ndarray, delta: float) -> "Segment":
        """Wrap an already validated, read-only node array without copying"""
        seg = object.__new__(cls)
        object.__setattr__(seg, "nodes", nodes)
        object.__setattr__(seg, "delta", delta)
        return seg

    @classmethod
    def constant(cls, value: Union[float, Sequence[float]], m: int, delta: float) -> "Segment":
        """Segment identically equal to value"""
        vec = np.atleast_1d(np.asarray(value, dtype=np.float64))
        return cls(np.tile(vec, (m + 1, 1)), delta)

    @classmethod
    def from_function(
        cls, fn: Callable[[float], Union[float, Sequence[float]]], tau: float, m: int
    ) -> "Segment":
        """Sample fn at the m+1 grid points of [-tau, 0]"""
        if m < 1:
            raise ConfigurationError(f"m must be a positive integer, got {m}")
        delta = tau / m
        rows = [np.atleast_1d(np.asarray(fn((i - m) * delta), dtype=np.float64)) for i in range(m + 1)]
        return cls(np.vstack(rows), delta)

    @property
    def m(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def tau(self) -> float:
        return self.m * self.delta

    @property
    def thetas(self) -> np.ndarray:
        return (np.arange(self.m + 1) - self.m) * self.delta


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Sampled path: strictly increasing times with one n1-vector per time"""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if times.ndim != 1 or values.ndim != 2 or len(times) != len(values):
            raise DomainError("GridFunction times and values must have equal length")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise DomainError("GridFunction times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise DomainError("GridFunction entries must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def start(self) -> float:
        return float(self.times[0])


def _node_position(seg: Segment, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Left node index and interpolation weight for each theta (already range-checked)"""
    s = (theta + seg.tau) / seg.delta
    nearest = np.rint(s)
    s = np.where(np.abs(s - nearest) <= _NODE_SNAP * np.maximum(1.0, nearest), nearest, s)
    s = np.clip(s, 0.0, float(seg.m))
    idx = np.minimum(np.floor(s).astype(np.int64), seg.m - 1)
    return idx, s - idx


def _check_theta(seg: Segment, theta: np.ndarray) -> np.ndarray:
    tol = THETA_TOLERANCE * seg.tau
    if np.any(theta < -seg.tau - tol) or np.any(theta > tol):
        raise DomainError(f"theta must lie in [-{seg.tau}, 0]")
    return np.clip(theta, -seg.tau, 0.0)


def segment_eval(seg: Segment, theta: float) -> np.ndarray:
    """Value of the linear interpolant at theta; node values are returned exactly"""
    th = _check_theta(seg, np.asarray([float(theta)]))
    idx, w = _node_position(seg, th)
    i, weight = int(idx[0]), float(w[0])
    if weight == 0.0:
        return seg.nodes[i].copy()
    if weight == 1.0:
        return seg.nodes[i + 1].copy()
    return (1.0 - weight) * seg.nodes[i] + weight * seg.nodes[i + 1]


def segment_eval_many(seg: Segment, thetas: Sequence[float]) -> np.ndarray:
    """Vectorized segment_eval; returns shape (len(thetas), dim)"""
    th = _check_theta(seg, np.asarray(thetas, dtype=np.float64).reshape(-1))
    idx, w = _node_position(seg, th)
    w = w[:, None]
    return (1.0 - w) * seg.nodes[idx] + w * seg.nodes[idx + 1]


def segment_norm(seg: Segment) -> float:
    """Sup-norm of the interpolant, i.e. the largest Euclidean node norm"""
    return float(np.max(np.linalg.norm(seg.nodes, axis=1)))


def segment_integral_power(seg: Segment, power: int) -> Union[float, np.ndarray]:
    """
    Exact integral of psi(theta)**power over [-tau, 0].

    Each sub-interval carries a polynomial of degree <= power, integrated
    with ceil((power+1)/2) Gauss-Legendre points. Powers above 1 need a
    scalar segment; power 1 integrates vector segments componentwise.
    """
    if power not in SUPPORTED_POWERS:
        raise ConfigurationError(f"Unsupported power {power}; expected one of {SUPPORTED_POWERS}")
    if power > 1 and seg.dim != 1:
        raise ConfigurationError("Powers above 1 are only defined for scalar segments")

    u, w = _gauss_legendre((power + 2) // 2)
    left = seg.nodes[:-1]
    right = seg.nodes[1:]
    # (intervals, points, dim)
    values = left[:, None, :] + (right - left)[:, None, :] * u[None, :, None]
    total = seg.delta * np.einsum("j,ijd->d", w, values**power)
    if seg.dim == 1:
        return float(total[0])
    return total


def integrate_pointwise(
    segments: Sequence[Segment],
    integrand: Callable[..., np.ndarray],
    points_per_interval: int = 64,
) -> float:
    """
    Integrate integrand(*values) over [-tau, 0] for segments on a common grid.

    integrand receives one (intervals, points, dim) array per segment and
    returns an (intervals, points) array of scalars.
    """
    if not segments:
        raise ConfigurationError("integrate_pointwise needs at least one segment")
    first = segments[0]
    for seg in segments[1:]:
        if seg.m != first.m or seg.delta != first.delta:
            raise DomainError("Segments must share the same node grid")

    u, w = _gauss_legendre(points_per_interval)
    values = []
    for seg in segments:
        left = seg.nodes[:-1]
        values.append(left[:, None, :] + (seg.nodes[1:] - left)[:, None, :] * u[None, :, None])
    weighted = np.asarray(integrand(*values), dtype=np.float64) * w[None, :]
    return float(first.delta * weighted.sum())


def shift_append(seg: Segment, new_node: Union[float, Sequence[float], np.ndarray]) -> Segment:
    """Segment at the next grid time: drop the oldest node, append new_node at theta = 0"""
    vec = np.asarray(new_node, dtype=np.float64).reshape(-1)
    if vec.shape != (seg.dim,):
        raise DomainError(f"New node must have length {seg.dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise DomainError("New node must be finite")
    nodes = np.concatenate((seg.nodes[1:], vec[None, :]))
    nodes.setflags(write=False)
    return Segment._trusted(nodes, seg.delta)
