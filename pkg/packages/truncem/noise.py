"""
Brownian Noise
Seeded Brownian increments on the finest grid and exact aggregation to
coarser grids, so that coarse and reference solutions share one sample path.

Each sample draws from its own Philox (counter-based) stream keyed by
SeedSequence([base_seed, sample_index]); Gaussians come from numpy's
Generator.standard_normal (ziggurat), scaled by sqrt(delta).
"""

import logging
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

GRID_MAGIC = b"SFDEBG01"
_HEADER = struct.Struct("<8sQd")


@dataclass(frozen=True, eq=False)
class BrownianGrid:
    """Increments B((k+1)delta) - B(k delta), k = 0..n-1, for one sample path"""

    delta: float
    increments: np.ndarray
    sample_seed: int
    base_seed: Optional[int] = None
    sample_index: Optional[int] = None

    def __post_init__(self):
        increments = np.array(self.increments, dtype=np.float64)
        if increments.ndim == 1:
            increments = increments.reshape(-1, 1)
        if increments.ndim != 2 or increments.shape[0] < 1:
            raise DomainError(f"Increments must be an (n, n2) array, got shape {increments.shape}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"Grid step must be positive, got {self.delta}")
        increments.setflags(write=False)
        object.__setattr__(self, "increments", increments)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def n_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def dim_noise(self) -> int:
        return self.increments.shape[1]

    def same_sample(self, other: "BrownianGrid") -> bool:
        """True when both grids derive from the same (base_seed, sample_index)"""
        if self.base_seed is None or other.base_seed is None:
            return self.sample_seed == other.sample_seed
        return (self.base_seed, self.sample_index) == (other.base_seed, other.sample_index)

    def head(self, n_steps: int) -> "BrownianGrid":
        """The first n_steps increments of this sample"""
        if not 1 <= n_steps <= self.n_steps:
            raise ConfigurationError(f"Grid holds {self.n_steps} increments, {n_steps} requested")
        if n_steps == self.n_steps:
            return self
        return BrownianGrid(
            delta=self.delta,
            increments=self.increments[:n_steps],
            sample_seed=self.sample_seed,
            base_seed=self.base_seed,
            sample_index=self.sample_index,
        )


def _stream(base_seed: int, sample_index: int) -> np.random.SeedSequence:
    if base_seed < 0 or sample_index < 0:
        raise ConfigurationError("Seeds and sample indices must be nonnegative integers")
    return np.random.SeedSequence([int(base_seed), int(sample_index)])


def generate(
    base_seed: int, sample_index: int, n_fine: int, delta_fine: float, dim_noise: int = 1
) -> BrownianGrid:
    """Deterministic Brownian increments for sample `sample_index` of a run seeded by base_seed"""
    if n_fine < 1:
        raise ConfigurationError(f"n_fine must be at least 1, got {n_fine}")
    if not (math.isfinite(delta_fine) and delta_fine > 0):
        raise ConfigurationError(f"delta_fine must be positive, got {delta_fine}")
    if dim_noise < 1:
        raise ConfigurationError(f"dim_noise must be at least 1, got {dim_noise}")

    seq = _stream(base_seed, sample_index)
    rng = np.random.Generator(np.random.Philox(seq))
    increments = rng.standard_normal((n_fine, dim_noise)) * math.sqrt(delta_fine)
    sample_seed = int(seq.generate_state(1, np.uint64)[0])
    return BrownianGrid(
        delta=delta_fine,
        increments=increments,
        sample_seed=sample_seed,
        base_seed=int(base_seed),
        sample_index=int(sample_index),
    )


def _pairwise_halve(increments: np.ndarray) -> np.ndarray:
    return increments[0::2] + increments[1::2]


def coarsen(grid: BrownianGrid, factor: int) -> BrownianGrid:
    """
    Aggregate consecutive blocks of `factor` increments.

    Power-of-two factors sum by repeated pairwise halving, so that
    coarsen(coarsen(g, 2), 2) and coarsen(g, 4) agree bit for bit; the
    remaining odd part is summed in ascending index order.
    """
    if factor < 1 or int(factor) != factor:
        raise ConfigurationError(f"Coarsening factor must be a positive integer, got {factor}")
    factor = int(factor)
    if grid.n_steps % factor:
        raise ConfigurationError(f"Factor {factor} does not divide the {grid.n_steps} fine steps")
    if factor == 1:
        return grid

    increments = grid.increments
    odd = factor
    while odd % 2 == 0:
        increments = _pairwise_halve(increments)
        odd //= 2
    if odd > 1:
        summed = increments[0::odd].copy()
        for offset in range(1, odd):
            summed += increments[offset::odd]
        increments = summed

    return BrownianGrid(
        delta=grid.delta * factor,
        increments=increments,
        sample_seed=grid.sample_seed,
        base_seed=grid.base_seed,
        sample_index=grid.sample_index,
    )


def coarsening_factor(grid: BrownianGrid, delta: float) -> int:
    """Integer ratio delta / grid.delta, validated to relative 1e-9"""
    ratio = delta / grid.delta
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError(
            f"Noise grid step {grid.delta} does not divide the scheme step {delta}"
        )
    return factor


def dump_grid(grid: BrownianGrid, path: Union[str, Path]) -> Path:
    """Write magic, n (uint64) and delta (float64) followed by little-endian increments"""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(GRID_MAGIC, grid.n_steps, grid.delta))
        f.write(np.ascontiguousarray(grid.increments, dtype="<f8").tobytes(order="C"))
    logger.info(f"Wrote {grid.n_steps}x{grid.dim_noise} Brownian grid to {path}")
    return path


def load_grid(path: Union[str, Path]) -> BrownianGrid:
    """Read a grid written by dump_grid; the noise dimension is inferred from the payload"""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigurationError(f"{path}: file too short for a Brownian grid header")
    magic, n_steps, delta = _HEADER.unpack_from(raw)
    if magic != GRID_MAGIC:
        raise ConfigurationError(f"{path}: bad magic {magic!r}")
    payload = raw[_HEADER.size:]
    values = len(payload) // 8
    if n_steps == 0 or values == 0 or len(payload) % 8 or values % n_steps:
        raise ConfigurationError(f"{path}: payload of {len(payload)} bytes does not match n={n_steps}")
    increments = np.frombuffer(payload, dtype="<f8").reshape(n_steps, values // n_steps)
    # the file carries no seed; identify the sample by its payload
    sample_seed = zlib.crc32(payload)
    return BrownianGrid(delta=delta, increments=increments.astype(np.float64), sample_seed=sample_seed)
