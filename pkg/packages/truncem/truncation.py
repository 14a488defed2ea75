"""
Truncation Policy
Power-law dominating function H(R) = K R^r, the constant c4, the radius
R(delta) = H^{-1}(c4 delta^{-varrho}) and the radial truncation mapping.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import SfdeModel

logger = logging.getLogger(__name__)

DEFAULT_VARRHO = 1.0 / 3.0
DEFAULT_H_SCALE = 1.0


@dataclass(frozen=True)
class TruncationPolicy:
    """Parameters of H, c4 and varrho; r_exp = 0 means no truncation"""

    h_scale: float
    r_exp: float
    c4: float
    varrho: float

    def __post_init__(self):
        if not 0.0 < self.varrho < 0.5:
            raise ConfigurationError(f"varrho must lie in (0, 1/2), got {self.varrho}")
        if not (math.isfinite(self.h_scale) and self.h_scale > 0):
            raise ConfigurationError(f"h_scale must be positive, got {self.h_scale}")
        if self.r_exp < 0:
            raise ConfigurationError(f"r must be nonnegative, got {self.r_exp}")
        if not (math.isfinite(self.c4) and self.c4 > 0):
            raise ConfigurationError(f"c4 must be positive, got {self.c4}")

    @property
    def truncating(self) -> bool:
        return self.r_exp > 0

    def h(self, x: float) -> float:
        return self.h_scale * x**self.r_exp

    def h_inverse(self, u: float) -> float:
        if not self.truncating:
            return math.inf
        return (u / self.h_scale) ** (1.0 / self.r_exp)


def make_policy(
    model: SfdeModel, h_scale: float = DEFAULT_H_SCALE, varrho: float = DEFAULT_VARRHO
) -> TruncationPolicy:
    """c4 = H(||xi||) v H(1) v |f(0)| v |g(0)| for the model's declared exponent r"""
    if not 0.0 < varrho < 0.5:
        raise ConfigurationError(f"varrho must lie in (0, 1/2), got {varrho}")
    if not (math.isfinite(h_scale) and h_scale > 0):
        raise ConfigurationError(f"h_scale must be positive, got {h_scale}")

    r = model.growth_exponent_r
    zero = model.zero_segment()
    f0 = float(np.linalg.norm(model.drift_at(zero)))
    g0 = float(np.linalg.norm(model.diffusion_at(zero)))
    xi_norm = model.initial_norm()
    c4 = max(h_scale * xi_norm**r, h_scale, f0, g0)

    policy = TruncationPolicy(h_scale=h_scale, r_exp=r, c4=c4, varrho=varrho)
    if policy.truncating:
        logger.debug(f"Truncation policy for {model.model_id}: K={h_scale}, r={r}, c4={c4}, varrho={varrho}")
    else:
        logger.debug(f"Model {model.model_id} has r=0; truncation disabled")
    return policy


def radius(policy: TruncationPolicy, delta: float) -> float:
    """R(delta) = (c4 delta^{-varrho} / K)^{1/r}; infinite when r = 0"""
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"Step size must lie in (0, 1], got {delta}")
    if not policy.truncating:
        return math.inf
    return policy.h_inverse(policy.c4 * delta ** (-policy.varrho))


def pi_delta(x: Union[Sequence[float], np.ndarray], R: float) -> np.ndarray:
    """Radial projection of x onto the closed ball of radius R; 0 maps to 0"""
    vec = np.array(x, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(vec))
    if norm <= R:
        return vec
    out = vec * (R / norm)
    # rounding can leave |out| an ulp above R
    while float(np.linalg.norm(out)) > R:
        out = np.nextafter(out, 0.0)
    return out
