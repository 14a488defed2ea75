"""
SFDE Models
Problem definition dX(t) = f(X_t)dt + g(X_t)dB(t), X = xi on [-tau, 0],
plus the built-in models addressable by name from the CLI.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np

from .errors import ConfigurationError, DomainError
from .segment import Segment, segment_integral_power

logger = logging.getLogger(__name__)

# p = q - EPSILON_HAT; any value in (0, q - 3) works for diagnostics
EPSILON_HAT = 0.01


@dataclass(frozen=True)
class SfdeModel:
    """Drift f, diffusion g, delay tau and initial data xi of an SFDE"""

    model_id: str
    dim_state: int
    dim_noise: int
    tau: float
    drift: Callable[[Segment], Any]
    diffusion: Callable[[Segment], Any]
    initial: Callable[[float], Any]
    initial_holder_c2: float = 0.0
    growth_exponent_r: float = 0.0
    khasminskii_exponent_rhat: float = 0.0
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim_state < 1 or self.dim_noise < 1:
            raise ConfigurationError("Model dimensions must be positive integers")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigurationError(f"Delay tau must be positive, got {self.tau}")
        if self.growth_exponent_r < 0 or self.khasminskii_exponent_rhat < 0:
            raise ConfigurationError("Growth exponents r and r_hat must be nonnegative")
        if self.initial_holder_c2 < 0:
            raise ConfigurationError("Hoelder constant c2 must be nonnegative")

    def drift_at(self, seg: Segment) -> np.ndarray:
        """f(seg) as an (n1,) float array"""
        value = np.asarray(self.drift(seg), dtype=np.float64)
        if value.size != self.dim_state:
            raise DomainError(
                f"Drift of {self.model_id} returned {value.size} values, expected {self.dim_state}"
            )
        return value.reshape(self.dim_state)

    def diffusion_at(self, seg: Segment) -> np.ndarray:
        """g(seg) as an (n1, n2) float array"""
        value = np.asarray(self.diffusion(seg), dtype=np.float64)
        if value.size != self.dim_state * self.dim_noise:
            raise DomainError(
                f"Diffusion of {self.model_id} returned {value.size} values, "
                f"expected {self.dim_state}x{self.dim_noise}"
            )
        return value.reshape(self.dim_state, self.dim_noise)

    def initial_at(self, theta: float) -> np.ndarray:
        """xi(theta) as an (n1,) float array"""
        value = np.asarray(self.initial(theta), dtype=np.float64)
        if value.size != self.dim_state:
            raise DomainError(f"Initial data returned {value.size} values, expected {self.dim_state}")
        return value.reshape(self.dim_state)

    def initial_segment(self, m: int) -> Segment:
        """xi sampled on the grid of m intervals over [-tau, 0]"""
        return Segment.from_function(self.initial_at, self.tau, m)

    def initial_norm(self, resolution: int = 1024) -> float:
        """Sup-norm of xi, approximated on a grid of `resolution` intervals"""
        thetas = np.linspace(-self.tau, 0.0, resolution + 1)
        return float(max(np.linalg.norm(self.initial_at(t)) for t in thetas))

    def zero_segment(self, m: int = 1) -> Segment:
        """The zero element of C_tau on a grid of m intervals"""
        return Segment.constant(np.zeros(self.dim_state), m, self.tau / m)


@dataclass(frozen=True)
class AssumptionConstants:
    """Constants q, alpha_0..alpha_2, c1, c2 of the monotonicity and growth assumptions"""

    q: float
    alpha0: float
    alpha1: float
    alpha2: float
    c1: float = 1.0
    c2: float = 0.0
    rhat: Optional[float] = None

    def __post_init__(self):
        if not self.q > 3:
            raise ConfigurationError(f"q must exceed 3, got {self.q}")
        if min(self.alpha0, self.alpha1, self.alpha2) <= 0:
            raise ConfigurationError("alpha0, alpha1 and alpha2 must be positive")
        if not self.alpha1 > self.alpha2:
            raise ConfigurationError(
                f"alpha1 must exceed alpha2, got alpha1={self.alpha1}, alpha2={self.alpha2}"
            )
        if self.c1 <= 0:
            raise ConfigurationError("c1 must be positive")
        if self.c2 < 0:
            raise ConfigurationError("c2 must be nonnegative")
        if self.rhat is not None and self.rhat < 0:
            raise ConfigurationError("rhat must be nonnegative")

    @property
    def p(self) -> float:
        return self.q - EPSILON_HAT


def _constant(value: float, dim: int = 1) -> Callable[[float], np.ndarray]:
    vec = np.full(dim, float(value))

    def initial(theta: float) -> np.ndarray:
        return vec

    return initial


def make_cubic_volatility_model(
    a0: float, a1: float, a2: float, tau: float = 1.0, xi: float = 0.05
) -> SfdeModel:
    """
    Functional stochastic volatility model

        dX = (a0 + a1 X(t) - a2 X(t)^3) dt + (int_{-tau}^0 X(t+theta)^2 dtheta) dB(t)

    with constant initial data xi. Growth exponents r = r_hat = 2.
    """
    for name, value in (("a0", a0), ("a1", a1), ("a2", a2)):
        if not (math.isfinite(value) and value > 0):
            raise ConfigurationError(f"{name} must be positive, got {value}")
    if not math.isfinite(xi):
        raise ConfigurationError(f"xi must be finite, got {xi}")

    def drift(seg: Segment) -> np.ndarray:
        x = seg.nodes[-1, 0]
        return np.array([a0 + a1 * x - a2 * x**3])

    def diffusion(seg: Segment) -> np.ndarray:
        return np.array([[segment_integral_power(seg, 2)]])

    return SfdeModel(
        model_id="cubic-vol",
        dim_state=1,
        dim_noise=1,
        tau=float(tau),
        drift=drift,
        diffusion=diffusion,
        initial=_constant(xi),
        initial_holder_c2=0.0,
        growth_exponent_r=2.0,
        khasminskii_exponent_rhat=2.0,
        params={"a0": a0, "a1": a1, "a2": a2, "tau": float(tau), "xi": xi},
    )


def make_linear_delay_model(
    lam: float, mu: float, sigma0: float, sigma1: float, tau: float = 1.0, xi: float = 1.0
) -> SfdeModel:
    """
    Globally Lipschitz control model

        dX = (lam X(t) + mu X(t - tau)) dt + (sigma0 + sigma1 X(t - tau)) dB(t)

    with constant initial data xi. No truncation is needed (r = r_hat = 0).
    """
    for name, value in (("lam", lam), ("mu", mu), ("sigma0", sigma0), ("sigma1", sigma1), ("xi", xi)):
        if not math.isfinite(value):
            raise ConfigurationError(f"{name} must be finite, got {value}")

    def drift(seg: Segment) -> np.ndarray:
        return lam * seg.nodes[-1] + mu * seg.nodes[0]

    def diffusion(seg: Segment) -> np.ndarray:
        return np.array([[sigma0 + sigma1 * seg.nodes[0, 0]]])

    return SfdeModel(
        model_id="linear-delay",
        dim_state=1,
        dim_noise=1,
        tau=float(tau),
        drift=drift,
        diffusion=diffusion,
        initial=_constant(xi),
        initial_holder_c2=0.0,
        growth_exponent_r=0.0,
        khasminskii_exponent_rhat=0.0,
        params={
            "lam": lam,
            "mu": mu,
            "sigma0": sigma0,
            "sigma1": sigma1,
            "tau": float(tau),
            "xi": xi,
        },
    )


MODEL_DEFAULTS: Dict[str, Dict[str, float]] = {
    "cubic-vol": {"a0": 3.0, "a1": 10.0, "a2": 53.0, "tau": 1.0, "xi": 0.05},
    "linear-delay": {"lam": -1.0, "mu": 0.3, "sigma0": 0.1, "sigma1": 0.5, "tau": 1.0, "xi": 1.0},
}

_BUILDERS: Dict[str, Callable[..., SfdeModel]] = {
    "cubic-vol": make_cubic_volatility_model,
    "linear-delay": make_linear_delay_model,
}


def model_names() -> list:
    return sorted(_BUILDERS)


def resolve_params(model_id: str, params: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
    """Defaults for model_id overlaid with params; rejects unknown names"""
    if model_id not in _BUILDERS:
        raise ConfigurationError(f"Unknown model '{model_id}'; available: {', '.join(model_names())}")
    resolved = dict(MODEL_DEFAULTS[model_id])
    for key, value in (params or {}).items():
        if key not in resolved:
            raise ConfigurationError(
                f"Unknown parameter '{key}' for model '{model_id}'; "
                f"expected one of {', '.join(sorted(resolved))}"
            )
        resolved[key] = float(value)
    return resolved


def build_model(model_id: str, params: Optional[Mapping[str, float]] = None) -> SfdeModel:
    """Build a registered model from its name and (partial) parameters"""
    resolved = resolve_params(model_id, params)
    logger.debug(f"Building model {model_id} with {resolved}")
    return _BUILDERS[model_id](**resolved)
