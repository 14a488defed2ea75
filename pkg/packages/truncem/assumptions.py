"""
Assumption Verifiers
Sampling-based falsification of the one-sided monotonicity (Khasminskii-type)
condition, the polynomial growth condition and the Hoelder condition on the
initial data. Violations are reported as data; nothing here raises on a
failed inequality.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .model import AssumptionConstants, SfdeModel
from .segment import Segment, integrate_pointwise

logger = logging.getLogger(__name__)

SAMPLER_MODES = ("uniform", "shared-history")

# LHS - RHS must exceed this fraction of max(1, |LHS|, |RHS|) to count
VIOLATION_TOLERANCE = 1e-9

QUADRATURE_POINTS = 64


@dataclass(frozen=True)
class SegmentPairSampler:
    """
    Source of segment pairs (psi, psi_bar) with node values in [-bound, bound].

    uniform:        every node of both segments i.i.d. uniform.
    shared-history: psi_bar equals psi except at spike_node, where
                    psi = x with |x| in [bound/2, bound] and psi_bar ~ -x.
    """

    bound: float = 5.0
    nodes: int = 16
    seed: int = 0
    mode: str = "uniform"
    spike_node: Optional[int] = None

    def __post_init__(self):
        if self.mode not in SAMPLER_MODES:
            raise ConfigurationError(f"Unknown sampler '{self.mode}'; expected one of {SAMPLER_MODES}")
        if not (math.isfinite(self.bound) and self.bound > 0):
            raise ConfigurationError(f"Sampler bound must be positive, got {self.bound}")
        if self.nodes < 1:
            raise ConfigurationError(f"Sampler needs at least one interval, got {self.nodes}")
        if self.seed < 0:
            raise ConfigurationError("Sampler seed must be nonnegative")
        if self.spike_node is not None and not 0 <= self.spike_node <= self.nodes:
            raise ConfigurationError(f"spike_node must lie in [0, {self.nodes}], got {self.spike_node}")

    def pairs(self, model: SfdeModel, count: int) -> Iterator[Tuple[Segment, Segment]]:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        delta = model.tau / self.nodes
        shape = (self.nodes + 1, model.dim_state)
        spike = self.nodes if self.spike_node is None else self.spike_node

        for _ in range(count):
            psi = rng.uniform(-self.bound, self.bound, shape)
            if self.mode == "uniform":
                psi_bar = rng.uniform(-self.bound, self.bound, shape)
            else:
                direction = rng.standard_normal(model.dim_state)
                direction /= max(float(np.linalg.norm(direction)), 1e-300)
                x = direction * rng.uniform(0.5 * self.bound, self.bound)
                psi_bar = psi.copy()
                psi[spike] = x
                psi_bar[spike] = -x * rng.uniform(0.95, 1.0)
            yield Segment(psi, delta), Segment(psi_bar, delta)


@dataclass(frozen=True)
class ViolationReport:
    """Outcome of one sampled inequality check"""

    check: str
    samples: int
    violations: int
    worst_margin: float
    worst_index: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


class _Tally:
    def __init__(self, check: str):
        self.check = check
        self.samples = 0
        self.violations = 0
        self.worst_margin = -math.inf
        self.worst_index = -1

    def add(self, lhs: float, rhs: float):
        margin = lhs - rhs
        if margin > VIOLATION_TOLERANCE * max(1.0, abs(lhs), abs(rhs)):
            self.violations += 1
        if margin > self.worst_margin:
            self.worst_margin = margin
            self.worst_index = self.samples
        self.samples += 1

    def report(self) -> ViolationReport:
        report = ViolationReport(
            check=self.check,
            samples=self.samples,
            violations=self.violations,
            worst_margin=self.worst_margin,
            worst_index=self.worst_index,
        )
        if report.violations:
            logger.warning(
                f"{self.check}: {report.violations}/{report.samples} sampled violations "
                f"(worst margin {report.worst_margin:.6g} at sample {report.worst_index})"
            )
        else:
            logger.info(f"{self.check}: no violations in {report.samples} samples")
        return report


def _require_count(count: int):
    if count < 1:
        raise ConfigurationError(f"count must be at least 1, got {count}")


def _sq_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum((a - b) ** 2, axis=-1)


def _abs_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(_sq_diff(a, b))


def _power_sum(a: np.ndarray, b: np.ndarray, exponent: float) -> np.ndarray:
    """|a|^e + |b|^e with 0^0 = 1"""
    return np.linalg.norm(a, axis=-1) ** exponent + np.linalg.norm(b, axis=-1) ** exponent


def check_khasminskii_inequality(
    model: SfdeModel,
    constants: AssumptionConstants,
    sampler: SegmentPairSampler,
    count: int,
) -> ViolationReport:
    """
    Sample the monotonicity condition

        2<d(0), f(psi) - f(psi_bar)> + (q-1)|g(psi) - g(psi_bar)|^2
            <= alpha0 (|d(0)|^2 + (1/tau) int |d|^2)
               - alpha1 |d(0)|^2 (|psi(0)|^rh + |psi_bar(0)|^rh)
               + (alpha2/tau) int |d|^2 (|psi|^rh + |psi_bar|^rh)

    with d = psi - psi_bar and rh the Khasminskii exponent.
    """
    _require_count(count)
    rhat = model.khasminskii_exponent_rhat if constants.rhat is None else constants.rhat
    tally = _Tally("khasminskii")

    for psi, bar in sampler.pairs(model, count):
        a0, b0 = psi.nodes[-1], bar.nodes[-1]
        d0_sq = float(np.sum((a0 - b0) ** 2))
        f_diff = model.drift_at(psi) - model.drift_at(bar)
        g_diff = model.diffusion_at(psi) - model.diffusion_at(bar)
        lhs = 2.0 * float(np.dot(a0 - b0, f_diff)) + (constants.q - 1.0) * float(np.sum(g_diff**2))

        history = integrate_pointwise((psi, bar), _sq_diff, QUADRATURE_POINTS) / model.tau
        weighted = (
            integrate_pointwise(
                (psi, bar),
                lambda a, b: _sq_diff(a, b) * _power_sum(a, b, rhat),
                QUADRATURE_POINTS,
            )
            / model.tau
        )
        at_zero = float(np.linalg.norm(a0)) ** rhat + float(np.linalg.norm(b0)) ** rhat
        rhs = (
            constants.alpha0 * (d0_sq + history)
            - constants.alpha1 * d0_sq * at_zero
            + constants.alpha2 * weighted
        )
        tally.add(lhs, rhs)

    return tally.report()


def check_polynomial_growth(
    model: SfdeModel,
    constants: AssumptionConstants,
    sampler: SegmentPairSampler,
    count: int,
) -> ViolationReport:
    """
    Sample both polynomial Lipschitz bounds with exponent r and constant c1:

        |f(psi) - f(psi_bar)|   <= c1 (|d(0)| w(0) + (1/tau) int |d| w)
        |g(psi) - g(psi_bar)|^2 <= c1 (|d(0)|^2 w(0) + (1/tau) int |d|^2 w)

    where w = 1 + |psi|^r + |psi_bar|^r. Either bound failing counts once.
    """
    _require_count(count)
    r = model.growth_exponent_r
    tally = _Tally("polynomial-growth")

    def weight(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return 1.0 + _power_sum(a, b, r)

    for psi, bar in sampler.pairs(model, count):
        a0, b0 = psi.nodes[-1], bar.nodes[-1]
        d0 = float(np.linalg.norm(a0 - b0))
        w0 = 1.0 + float(np.linalg.norm(a0)) ** r + float(np.linalg.norm(b0)) ** r

        f_lhs = float(np.linalg.norm(model.drift_at(psi) - model.drift_at(bar)))
        f_int = integrate_pointwise(
            (psi, bar), lambda a, b: _abs_diff(a, b) * weight(a, b), QUADRATURE_POINTS
        )
        f_rhs = constants.c1 * (d0 * w0 + f_int / model.tau)

        g_lhs = float(np.sum((model.diffusion_at(psi) - model.diffusion_at(bar)) ** 2))
        g_int = integrate_pointwise(
            (psi, bar), lambda a, b: _sq_diff(a, b) * weight(a, b), QUADRATURE_POINTS
        )
        g_rhs = constants.c1 * (d0**2 * w0 + g_int / model.tau)

        # keep whichever bound is closer to failing, relative to its own scale
        f_rel = (f_lhs - f_rhs) / max(1.0, abs(f_lhs), abs(f_rhs))
        g_rel = (g_lhs - g_rhs) / max(1.0, abs(g_lhs), abs(g_rhs))
        if f_rel >= g_rel:
            tally.add(f_lhs, f_rhs)
        else:
            tally.add(g_lhs, g_rhs)

    return tally.report()


def check_initial_holder(
    model: SfdeModel, c2: Optional[float], count: int, seed: int = 0
) -> ViolationReport:
    """Sample |xi(t1) - xi(t2)|^2 <= c2 |t1 - t2| over t1, t2 in [-tau, 0]; c2 defaults to the model's"""
    _require_count(count)
    if c2 is None:
        c2 = model.initial_holder_c2
    if c2 < 0:
        raise ConfigurationError(f"c2 must be nonnegative, got {c2}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    times = rng.uniform(-model.tau, 0.0, (count, 2))
    tally = _Tally("initial-holder")
    for t1, t2 in times:
        lhs = float(np.sum((model.initial_at(t1) - model.initial_at(t2)) ** 2))
        tally.add(lhs, c2 * abs(t1 - t2))
    return tally.report()
