"""
Strong Convergence Harness
Coupled Monte Carlo estimation of the strong segment error, log-log order
fits, moment and step-gap diagnostics, and the theoretical rates.

Samples are processed in fixed-size chunks. The chunk layout depends only
on the sample count and results are reduced in chunk order, so reports are
bit-identical for any worker count.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError, CouplingError, DomainError, NumericalBlowUpError
from .model import SfdeModel, build_model, resolve_params
from .noise import BrownianGrid, generate
from .scheme import SimulatedPath, simulate, terminal_segment, z_process_window
from .truncation import DEFAULT_H_SCALE, DEFAULT_VARRHO, TruncationPolicy, make_policy

logger = logging.getLogger(__name__)

ERROR_NORMS = ("segment-sup", "terminal-point")

# Samples per work unit; independent of the worker count
CHUNK_SIZE = 8

_GRID_TOLERANCE = 1e-12


class ExperimentConfig(BaseModel):
    """Step-size ladder, horizon, sample count and seeds of one experiment"""

    model_config = ConfigDict(frozen=True, extra="forbid", protected_namespaces=())

    model_id: str = "cubic-vol"
    model_params: Dict[str, float] = Field(default_factory=dict)
    horizon_t: float = Field(default=10.0, gt=0)
    ref_exp: int = 12
    step_exps: List[int] = Field(default_factory=lambda: [7, 8, 9, 10, 11])
    samples: int = Field(default=200, ge=1)
    base_seed: int = Field(default=42, ge=0)
    varrho: float = Field(default=DEFAULT_VARRHO, gt=0, lt=0.5)
    h_scale: float = Field(default=DEFAULT_H_SCALE, gt=0)
    error_norm: Literal["segment-sup", "terminal-point"] = "segment-sup"
    truncate: bool = True
    workers: int = Field(default=1, ge=1)
    moment_cap: float = Field(default=6.0, ge=2)
    log_level: str = "INFO"

    @field_validator("step_exps")
    @classmethod
    def _unique_exponents(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("step_exps must name at least one exponent")
        if len(set(value)) != len(value):
            raise ValueError(f"step_exps contains duplicates: {value}")
        if min(value) < 0:
            raise ValueError("step sizes 2^-e need e >= 0 (delta <= 1)")
        return sorted(value)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{value}'")
        return level

    @model_validator(mode="after")
    def _consistent_grids(self) -> "ExperimentConfig":
        if self.ref_exp <= max(self.step_exps):
            raise ValueError(f"ref_exp={self.ref_exp} must exceed every step exponent {self.step_exps}")
        try:
            params = resolve_params(self.model_id, self.model_params)
        except ConfigurationError as exc:
            raise ValueError(str(exc)) from exc
        tau = params["tau"]
        if self.horizon_t < tau:
            raise ValueError(f"horizon_t={self.horizon_t} must be at least tau={tau}")
        coarsest = min(self.step_exps)
        for label, length in (("tau", tau), ("horizon_t", self.horizon_t)):
            units = length * 2.0**coarsest
            if abs(units - round(units)) > _GRID_TOLERANCE * max(1.0, units):
                raise ValueError(f"{label}={length} is not a multiple of the coarsest step 2^-{coarsest}")
        return self

    @classmethod
    def from_mapping(cls, data: Optional[Dict[str, Any]] = None, **overrides: Any) -> "ExperimentConfig":
        """Validate a plain mapping, reporting problems as ConfigurationError"""
        merged = dict(data or {})
        merged.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**merged)
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid experiment configuration:\n{exc}") from exc

    @property
    def deltas(self) -> List[float]:
        """Coarse step sizes in descending order"""
        return [2.0**-e for e in self.step_exps]

    @property
    def delta_ref(self) -> float:
        return 2.0**-self.ref_exp

    def build(self) -> Tuple[SfdeModel, TruncationPolicy]:
        model = build_model(self.model_id, self.model_params)
        return model, make_policy(model, h_scale=self.h_scale, varrho=self.varrho)


@dataclass(frozen=True)
class ConvergenceRow:
    delta: float
    rms_error: float
    std_err: float


@dataclass(frozen=True)
class ConvergenceReport:
    """RMS strong errors per step size and the fitted log-log slope"""

    rows: List[ConvergenceRow]
    slope: float
    intercept: float
    r_squared: float
    samples_used: int
    blow_ups: int = 0

    @property
    def mean_square_order(self) -> float:
        return 2.0 * self.slope


@dataclass(frozen=True)
class MomentRow:
    delta: float
    sup_moment: float
    blow_ups: int


@dataclass(frozen=True)
class MomentReport:
    p: float
    rows: List[MomentRow]

    @property
    def spread(self) -> float:
        """Ratio of the largest to the smallest finite sup-moment across the ladder"""
        values = [row.sup_moment for row in self.rows if math.isfinite(row.sup_moment)]
        if not values or min(values) <= 0:
            return math.nan
        return max(values) / min(values)


@dataclass(frozen=True)
class GapRow:
    delta: float
    rms_gap: float


@dataclass(frozen=True)
class GapReport:
    """RMS of sup |Z_T - Ybar_T| per step size, with the fitted slope"""

    rows: List[GapRow]
    slope: float
    intercept: float
    r_squared: float
    expected_mean_square_rate: float


@dataclass(frozen=True)
class TheoreticalOrder:
    p: float
    r: float
    r_hat: float
    p_hat: float
    gamma_hat: float
    condition_holds: bool

    @property
    def rms_slope(self) -> float:
        return self.gamma_hat / 2.0


# -- fits and rates -----------------------------------------------------------


def fit_loglog(points: Sequence[Tuple[float, float]]) -> Tuple[float, float, float]:
    """Least squares of ln(value) on ln(delta); returns (slope, intercept, r_squared)"""
    if len(points) < 2:
        raise DomainError(f"A log-log fit needs at least two points, got {len(points)}")
    deltas = np.array([p[0] for p in points], dtype=np.float64)
    values = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(deltas <= 0) or np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise DomainError("log-log fit needs positive finite step sizes and values")

    x, y = np.log(deltas), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return float(slope), float(intercept), r_squared


def theoretical_order(p: float, r: float, r_hat: float) -> TheoreticalOrder:
    """
    Mean-square rate of the truncated scheme for moment order p and
    growth exponents r, r_hat:

        p_hat = (p - r) ^ p / (1 + (r v r_hat)/2)
        gamma = 1/2 ^ 2/(3r) ^ (p/(3r) - 1/(p_hat - 2))
    """
    if r <= 0:
        raise ConfigurationError("The truncated-scheme rate needs a positive growth exponent r")
    if r_hat < 0:
        raise ConfigurationError(f"r_hat must be nonnegative, got {r_hat}")
    top = max(r, r_hat)
    p_hat = min(p - r, p / (1.0 + top / 2.0))
    if p_hat <= 2:
        raise ConfigurationError(f"p={p} is too small for r={r}, r_hat={r_hat} (p_hat={p_hat:.4g} <= 2)")
    gamma = min(0.5, 2.0 / (3.0 * r), p / (3.0 * r) - 1.0 / (p_hat - 2.0))
    return TheoreticalOrder(
        p=p,
        r=r,
        r_hat=r_hat,
        p_hat=p_hat,
        gamma_hat=gamma,
        condition_holds=(2 + 2 * r) * (2 + top) + r <= p,
    )


# -- path comparisons ---------------------------------------------------------


def _interpolate_onto(nodes: np.ndarray, factor: int) -> np.ndarray:
    """Linear interpolant of coarse nodes at every fine node; exact where they coincide"""
    m_fine = (nodes.shape[0] - 1) * factor
    j = np.arange(m_fine + 1)
    left = j // factor
    w = ((j % factor) / factor)[:, None]
    right = np.minimum(left + 1, nodes.shape[0] - 1)
    return (1.0 - w) * nodes[left] + w * nodes[right]


def _nesting_factor(fine: SimulatedPath, coarse: SimulatedPath) -> int:
    ratio = coarse.delta / fine.delta
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio or coarse.m * factor != fine.m:
        raise CouplingError(f"Step {fine.delta} does not nest into step {coarse.delta}")
    return factor


def segment_error(ref: SimulatedPath, coarse: SimulatedPath, at_time: float, norm: str = "segment-sup") -> float:
    """Distance between the reference and coarse solutions at at_time"""
    if norm not in ERROR_NORMS:
        raise ConfigurationError(f"Unknown error norm '{norm}'; expected one of {ERROR_NORMS}")
    if ref.model_id != coarse.model_id or not ref.noise.same_sample(coarse.noise):
        raise CouplingError("Paths were not simulated from the same model and Brownian sample")
    factor = _nesting_factor(ref, coarse)

    k_ref, k_coarse = ref.index_of(at_time), coarse.index_of(at_time)
    if norm == "terminal-point":
        return float(np.linalg.norm(ref.y_at(k_ref) - coarse.y_at(k_coarse)))

    fine_nodes = terminal_segment(ref, at_time).nodes
    coarse_nodes = terminal_segment(coarse, at_time).nodes
    diff = fine_nodes - _interpolate_onto(coarse_nodes, factor)
    return float(np.max(np.linalg.norm(diff, axis=1)))


# -- parallel sample loop -----------------------------------------------------


def _chunks(samples: int) -> List[range]:
    return [range(start, min(start + CHUNK_SIZE, samples)) for start in range(0, samples, CHUNK_SIZE)]


def _map_chunks(config: ExperimentConfig, fn: Callable[..., Any], *args: Any) -> List[Any]:
    """fn(config, chunk, *args) for every chunk, results in chunk order"""
    chunks = _chunks(config.samples)
    workers = min(config.workers, len(chunks))
    if workers <= 1:
        return [fn(config, chunk, *args) for chunk in chunks]

    try:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(fn, config, chunk, *args) for chunk in chunks]
            results = []
            for i, future in enumerate(futures):
                results.append(future.result())
                logger.debug(f"Chunk {i + 1}/{len(chunks)} done")
            return results
    except (OSError, BrokenProcessPool) as exc:
        logger.warning(f"Parallel execution failed: {exc}. Falling back to sequential execution")
        return [fn(config, chunk, *args) for chunk in chunks]


def _blow_up(config: ExperimentConfig, exc: NumericalBlowUpError, index: int, delta: float):
    if config.truncate:
        raise NumericalBlowUpError(
            f"Truncated run blew up for sample {index} at delta={delta}: {exc.message}", step=exc.step
        ) from exc
    logger.debug(f"Sample {index} blew up at delta={delta} (step {exc.step})")


def _convergence_chunk(config: ExperimentConfig, chunk: range) -> List[Optional[np.ndarray]]:
    """Per sample: errors for every coarse step size, or None if any run blew up"""
    model, policy = config.build()
    n_fine = int(round(config.horizon_t / config.delta_ref))
    out: List[Optional[np.ndarray]] = []
    for index in chunk:
        noise = generate(config.base_seed, index, n_fine, config.delta_ref, model.dim_noise)
        delta = config.delta_ref
        try:
            ref = simulate(model, policy, delta, config.horizon_t, noise, truncate=config.truncate)
            errors = np.empty(len(config.deltas))
            for i, delta in enumerate(config.deltas):
                coarse = simulate(model, policy, delta, config.horizon_t, noise, truncate=config.truncate)
                errors[i] = segment_error(ref, coarse, ref.horizon, config.error_norm)
        except NumericalBlowUpError as exc:
            _blow_up(config, exc, index, delta)
            out.append(None)
            continue
        out.append(errors)
    return out


def run_convergence(config: ExperimentConfig) -> ConvergenceReport:
    """Estimate the RMS strong error per step size and fit its order"""
    logger.info(
        f"Convergence run: model={config.model_id}, T={config.horizon_t}, "
        f"ref=2^-{config.ref_exp}, steps={config.step_exps}, M={config.samples}, "
        f"norm={config.error_norm}, truncate={config.truncate}, workers={config.workers}"
    )
    per_sample = [e for chunk in _map_chunks(config, _convergence_chunk) for e in chunk]
    kept = [e for e in per_sample if e is not None]
    blow_ups = len(per_sample) - len(kept)
    if blow_ups:
        logger.warning(f"{blow_ups}/{config.samples} samples blew up and were excluded")
    if not kept:
        raise NumericalBlowUpError(f"All {config.samples} samples blew up")

    squared = np.vstack(kept) ** 2
    mean_sq = squared.mean(axis=0)
    rms = np.sqrt(mean_sq)
    if len(kept) > 1:
        se_mean = squared.std(axis=0, ddof=1) / math.sqrt(len(kept))
    else:
        se_mean = np.zeros_like(mean_sq)
    std_err = np.where(rms > 0, se_mean / (2.0 * np.where(rms > 0, rms, 1.0)), 0.0)

    rows = [
        ConvergenceRow(delta=d, rms_error=float(e), std_err=float(s))
        for d, e, s in zip(config.deltas, rms, std_err)
    ]
    for row in rows:
        logger.info(f"delta={row.delta:.6g}: rms error {row.rms_error:.6g} (+/- {row.std_err:.2g})")

    slope, intercept, r_squared = fit_loglog([(row.delta, row.rms_error) for row in rows])
    logger.info(f"Fitted RMS slope {slope:.4f} (mean-square order {2 * slope:.4f}), r^2={r_squared:.4f}")
    return ConvergenceReport(
        rows=rows,
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        samples_used=len(kept),
        blow_ups=blow_ups,
    )


def _moment_chunk(config: ExperimentConfig, chunk: range, p: float):
    """Per step size: summed |Y(k delta)|^p over the chunk, sample count and blow-ups"""
    model, policy = config.build()
    finest = config.deltas[-1]
    n_fine = int(round(config.horizon_t / finest))
    sums: List[Optional[np.ndarray]] = [None] * len(config.deltas)
    counts = [0] * len(config.deltas)
    blow_ups = [0] * len(config.deltas)
    for index in chunk:
        noise = generate(config.base_seed, index, n_fine, finest, model.dim_noise)
        for i, delta in enumerate(config.deltas):
            try:
                path = simulate(model, policy, delta, config.horizon_t, noise, truncate=config.truncate)
            except NumericalBlowUpError as exc:
                _blow_up(config, exc, index, delta)
                blow_ups[i] += 1
                continue
            moments = np.linalg.norm(path.nodes_y.values, axis=1) ** p
            sums[i] = moments if sums[i] is None else sums[i] + moments
            counts[i] += 1
    return sums, counts, blow_ups


def moment_diagnostic(config: ExperimentConfig, p: float = 4.0) -> MomentReport:
    """sup over k of the sample mean of |Y(k delta)|^p for every step size"""
    if not 2.0 <= p <= config.moment_cap:
        raise ConfigurationError(f"Moment order p must lie in [2, {config.moment_cap}], got {p}")
    logger.info(f"Moment diagnostic p={p}: model={config.model_id}, M={config.samples}")

    totals: List[Optional[np.ndarray]] = [None] * len(config.deltas)
    counts = [0] * len(config.deltas)
    blow_ups = [0] * len(config.deltas)
    for sums, chunk_counts, chunk_blow_ups in _map_chunks(config, _moment_chunk, p):
        for i in range(len(config.deltas)):
            if sums[i] is not None:
                totals[i] = sums[i] if totals[i] is None else totals[i] + sums[i]
            counts[i] += chunk_counts[i]
            blow_ups[i] += chunk_blow_ups[i]

    rows = []
    for delta, total, count, blown in zip(config.deltas, totals, counts, blow_ups):
        sup_moment = float(np.max(total / count)) if total is not None else math.nan
        if blown:
            logger.warning(f"delta={delta:.6g}: {blown}/{config.samples} samples blew up")
        rows.append(MomentRow(delta=delta, sup_moment=sup_moment, blow_ups=blown))
    return MomentReport(p=p, rows=rows)


def _gap_chunk(config: ExperimentConfig, chunk: range) -> List[Optional[np.ndarray]]:
    """Per sample: squared sup gap between Z_T and Ybar_T for every step size"""
    model, policy = config.build()
    n_fine = int(round(config.horizon_t / config.delta_ref))
    out: List[Optional[np.ndarray]] = []
    for index in chunk:
        noise = generate(config.base_seed, index, n_fine, config.delta_ref, model.dim_noise)
        gaps = np.empty(len(config.deltas))
        delta = config.deltas[0]
        try:
            for i, delta in enumerate(config.deltas):
                path = simulate(model, policy, delta, config.horizon_t, noise, truncate=config.truncate)
                t = path.horizon
                z = z_process_window(path, model, t - path.tau, t).values
                factor = int(round(delta / noise.delta))
                y_bar = _interpolate_onto(path.step_segment(t).nodes, factor)
                gaps[i] = float(np.max(np.sum((z - y_bar) ** 2, axis=1)))
        except NumericalBlowUpError as exc:
            _blow_up(config, exc, index, delta)
            out.append(None)
            continue
        out.append(gaps)
    return out


def step_gap_diagnostic(config: ExperimentConfig) -> GapReport:
    """RMS over samples of sup_theta |Z_T(theta) - Ybar_T(theta)| per step size"""
    logger.info(f"Step-gap diagnostic: model={config.model_id}, M={config.samples}")
    per_sample = [g for chunk in _map_chunks(config, _gap_chunk) for g in chunk]
    kept = [g for g in per_sample if g is not None]
    if not kept:
        raise NumericalBlowUpError(f"All {config.samples} samples blew up")
    rms = np.sqrt(np.vstack(kept).mean(axis=0))
    rows = [GapRow(delta=d, rms_gap=float(g)) for d, g in zip(config.deltas, rms)]

    _, policy = config.build()
    r = policy.r_exp
    expected = 0.5 if r == 0 else min(0.5, 2.0 * config.varrho / r)
    slope, intercept, r_squared = fit_loglog([(row.delta, row.rms_gap) for row in rows])
    logger.info(f"Step-gap RMS slope {slope:.4f} (mean-square rate bound {expected:.4f})")
    return GapReport(
        rows=rows,
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        expected_mean_square_rate=expected,
    )


def simulate_sample(
    config: ExperimentConfig, delta: float, sample_index: int = 0, horizon: Optional[float] = None
) -> Tuple[SimulatedPath, BrownianGrid]:
    """
    One path at step delta driven by sample sample_index of the configured seed.

    horizon overrides config.horizon_t and may be any nonnegative time; off-grid
    values are rounded by the scheme.
    """
    model, policy = config.build()
    horizon = config.horizon_t if horizon is None else horizon
    n_steps = int(round(horizon / delta))
    noise = generate(config.base_seed, sample_index, max(n_steps, 1), delta, model.dim_noise)
    path = simulate(model, policy, delta, horizon, noise, truncate=config.truncate)
    return path, noise
