"""
Truncated Euler-Maruyama Scheme
Recursion on segments, full-path simulation, the continuous auxiliary
process Z and the plain (untruncated) EM baseline.

    Yhat(k delta) = xi(k delta),                    k = -m..0
    Y(k delta)    = pi(Yhat(k delta))
    Yhat((k+1) delta) = Y(k delta) + f(Y_k) delta + g(Y_k) dB_k
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalBlowUpError
from .model import SfdeModel
from .noise import BrownianGrid, coarsen, coarsening_factor
from .segment import GridFunction, Segment, shift_append
from .truncation import TruncationPolicy, pi_delta, radius

logger = logging.getLogger(__name__)

BLOW_UP_THRESHOLD = 1e12

# Relative slack when matching times against a grid
_GRID_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SchemeState:
    """Step counter k, segment Y_{k delta} and the pre-truncation value Yhat(k delta)"""

    k: int
    segment: Segment
    y_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class SimulatedPath:
    """Node record Y(k delta), Yhat(k delta) for k = -m..N and the noise that drove it"""

    delta: float
    nodes_y: GridFunction
    nodes_y_hat: GridFunction
    model_id: str
    m: int
    n_steps: int
    radius: float
    truncated: bool
    noise: BrownianGrid

    @property
    def tau(self) -> float:
        return self.m * self.delta

    @property
    def horizon(self) -> float:
        return self.n_steps * self.delta

    def index_of(self, t: float) -> int:
        """k with k delta = t; raises DomainError off the grid"""
        k = int(round(t / self.delta))
        if abs(k * self.delta - t) > _GRID_TOLERANCE * self.delta:
            raise DomainError(f"Time {t} is not a multiple of delta={self.delta}")
        return k

    def floor_time(self, t: float) -> float:
        """floor(t / delta) * delta, snapping times within rounding of a node"""
        s = t / self.delta
        nearest = round(s)
        if abs(s - nearest) <= _GRID_TOLERANCE:
            return nearest * self.delta
        return math.floor(s) * self.delta

    def y_at(self, k: int) -> np.ndarray:
        return self.nodes_y.values[k + self.m]

    def step_segment(self, t: float) -> Segment:
        """The step process Ybar_t = Y_{floor(t)}"""
        return terminal_segment(self, self.floor_time(t))


def grid_size(tau: float, delta: float) -> int:
    """m with m * delta = tau, validated to relative 1e-12"""
    if not (math.isfinite(delta) and delta > 0):
        raise ConfigurationError(f"Step size must be positive, got {delta}")
    m = int(round(tau / delta))
    if m < 1 or abs(m * delta - tau) > 1e-12 * tau:
        raise ConfigurationError(f"Step size {delta} does not divide the delay tau={tau}")
    return m


def _initial_history(model: SfdeModel, delta: float, R: float) -> Tuple[np.ndarray, np.ndarray]:
    m = grid_size(model.tau, delta)
    raw = np.vstack([model.initial_at((i - m) * delta) for i in range(m + 1)])
    clipped = np.vstack([pi_delta(x, R) for x in raw])
    return raw, clipped


def _scheme_radius(policy: TruncationPolicy, delta: float, truncate: bool) -> float:
    R = radius(policy, delta)
    return R if truncate else math.inf


def init_state(
    model: SfdeModel, policy: TruncationPolicy, delta: float, truncate: bool = True
) -> SchemeState:
    """History segment pi(xi(i delta)), i = -m..0, with Yhat(0) = xi(0)"""
    R = _scheme_radius(policy, delta, truncate)
    raw, clipped = _initial_history(model, delta, R)
    return SchemeState(k=0, segment=Segment(clipped, delta), y_hat=raw[-1].copy())


def _advance(state: SchemeState, model: SfdeModel, delta: float, dB: np.ndarray, R: float) -> SchemeState:
    seg = state.segment
    f = model.drift_at(seg)
    g = model.diffusion_at(seg)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
        raise NumericalBlowUpError("Drift or diffusion returned non-finite values", step=state.k)
    y_hat = seg.nodes[-1] + f * delta + g @ dB
    if not np.all(np.isfinite(y_hat)) or float(np.linalg.norm(y_hat)) > BLOW_UP_THRESHOLD:
        raise NumericalBlowUpError(
            f"State left the blow-up threshold {BLOW_UP_THRESHOLD:g}", step=state.k + 1
        )
    return SchemeState(k=state.k + 1, segment=shift_append(seg, pi_delta(y_hat, R)), y_hat=y_hat)


def step(
    state: SchemeState,
    model: SfdeModel,
    policy: TruncationPolicy,
    delta: float,
    dB,
    truncate: bool = True,
) -> SchemeState:
    """One truncated EM step; with truncate=False the projection is the identity"""
    increment = np.asarray(dB, dtype=np.float64).reshape(model.dim_noise)
    if not np.all(np.isfinite(increment)):
        raise DomainError("Brownian increment must be finite")
    return _advance(state, model, delta, increment, _scheme_radius(policy, delta, truncate))


def simulate(
    model: SfdeModel,
    policy: TruncationPolicy,
    delta: float,
    horizon: float,
    noise: BrownianGrid,
    truncate: bool = True,
) -> SimulatedPath:
    """
    Run the scheme from the initial history up to the grid time nearest `horizon`.

    noise may live on any grid whose step divides delta; it is aggregated
    here and kept on the path for evaluating Z on the fine grid.
    """
    m = grid_size(model.tau, delta)
    n_steps = int(round(horizon / delta))
    if n_steps < 0:
        raise DomainError(f"Horizon must be nonnegative, got {horizon}")
    if abs(n_steps * delta - horizon) > _GRID_TOLERANCE * delta:
        logger.warning(f"Horizon {horizon} rounded to grid time {n_steps * delta} (delta={delta})")
    if noise.dim_noise != model.dim_noise:
        raise ConfigurationError(
            f"Noise has dimension {noise.dim_noise}, model {model.model_id} needs {model.dim_noise}"
        )

    factor = coarsening_factor(noise, delta)
    if n_steps * factor > noise.n_steps:
        raise ConfigurationError(
            f"Noise grid covers {noise.n_steps * noise.delta}, horizon {n_steps * delta} requested"
        )

    R = _scheme_radius(policy, delta, truncate)
    raw, clipped = _initial_history(model, delta, R)
    ys = np.empty((m + n_steps + 1, model.dim_state))
    y_hats = np.empty_like(ys)
    ys[: m + 1] = clipped
    y_hats[: m + 1] = raw

    if n_steps:
        increments = coarsen(noise.head(n_steps * factor), factor).increments
        state = SchemeState(k=0, segment=Segment(clipped, delta), y_hat=raw[-1].copy())
        for k in range(n_steps):
            state = _advance(state, model, delta, increments[k], R)
            ys[m + k + 1] = state.segment.nodes[-1]
            y_hats[m + k + 1] = state.y_hat

    times = np.arange(-m, n_steps + 1) * delta
    return SimulatedPath(
        delta=delta,
        nodes_y=GridFunction(times, ys),
        nodes_y_hat=GridFunction(times, y_hats),
        model_id=model.model_id,
        m=m,
        n_steps=n_steps,
        radius=R,
        truncated=truncate,
        noise=noise,
    )


def terminal_segment(path: SimulatedPath, at_time: float) -> Segment:
    """Y_{k delta} with k delta = at_time: nodes Y(at_time - tau) .. Y(at_time)"""
    k = path.index_of(at_time)
    if not 0 <= k <= path.n_steps:
        raise DomainError(f"Time {at_time} outside [0, {path.horizon}]")
    return Segment._trusted(path.nodes_y.values[k: k + path.m + 1], path.delta)


def _fine_index(path: SimulatedPath, t: float) -> int:
    fine = path.noise.delta
    j = int(round(t / fine))
    if abs(j * fine - t) > _GRID_TOLERANCE * fine:
        raise DomainError(f"Time {t} is not on the fine noise grid (step {fine})")
    return j


def _partial_sums(increments: np.ndarray, count: int) -> np.ndarray:
    """Row r holds the sum of the first r increments, accumulated in ascending order"""
    sums = np.zeros((count, increments.shape[1]))
    if count > 1:
        np.cumsum(increments[: count - 1], axis=0, out=sums[1:])
    return sums


def z_process_eval(path: SimulatedPath, model: SfdeModel, t: float) -> np.ndarray:
    """Z(t) = Y(k delta) + f(Y_k)(t - k delta) + g(Y_k)(B(t) - B(k delta)); xi(t) for t < 0"""
    tol = _GRID_TOLERANCE * path.delta
    if t < -path.tau - tol or t > path.horizon + tol:
        raise DomainError(f"Time {t} outside [-{path.tau}, {path.horizon}]")
    if t < 0:
        return model.initial_at(max(t, -path.tau))

    j = _fine_index(path, t)
    factor = coarsening_factor(path.noise, path.delta)
    k, r = divmod(j, factor)
    y = path.y_at(k)
    if r == 0:
        return y.copy()

    seg = terminal_segment(path, k * path.delta)
    f = model.drift_at(seg)
    g = model.diffusion_at(seg)
    block = path.noise.increments[k * factor: (k + 1) * factor]
    dB = _partial_sums(block, r + 1)[r]
    return y + f * (r * path.noise.delta) + g @ dB


def z_process_window(path: SimulatedPath, model: SfdeModel, t0: float, t1: float) -> GridFunction:
    """Z at every fine-grid time in [t0, t1], one coefficient evaluation per coarse step"""
    tol = _GRID_TOLERANCE * path.delta
    if t0 > t1 or t0 < -path.tau - tol or t1 > path.horizon + tol:
        raise DomainError(f"Window [{t0}, {t1}] outside [-{path.tau}, {path.horizon}]")

    fine = path.noise.delta
    factor = coarsening_factor(path.noise, path.delta)
    j0 = int(math.ceil(t0 / fine - _GRID_TOLERANCE))
    j1 = int(math.floor(t1 / fine + _GRID_TOLERANCE))

    values: List[np.ndarray] = []
    for j in range(j0, min(j1, -1) + 1):
        values.append(model.initial_at(j * fine))

    j = max(j0, 0)
    while j <= j1:
        k, r0 = divmod(j, factor)
        y = path.y_at(k)
        r1 = min(factor - 1, j1 - k * factor)
        if k == path.n_steps or (r0 == 0 and r1 == 0):
            values.append(y.copy())
        else:
            seg = terminal_segment(path, k * path.delta)
            f = model.drift_at(seg)
            g = model.diffusion_at(seg)
            block = path.noise.increments[k * factor: (k + 1) * factor]
            sums = _partial_sums(block, r1 + 1)
            offsets = np.arange(r0, r1 + 1) * fine
            values.extend(y + np.outer(offsets, f) + sums[r0:] @ g.T)
        j = k * factor + r1 + 1

    times = np.arange(j0, j1 + 1) * fine
    return GridFunction(times, np.vstack(values))
