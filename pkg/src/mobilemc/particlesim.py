"""Particle-based Brownian dynamics counterpart of the analytical engine.

Everything here moves: transmitter and receiver spheres take Gaussian
steps with their own diffusion coefficients, released molecules random
walk, degrade in the bulk, and bind reversibly to a uniformly reactive
receiver surface with saturation at the receptor count.  The binding step
probability follows the square-root surface-reaction rule, so estimates
converge to the homogenized-boundary model as dt shrinks.  Nothing in
this module evaluates the analytical response; agreement between the two
engines is the cross-validation the test suite leans on.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidConfigError

__all__ = [
    "SimConfig",
    "SimState",
    "ObservationSeries",
    "BerCurve",
    "step",
    "run_frame",
    "estimate_received_signal",
    "estimate_ber",
    "relative_distance_walk",
]

_SIGNAL_DOMAIN = 0x53494d46
_BER_DOMAIN = 0x53494d42


@dataclass(frozen=True)
class SimConfig:
    """Integration controls for the particle simulator.

    confinement_radius adds a reflecting shell around the receiver for
    molecules only; it exists for equilibrium validation runs and is None
    in every physical scenario.  debug_checks turns on per-step geometry
    and bookkeeping assertions.
    """

    dt: float
    num_realizations: int
    seed: int
    record_grid: tuple[float, ...] = ()
    unbind_offset: float = 1e-9
    confinement_radius: float | None = None
    debug_checks: bool = False

    def __post_init__(self):
        if not (isinstance(self.dt, float) and math.isfinite(self.dt) and self.dt > 0):
            raise InvalidConfigError(f"dt must be a positive float, got {self.dt!r}")
        if not isinstance(self.num_realizations, int) or self.num_realizations < 1:
            raise InvalidConfigError("num_realizations must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfigError("seed must be a non-negative integer")
        grid = tuple(float(t) for t in self.record_grid)
        if any(not math.isfinite(t) or t < 0.0 for t in grid):
            raise InvalidConfigError("record_grid times must be finite and >= 0")
        object.__setattr__(self, "record_grid", grid)
        if not (math.isfinite(self.unbind_offset) and self.unbind_offset > 0.0):
            raise InvalidConfigError("unbind_offset must be > 0")
        if self.confinement_radius is not None and not (
            math.isfinite(self.confinement_radius) and self.confinement_radius > 0.0
        ):
            raise InvalidConfigError("confinement_radius must be positive when set")

    def validate_against(self, params, derived) -> None:
        """Reject step sizes too coarse for the geometry or the binding rule."""
        a = params.radius_rx
        d_max = max(params.diff_A, params.diff_TX, params.diff_RX)
        if math.sqrt(2.0 * d_max * self.dt) > a / 10.0:
            raise InvalidConfigError(
                "dt too large: per-axis step exceeds a tenth of the receiver radius"
            )
        if self.unbind_offset > a / 100.0:
            raise InvalidConfigError(
                "unbind_offset must not exceed one percent of the receiver radius"
            )
        if _binding_probability(params, derived, self.dt) > 1.0:
            raise InvalidConfigError(
                "binding probability exceeds 1 at this dt; use a smaller dt"
            )


def _binding_probability(params, derived, dt: float) -> float:
    if derived.k_f_mod == 0.0:
        return 0.0
    if params.diff_A <= 0.0:
        raise InvalidConfigError(
            "molecule diffusion must be positive for a reactive surface"
        )
    kappa = derived.k_f_mod / (4.0 * math.pi * params.radius_rx**2)
    return kappa * math.sqrt(math.pi * dt / params.diff_A)


@dataclass
class SimState:
    """Mutable per-realization state; arrays are owned by the state."""

    tx_pos: np.ndarray
    rx_pos: np.ndarray
    free_molecules: np.ndarray
    bound_count: int = 0
    time: float = 0.0
    injected_count: int = 0
    degraded_count: int = 0


@dataclass(frozen=True)
class ObservationSeries:
    """Bound-receptor counts on a time grid plus per-bit sampling instants.

    std_error is None for a single realization.  sample_counts keeps the
    raw per-realization counts at the detector instants so error-rate
    post-processing never re-runs the dynamics.
    """

    times: np.ndarray
    mean_bound: np.ndarray
    std_error: np.ndarray | None
    num_realizations: int
    sample_times: np.ndarray
    sample_counts: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.mean_bound.shape:
            raise InvalidArgumentError("times and mean_bound must align")
        if np.any(self.mean_bound < 0.0):
            raise InvalidArgumentError("mean bound counts cannot be negative")
        if self.std_error is not None and self.std_error.shape != self.times.shape:
            raise InvalidArgumentError("std_error must align with times")
        if self.sample_counts.shape != (self.num_realizations, self.sample_times.size):
            raise InvalidArgumentError("sample_counts must be (realizations, instants)")


@dataclass(frozen=True)
class BerCurve:
    """Empirical error rate per threshold with between-realization errors."""

    thresholds: tuple[int, ...]
    p_error: np.ndarray
    std_error: np.ndarray
    num_realizations: int


def _random_unit(count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(0.0, 1.0, (count, 3))
    n = np.sqrt(np.einsum("ij,ij->i", v, v))
    n[n < 1e-300] = 1.0
    return v / n[:, None]


def _chord_points(p0: np.ndarray, p1: np.ndarray, radius: float) -> np.ndarray:
    """Entry points of segments p0 -> p1 on a sphere around the origin.

    Endpoints p1 lie inside.  A start already inside (re-entry after a
    surface placement) degrades to the radial projection of p1.
    """
    d = p1 - p0
    dd = np.einsum("ij,ij->i", d, d)
    b = np.einsum("ij,ij->i", p0, d)
    c0 = np.einsum("ij,ij->i", p0, p0) - radius * radius
    disc = np.maximum(b * b - dd * c0, 0.0)
    dd_safe = np.where(dd > 0.0, dd, 1.0)
    s = (-b - np.sqrt(disc)) / dd_safe
    crossing = p0 + s[:, None] * d
    r1 = np.sqrt(np.einsum("ij,ij->i", p1, p1))
    radial = p1 * (radius / np.where(r1 > 0.0, r1, 1.0))[:, None]
    bad = (c0 < 0.0) | (s < 0.0) | (s > 1.0) | (dd == 0.0)
    return np.where(bad[:, None], radial, crossing)


def _bounce_points(crossing: np.ndarray, p1: np.ndarray,
                   radius: float) -> np.ndarray:
    """Specular reflection of the post-crossing flight off the sphere.

    The leg from the crossing point to the endpoint is mirrored about the
    tangent plane at the crossing; grazing cases that land back inside
    fall through to a radial fold, which always exits the sphere.
    """
    normal_len = np.sqrt(np.einsum("ij,ij->i", crossing, crossing))
    n_hat = crossing / np.where(normal_len > 0.0, normal_len, 1.0)[:, None]
    leg = p1 - crossing
    reflected = crossing + leg - 2.0 * np.einsum("ij,ij->i", leg, n_hat)[:, None] * n_hat
    r = np.sqrt(np.einsum("ij,ij->i", reflected, reflected))
    still_inside = r < radius
    if still_inside.any():
        r_in = np.where(r > 0.0, r, radius)
        folded = reflected * ((2.0 * radius - r_in) / r_in)[:, None]
        reflected = np.where(still_inside[:, None], folded, reflected)
    return reflected


def step(state: SimState, params, derived, config: SimConfig,
         rng: np.random.Generator) -> SimState:
    """One dt advance of every mobile body, reactions included."""
    dt = config.dt
    sigma = params.radius_rx + params.radius_tx
    a = params.radius_rx
    p_bind = _binding_probability(params, derived, dt)
    p_degrade = -math.expm1(-params.k_d * dt)
    p_release = -math.expm1(-params.k_b * dt)

    state.tx_pos = state.tx_pos + rng.normal(
        0.0, math.sqrt(2.0 * params.diff_TX * dt), 3
    )
    state.rx_pos = state.rx_pos + rng.normal(
        0.0, math.sqrt(2.0 * params.diff_RX * dt), 3
    )
    free = state.free_molecules
    prev = None
    if free.shape[0]:
        prev = free
        free = free + rng.normal(0.0, math.sqrt(2.0 * params.diff_A * dt), free.shape)

    gap = state.tx_pos - state.rx_pos
    dist = math.sqrt(float(gap @ gap))
    if dist < sigma:
        if dist <= 0.0:
            gap = np.array([sigma, 0.0, 0.0])
            dist = sigma
        state.tx_pos = state.rx_pos + gap * ((2.0 * sigma - dist) / dist)

    if free.shape[0] and p_degrade > 0.0:
        keep = rng.random(free.shape[0]) >= p_degrade
        state.degraded_count += int(free.shape[0] - keep.sum())
        free = free[keep]
        prev = prev[keep]

    if free.shape[0]:
        rel = free - state.rx_pos
        r2 = np.einsum("ij,ij->i", rel, rel)
        inside = r2 < a * a
        if inside.any():
            idx = np.nonzero(inside)[0]
            crossing = _chord_points(
                prev[idx] - state.rx_pos, rel[idx], a
            )
            binds = rng.random(idx.size) < p_bind
            room = params.num_receptors - state.bound_count
            if int(binds.sum()) > room:
                # saturation: grant bindings in array order until full
                binds &= np.cumsum(binds) <= room
            free[idx] = state.rx_pos + _bounce_points(crossing, rel[idx], a)
            if binds.any():
                state.bound_count += int(binds.sum())
                keep_mask = np.ones(free.shape[0], dtype=bool)
                keep_mask[idx[binds]] = False
                free = free[keep_mask]

    if state.bound_count and p_release > 0.0:
        released = int(rng.binomial(state.bound_count, p_release))
        if released:
            spawn = state.rx_pos + (a + config.unbind_offset) * _random_unit(
                released, rng
            )
            free = np.concatenate([free, spawn]) if free.shape[0] else spawn
            state.bound_count -= released

    if config.confinement_radius is not None and free.shape[0]:
        rel = free - state.rx_pos
        r = np.sqrt(np.einsum("ij,ij->i", rel, rel))
        out = r > config.confinement_radius
        if out.any():
            scale = (2.0 * config.confinement_radius - r[out]) / r[out]
            free[out] = state.rx_pos + rel[out] * scale[:, None]

    state.free_molecules = free
    state.time += dt
    if config.debug_checks:
        _debug_validate(state, params, config)
    return state


def _debug_validate(state: SimState, params, config: SimConfig) -> None:
    sigma = params.radius_rx + params.radius_tx
    gap = state.tx_pos - state.rx_pos
    if math.sqrt(float(gap @ gap)) < sigma * (1.0 - 1e-12):
        raise AssertionError("transmitter penetrated the contact sphere")
    if state.free_molecules.shape[0]:
        rel = state.free_molecules - state.rx_pos
        r2 = np.einsum("ij,ij->i", rel, rel)
        if np.any(r2 < (params.radius_rx * (1.0 - 1e-12)) ** 2):
            raise AssertionError("free molecule inside the receiver")
    if state.bound_count < 0 or state.bound_count > params.num_receptors:
        raise AssertionError("bound count outside [0, receptor count]")
    alive = state.free_molecules.shape[0] + state.bound_count
    if alive + state.degraded_count != state.injected_count:
        raise AssertionError("molecule bookkeeping does not balance")


def _new_state(params, rng: np.random.Generator) -> SimState:
    rx = np.zeros(3)
    tx = params.r0 * _random_unit(1, rng)[0]
    return SimState(
        tx_pos=tx,
        rx_pos=rx,
        free_molecules=np.empty((0, 3)),
        bound_count=0,
        time=0.0,
    )


def _observation_plan(bits, params, config: SimConfig):
    """Snap injections, grid times and sampling instants to step indices."""
    dt = config.dt
    length = params.seq_length
    total_steps = int(round(length * params.bit_interval / dt))
    inject_steps = {}
    for j in range(1, length + 1):
        if bits[j - 1] == 1:
            inject_steps.setdefault(
                int(round((j - 1) * params.bit_interval / dt)), 0
            )
            inject_steps[int(round((j - 1) * params.bit_interval / dt))] += 1
    sample_steps = np.array(
        [
            int(round(((j - 1) * params.bit_interval + params.sample_offset) / dt))
            for j in range(1, length + 1)
        ],
        dtype=int,
    )
    grid_steps = np.array(
        [int(round(t / dt)) for t in config.record_grid], dtype=int
    )
    if np.any(sample_steps > total_steps) or np.any(grid_steps > total_steps):
        raise InvalidConfigError("observation times extend past the frame end")
    return total_steps, inject_steps, grid_steps, sample_steps


def run_frame(bits, params, derived, config: SimConfig,
              rng: np.random.Generator) -> ObservationSeries:
    """One realization of an L-bit frame; counts recorded at plan times."""
    bit_values = tuple(getattr(bits, "bits", bits))
    if len(bit_values) != params.seq_length:
        raise InvalidArgumentError("bit pattern length must match the frame length")
    config.validate_against(params, derived)
    total_steps, inject_steps, grid_steps, sample_steps = _observation_plan(
        bit_values, params, config
    )
    state = _new_state(params, rng)
    grid_counts = np.zeros(grid_steps.size)
    sample_counts = np.zeros(sample_steps.size)
    _record(0, state, grid_steps, grid_counts, sample_steps, sample_counts)
    for k in range(total_steps):
        inject = inject_steps.get(k)
        if inject:
            burst = np.repeat(
                state.tx_pos[None, :], inject * params.num_molecules, axis=0
            )
            state.free_molecules = (
                np.concatenate([state.free_molecules, burst])
                if state.free_molecules.shape[0]
                else burst
            )
            state.injected_count += burst.shape[0]
        step(state, params, derived, config, rng)
        _record(k + 1, state, grid_steps, grid_counts, sample_steps, sample_counts)
    return ObservationSeries(
        times=grid_steps * config.dt,
        mean_bound=grid_counts,
        std_error=None,
        num_realizations=1,
        sample_times=sample_steps * config.dt,
        sample_counts=sample_counts[None, :].astype(int),
    )


def _record(k, state, grid_steps, grid_counts, sample_steps, sample_counts):
    grid_counts[grid_steps == k] = state.bound_count
    sample_counts[sample_steps == k] = state.bound_count


def _signal_range(args):
    bits, params, derived, config, start, stop = args
    grid = np.zeros((stop - start, len(config.record_grid)))
    samples = np.zeros((stop - start, params.seq_length), dtype=int)
    for i in range(start, stop):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((config.seed, _SIGNAL_DOMAIN, i)))
        )
        series = run_frame(bits, params, derived, config, rng)
        grid[i - start] = series.mean_bound
        samples[i - start] = series.sample_counts[0]
    return grid, samples


def _parallel_ranges(total: int, workers: int):
    chunk = max(1, -(-total // max(1, workers * 4)))
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def _run_parallel(fn, arg_builder, total: int, workers: int):
    ranges = _parallel_ranges(total, workers)
    tasks = [arg_builder(s, e) for s, e in ranges]
    if workers <= 1 or len(tasks) == 1:
        results = [fn(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            results = pool.map(fn, tasks)
    return results


def estimate_received_signal(bits, params, derived, config: SimConfig,
                             workers: int = 1) -> ObservationSeries:
    """Mean bound-receptor counts across independent frame realizations.

    Each realization owns the random stream derived from (seed, index), so
    the estimate is invariant to how realizations are distributed over
    workers.
    """
    bit_values = tuple(getattr(bits, "bits", bits))
    config.validate_against(params, derived)
    n = config.num_realizations
    results = _run_parallel(
        _signal_range,
        lambda s, e: (bit_values, params, derived, config, s, e),
        n,
        workers,
    )
    grid = np.concatenate([r[0] for r in results], axis=0)
    samples = np.concatenate([r[1] for r in results], axis=0)
    mean = grid.mean(axis=0)
    if n > 1:
        se = grid.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        se = None
    return ObservationSeries(
        times=np.array([int(round(t / config.dt)) for t in config.record_grid])
        * config.dt,
        mean_bound=mean,
        std_error=se,
        num_realizations=n,
        sample_times=np.array(
            [
                int(round(((j - 1) * params.bit_interval + params.sample_offset)
                          / config.dt))
                for j in range(1, params.seq_length + 1)
            ]
        )
        * config.dt,
        sample_counts=samples,
    )


def _ber_range(args):
    params, derived, config, p1, start, stop = args
    length = params.seq_length
    bits_out = np.zeros((stop - start, length), dtype=int)
    counts_out = np.zeros((stop - start, length), dtype=int)
    for i in range(start, stop):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((config.seed, _BER_DOMAIN, i)))
        )
        bits = tuple(int(b) for b in rng.random(length) < p1)
        series = run_frame(bits, params, derived, config, rng)
        bits_out[i - start] = bits
        counts_out[i - start] = series.sample_counts[0]
    return bits_out, counts_out


def estimate_ber(params, derived, config: SimConfig, xi_list,
                 p1: float, workers: int = 1) -> BerCurve:
    """Empirical error rate of the threshold detector per threshold value.

    Bits are drawn per realization with probability p1, frames run once,
    and every threshold is applied to the same recorded counts.  The
    standard error is computed between realizations, which absorbs the
    correlation of bit errors within a frame.
    """
    thresholds = tuple(int(x) for x in xi_list)
    if len(thresholds) == 0:
        raise InvalidConfigError("xi_list must not be empty")
    if any(x < 0 for x in thresholds):
        raise InvalidConfigError("thresholds must be >= 0")
    if not 0.0 <= p1 <= 1.0:
        raise InvalidConfigError("p1 must lie in [0, 1]")
    config.validate_against(params, derived)
    n = config.num_realizations
    results = _run_parallel(
        _ber_range,
        lambda s, e: (params, derived, config, p1, s, e),
        n,
        workers,
    )
    bits = np.concatenate([r[0] for r in results], axis=0)
    counts = np.concatenate([r[1] for r in results], axis=0)
    p_err = np.empty(len(thresholds))
    se = np.empty(len(thresholds))
    for k, xi in enumerate(thresholds):
        decisions = counts >= xi
        frame_err = (decisions != (bits == 1)).mean(axis=1)
        p_err[k] = frame_err.mean()
        se[k] = (
            frame_err.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
        )
    return BerCurve(
        thresholds=thresholds,
        p_error=p_err,
        std_error=se,
        num_realizations=n,
    )


def relative_distance_walk(
    r0: float,
    d_eff2: float,
    sigma: float,
    elapsed: float,
    num_steps: int,
    num_walks: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Final separations of direct Gaussian walks with hard-core reflection.

    The relative coordinate starts at distance r0 and folds radially about
    the contact sphere whenever a step ends inside it.  This is the
    independent oracle for the closed-form separation law.
    """
    if num_steps < 1 or num_walks < 1:
        raise InvalidArgumentError("num_steps and num_walks must be >= 1")
    if elapsed <= 0.0 or d_eff2 <= 0.0 or sigma < 0.0 or r0 < sigma:
        raise InvalidArgumentError("invalid walk geometry")
    scale = math.sqrt(2.0 * d_eff2 * elapsed / num_steps)
    pos = np.zeros((num_walks, 3))
    pos[:, 2] = r0
    for _ in range(num_steps):
        pos += rng.normal(0.0, scale, pos.shape)
        r = np.sqrt(np.einsum("ij,ij->i", pos, pos))
        inside = r < sigma
        if inside.any():
            pos[inside] *= ((2.0 * sigma - r[inside]) / r[inside])[:, None]
    return np.sqrt(np.einsum("ij,ij->i", pos, pos))
