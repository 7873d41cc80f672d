"""Threshold detection under intersymbol interference with Poisson counts.

A frame carries L bits with ON/OFF keying.  At the sampling instant of
bit j the activated-receptor count is modeled as Poisson with a mean that
stacks the tails of every earlier release, each release evaluated at the
transmitter-receiver separation that held at its own bit boundary.  The
detector compares the count against a fixed threshold; error
probabilities average over bit patterns exactly (weighted enumeration)
or by sampling, and over separation trajectories by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channel, mobility, specfun
from .errors import InvalidArgumentError, InvalidConfigError

__all__ = [
    "BitSequence",
    "DetectorConfig",
    "McConfig",
    "BerEstimate",
    "poisson_mean_isi",
    "conditional_bit_error",
    "expected_ber",
]

_ENUM_LIMIT = 12
_BATCH = 1000
_STREAM_DOMAIN = 0x42455244


@dataclass(frozen=True)
class BitSequence:
    """Ordered frame bits, index 0 first on the wire."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise InvalidArgumentError("a bit sequence needs at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidArgumentError("bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class DetectorConfig:
    """Count-threshold decision rule: decide 1 when the count reaches threshold."""

    threshold: int

    def __post_init__(self):
        if not isinstance(self.threshold, int) or isinstance(self.threshold, bool):
            raise InvalidConfigError("threshold must be an integer")
        if self.threshold < 0:
            raise InvalidConfigError("threshold must be >= 0")


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo controls for trajectory averaging."""

    num_trajectories: int
    seed: int
    bit_treatment: str = "auto"

    def __post_init__(self):
        if not isinstance(self.num_trajectories, int) or self.num_trajectories < 1:
            raise InvalidConfigError("num_trajectories must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfigError("seed must be a non-negative integer")
        if self.bit_treatment not in ("auto", "enumerated", "sampled"):
            raise InvalidConfigError(
                "bit_treatment must be auto, enumerated, or sampled"
            )


@dataclass(frozen=True)
class BerEstimate:
    """Expected bit error probability with its Monte Carlo uncertainty."""

    value: float
    std_error: float
    num_trajectories: int
    bit_treatment: str

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise InvalidArgumentError("error probability must lie in [0, 1]")
        if self.std_error < 0.0:
            raise InvalidArgumentError("std_error must be >= 0")


def _check_frame(j: int, bits: BitSequence, traj: mobility.Trajectory, params):
    length = params.seq_length
    if len(bits) != length:
        raise InvalidArgumentError(
            f"bit sequence length {len(bits)} does not match frame length {length}"
        )
    if len(traj) != length:
        raise InvalidArgumentError(
            f"trajectory length {len(traj)} does not match frame length {length}"
        )
    if not isinstance(j, int) or not 1 <= j <= length:
        raise InvalidArgumentError(f"bit index must lie in 1..{length}, got {j!r}")


def poisson_mean_isi(
    j: int,
    bits: BitSequence,
    traj: mobility.Trajectory,
    params,
    derived,
) -> float:
    """Mean received count at bit j's sampling instant, earlier releases included.

    Release i contributes its response evaluated at lag (j-i)*T + t_s and at
    the separation that held at release time, traj[i-1].
    """
    _check_frame(j, bits, traj, params)
    total = 0.0
    for i in range(1, j + 1):
        if bits.bits[i - 1] == 0:
            continue
        lag = (j - i) * params.bit_interval + params.sample_offset
        total += channel.cir(lag, traj.distances[i - 1], derived, params)
    return params.num_molecules * total


def conditional_bit_error(
    j: int,
    bits: BitSequence,
    traj: mobility.Trajectory,
    xi: int,
    params,
    derived,
) -> float:
    """Error probability of bit j for one bit pattern and one trajectory."""
    if not isinstance(xi, int) or isinstance(xi, bool) or xi < 0:
        raise InvalidArgumentError(f"threshold must be a non-negative integer, got {xi!r}")
    mean = poisson_mean_isi(j, bits, traj, params, derived)
    below = specfun.poisson_cdf_below(mean, xi)
    return below if bits.bits[j - 1] == 1 else 1.0 - below


def _lag_response_table(
    radii: np.ndarray, params, derived
) -> np.ndarray:
    """table[l, m, i] = response at lag l*T + t_s from separation radii[m, i].

    Only entries with l + i <= L - 1 are ever read; the rest stay zero.
    """
    n, length = radii.shape
    table = np.zeros((length, n, length))
    for lag in range(length):
        t = lag * params.bit_interval + params.sample_offset
        cols = length - lag
        block = radii[:, :cols]
        table[lag, :, :cols] = channel._cir_array(
            np.array(t), block, derived, params
        )
    return table


def _enumerated_frame_error(
    radii: np.ndarray, xi: int, params, derived
) -> np.ndarray:
    """Per-trajectory frame error probability, bit patterns enumerated exactly.

    radii: (n, L) separations at bit boundaries.  Weighted sum over all 2^j
    prefixes for each bit index j, averaged over j.
    """
    n, length = radii.shape
    table = _lag_response_table(radii, params, derived)
    p1 = params.p1
    n_a = params.num_molecules
    acc = np.zeros(n)
    for j in range(1, length + 1):
        combos = np.arange(2**j, dtype=np.uint32)
        bits = ((combos[:, None] >> np.arange(j)) & 1).astype(float)
        weights = np.prod(np.where(bits == 1.0, p1, 1.0 - p1), axis=1)
        # coeff[m, k] = response of release k+1 read at bit j's instant
        coeff = np.stack(
            [table[j - 1 - k, :, k] for k in range(j)], axis=1
        )
        means = n_a * (bits @ coeff.T)
        below = specfun._poisson_cdf_below_grid(means.ravel(), xi).reshape(means.shape)
        last = bits[:, j - 1] == 1.0
        errs = np.where(last[:, None], below, 1.0 - below)
        acc += weights @ errs
    return acc / length


def _sampled_frame_error(
    radii: np.ndarray, xi: int, params, derived, rng: np.random.Generator
) -> np.ndarray:
    """Per-trajectory frame error with one sampled bit pattern per trajectory."""
    n, length = radii.shape
    table = _lag_response_table(radii, params, derived)
    bits = (rng.random((n, length)) < params.p1).astype(float)
    n_a = params.num_molecules
    errs = np.empty((n, length))
    for j in range(1, length + 1):
        coeff = np.stack([table[j - 1 - k, :, k] for k in range(j)], axis=1)
        means = n_a * np.sum(bits[:, :j] * coeff, axis=1)
        below = specfun._poisson_cdf_below_grid(means, xi)
        last = bits[:, j - 1] == 1.0
        errs[:, j - 1] = np.where(last, below, 1.0 - below)
    return errs.mean(axis=1)


def _resolve_treatment(mc: McConfig, length: int) -> str:
    mode = mc.bit_treatment
    if mode == "auto":
        mode = "enumerated" if length <= _ENUM_LIMIT else "sampled"
    if mode == "enumerated" and length > _ENUM_LIMIT:
        raise InvalidConfigError(
            f"exact bit enumeration is limited to frames of {_ENUM_LIMIT} bits"
        )
    return mode


def _frame_error(radii, xi, params, derived, mode, rng):
    if mode == "enumerated":
        return _enumerated_frame_error(radii, xi, params, derived)
    return _sampled_frame_error(radii, xi, params, derived, rng)


def expected_ber(
    params,
    derived,
    xi: int,
    mc: McConfig,
    trajectories: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> BerEstimate:
    """Expected error probability over random bit patterns and trajectories.

    Separation trajectories are sampled in fixed-size batches, each batch on
    its own deterministically derived random substream, so results do not
    depend on evaluation order.  Passing ``trajectories`` (with optional
    ``weights``) replaces the sampler entirely and turns the average into a
    deterministic weighted sum over the given separations.
    """
    if not isinstance(xi, int) or isinstance(xi, bool) or xi < 0:
        raise InvalidArgumentError(f"threshold must be a non-negative integer, got {xi!r}")
    length = params.seq_length
    mode = _resolve_treatment(mc, length)
    sigma = params.radius_rx + params.radius_tx

    if trajectories is not None:
        radii = np.asarray(trajectories, dtype=float)
        if radii.ndim != 2 or radii.shape[1] != length:
            raise InvalidArgumentError(
                f"trajectories must have shape (n, {length})"
            )
        if np.any(radii < sigma):
            raise InvalidArgumentError("separations must be >= the contact radius")
        if weights is None:
            w = np.full(radii.shape[0], 1.0 / radii.shape[0])
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (radii.shape[0],) or np.any(w < 0.0):
                raise InvalidArgumentError("weights must be non-negative, one per trajectory")
            total = w.sum()
            if not math.isfinite(total) or total <= 0.0:
                raise InvalidArgumentError("weights must have a positive finite sum")
            w = w / total
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((mc.seed, _STREAM_DOMAIN, 0)))
        )
        per_traj = _frame_error(radii, xi, params, derived, mode, rng)
        value = float(w @ per_traj)
        return BerEstimate(
            value=min(1.0, max(0.0, value)),
            std_error=0.0,
            num_trajectories=radii.shape[0],
            bit_treatment=mode,
        )

    if derived.d_eff2 == 0.0:
        radii = np.full((1, length), float(params.r0))
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((mc.seed, _STREAM_DOMAIN, 0)))
        )
        per_traj = _frame_error(radii, xi, params, derived, mode, rng)
        return BerEstimate(
            value=float(min(1.0, max(0.0, per_traj[0]))),
            std_error=0.0,
            num_trajectories=mc.num_trajectories,
            bit_treatment=mode,
        )

    count = mc.num_trajectories
    sums = 0.0
    sq_sums = 0.0
    done = 0
    batch_index = 0
    while done < count:
        take = min(_BATCH, count - done)
        rng = np.random.Generator(
            np.random.Philox(
                np.random.SeedSequence((mc.seed, _STREAM_DOMAIN, batch_index))
            )
        )
        radii = mobility._sample_trajectories(
            params.r0,
            take,
            length,
            params.bit_interval,
            derived.d_eff2,
            sigma,
            rng,
        )
        per_traj = _frame_error(radii, xi, params, derived, mode, rng)
        sums += float(per_traj.sum())
        sq_sums += float(np.square(per_traj).sum())
        done += take
        batch_index += 1

    value = sums / count
    if count > 1:
        var = max(0.0, (sq_sums - count * value * value) / (count - 1))
        std_error = math.sqrt(var / count)
    else:
        std_error = 0.0
    return BerEstimate(
        value=min(1.0, max(0.0, value)),
        std_error=std_error,
        num_trajectories=count,
        bit_treatment=mode,
    )
