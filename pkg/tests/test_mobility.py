"""Tests for the separation law, its sampler, and trajectory generation.

The independent oracle throughout is the direct reflected random walk of
the relative coordinate (particlesim.relative_distance_walk), which never
touches the closed-form law.
"""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from mobilemc import mobility
from mobilemc.channel import PhysicalParams, derive
from mobilemc.errors import (
    DegenerateLawError,
    InvalidArgumentError,
)
from mobilemc.mobility import (
    DistanceLaw,
    Trajectory,
    _TrajectorySampler,
    _sample_trajectories,
    build_distance_law,
    distance_pdf,
    sample_distance,
    sample_trajectory,
)
from mobilemc.particlesim import relative_distance_walk

_R0 = 1e-6
_SIGMA = 0.5e-6
_T = 3e-4
_D2_TABLE = 1.0005e-12


def _rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def table_params(**overrides):
    base = dict(
        num_molecules=1000,
        diff_A=0.5e-9,
        diff_TX=0.5e-12,
        diff_RX=0.5e-12,
        r0=_R0,
        radius_rx=_SIGMA,
        radius_tx=0.0,
        k_f=12.5e-15,
        k_b=2e5,
        k_d=0.2e5,
        num_receptors=1000,
        receptor_radius=13.95e-9,
        bit_interval=_T,
        sample_offset=6e-5,
        seq_length=10,
        p1=0.5,
    )
    base.update(overrides)
    return PhysicalParams(**base)


class TestDistanceLaw:
    def test_normalization_by_quadrature(self):
        law = build_distance_law(_R0, _T, _D2_TABLE, _SIGMA)
        total, err = integrate.quad(
            lambda r: distance_pdf(r, _T, _R0, _D2_TABLE, _SIGMA),
            _SIGMA,
            law.truncation_radius,
            points=[_R0],
            limit=200,
        )
        assert err < 1e-9
        assert abs(total - 1.0) <= 1e-6

    def test_short_time_mass_concentrates_at_start(self):
        t = 1e-9
        law = build_distance_law(_R0, t, _D2_TABLE, _SIGMA)
        w = math.sqrt(2.0 * _D2_TABLE * t)
        mass = law.cdf_at(_R0 + 5 * w) - law.cdf_at(_R0 - 5 * w)
        assert mass > 0.9999

    def test_pdf_against_walk_histogram(self):
        # diff_TX = 1e-10 case; bin narrow enough that curvature bias is
        # far below the Monte Carlo standard error
        d2 = 1e-10 + 0.5e-12
        r_probe, h = 1.05e-6, 2e-8
        n = 200_000
        finals = relative_distance_walk(_R0, d2, _SIGMA, _T, 300, n, _rng(401))
        count = int(np.sum(np.abs(finals - r_probe) < h / 2))
        emp = count / (n * h)
        se = math.sqrt(count) / (n * h)
        ana = distance_pdf(r_probe, _T, _R0, d2, _SIGMA)
        assert abs(ana - emp) <= 3.0 * se

    def test_normalization_across_scale_grid(self):
        # two decades around the reference scales in every direction;
        # construction itself enforces the 1e-6 closure of the tabulated mass
        for t in (3e-5, 3e-4, 3e-3):
            for d2 in (1e-13, 1e-12, 1e-11):
                for r0 in (0.6e-6, 1e-6, 3e-6):
                    law = build_distance_law(r0, t, d2, _SIGMA)
                    assert abs(law.grid_cdf[-1] - 1.0) <= 1e-6

    def test_no_mass_below_contact(self):
        law = build_distance_law(_R0, _T, 1.0005e-9, _SIGMA)
        assert law.cdf_at(_SIGMA) == 0.0
        assert distance_pdf(_SIGMA * 0.5, _T, _R0, _D2_TABLE, _SIGMA) == 0.0
        samples = np.array(
            [sample_distance(law, r) for r in [_rng(77)] for _ in range(2000)]
        )
        assert np.all(samples >= _SIGMA)

    def test_sigma_zero_matches_free_space_form(self):
        # regime chosen so the diffusion length covers the gap to the
        # origin, otherwise the boundary term is invisible
        d2, t, r0 = 1e-10, 3e-3, 1e-6
        ell = math.sqrt(4.0 * d2 * t)

        def free_pdf(r):
            return (
                (r / r0)
                / math.sqrt(4.0 * math.pi * d2 * t)
                * (
                    math.exp(-((r - r0) ** 2) / (4 * d2 * t))
                    - math.exp(-((r + r0) ** 2) / (4 * d2 * t))
                )
            )

        grid = np.linspace(0.02 * ell, r0 + 4 * ell, 600)
        free = np.array([free_pdf(r) for r in grid])
        small_sigma = np.array(
            [distance_pdf(r, t, r0, d2, 3e-9) for r in grid]
        )
        live = free > 1e-3 * free.max()
        rel = np.abs(small_sigma[live] - free[live]) / free[live]
        assert rel.max() <= 1e-6

        exact_zero = np.array([distance_pdf(r, t, r0, d2, 0.0) for r in grid])
        rel0 = np.abs(exact_zero[live] - free[live]) / free[live]
        assert rel0.max() <= 1e-12

        # free 3-D walk histogram (no boundary) against the same form
        n = 200_000
        finals = relative_distance_walk(r0, d2, 0.0, t, 300, n, _rng(402))
        h = 0.05 * ell
        for r_probe in (0.5e-6, 1e-6, 1.8e-6):
            count = int(np.sum(np.abs(finals - r_probe) < h / 2))
            emp = count / (n * h)
            se = math.sqrt(max(count, 1)) / (n * h)
            assert abs(free_pdf(r_probe) - emp) <= 3.0 * se

    def test_law_grids_are_frozen(self):
        law = build_distance_law(_R0, _T, _D2_TABLE, _SIGMA)
        with pytest.raises(ValueError):
            law.grid_r[0] = 0.0

    def test_validation_errors(self):
        with pytest.raises(DegenerateLawError):
            build_distance_law(_R0, _T, 0.0, _SIGMA)
        with pytest.raises(DegenerateLawError):
            distance_pdf(_R0, _T, _R0, 0.0, _SIGMA)
        with pytest.raises(InvalidArgumentError):
            build_distance_law(_R0, 0.0, _D2_TABLE, _SIGMA)
        with pytest.raises(InvalidArgumentError):
            build_distance_law(_R0, _T, _D2_TABLE, -1e-9)
        with pytest.raises(InvalidArgumentError):
            build_distance_law(0.4e-6, _T, _D2_TABLE, _SIGMA)
        with pytest.raises(InvalidArgumentError):
            build_distance_law(_R0, _T, -1e-12, _SIGMA)
        with pytest.raises(InvalidArgumentError):
            distance_pdf(-1e-9, _T, _R0, _D2_TABLE, _SIGMA)


class TestSampleDistance:
    def test_median_grid_point(self):
        law = build_distance_law(_R0, _T, _D2_TABLE, _SIGMA)
        rng = _rng(501)
        samples = np.array([sample_distance(law, rng) for _ in range(100_000)])
        median = law.quantile(0.5)
        frac = np.mean(samples <= median)
        assert abs(frac - 0.5) <= 0.01

    def test_kolmogorov_smirnov_against_law(self):
        law = build_distance_law(_R0, _T, _D2_TABLE, _SIGMA)
        rng = _rng(502)
        samples = np.array([sample_distance(law, rng) for _ in range(100_000)])
        result = stats.kstest(samples, lambda r: law.cdf_at(r))
        assert result.pvalue > 0.01

    def test_mean_against_walk_oracle(self):
        d2 = 1e-9 + 0.5e-12
        law = build_distance_law(_R0, _T, d2, _SIGMA)
        rng = _rng(503)
        n_law = 100_000
        samples = np.array([sample_distance(law, rng) for _ in range(n_law)])
        n_walk = 200_000
        finals = relative_distance_walk(_R0, d2, _SIGMA, _T, 300, n_walk, _rng(504))
        se = math.sqrt(
            samples.var(ddof=1) / n_law + finals.var(ddof=1) / n_walk
        )
        assert abs(samples.mean() - finals.mean()) <= 3.0 * se


class TestTrajectories:
    def test_single_bit_is_start_only(self):
        params = table_params(seq_length=1)
        derived = derive(params, "mobile")
        traj = sample_trajectory(_R0, params, derived, _rng(1))
        assert traj.distances.tolist() == [_R0]

    def test_immobile_nodes_give_constant_trajectory(self):
        params = table_params(diff_TX=0.0, diff_RX=0.0, seq_length=6)
        derived = derive(params, "fixed")
        traj = sample_trajectory(_R0, params, derived, _rng(2))
        assert np.all(traj.distances == _R0)
        assert len(traj) == 6

    def test_chapman_kolmogorov_two_step_composition(self):
        # composing two one-interval draws must reproduce the direct 2T
        # marginal; this discriminates against a wrong transition density
        d2 = 1e-9 + 0.5e-12
        chain = _sample_trajectories(
            _R0, 100_000, 3, _T, d2, _SIGMA, _rng(601)
        )
        finals = relative_distance_walk(
            _R0, d2, _SIGMA, 2 * _T, 600, 200_000, _rng(602)
        )
        result = stats.ks_2samp(chain[:, 2], finals)
        assert result.pvalue > 0.01

    def test_cached_kernel_cdf_error_bound(self):
        # worst-case starts sit between cache nodes; the blended quantile
        # function must stay within 1e-3 of the exact law in CDF sup-norm
        d2 = 1e-9 + 0.5e-12
        sampler = _TrajectorySampler(_T, d2, _SIGMA)
        w = math.sqrt(2.0 * d2 * _T)
        u = np.linspace(1e-4, 1.0 - 1e-4, 2001)
        worst = 0.0
        for base in (0.6 * w, 1.1 * w, 2.3 * w):
            for offset in (0.25, 0.5, 0.75):
                start = _SIGMA + base + offset * sampler.node_step
                x = (start - _SIGMA) / sampler.node_step
                node = int(math.floor(x))
                frac = x - node
                lo = sampler._law(node)
                hi = sampler._law(node + 1)
                blended = (1.0 - frac) * np.interp(
                    u, lo.grid_cdf, lo.grid_r
                ) + frac * np.interp(u, hi.grid_cdf, hi.grid_r)
                exact = build_distance_law(start, _T, d2, _SIGMA)
                worst = max(worst, np.max(np.abs(exact.cdf_at(blended) - u)))
        assert worst <= 1e-3

    def test_trajectory_validation(self):
        params = table_params()
        derived = derive(params, "mobile")
        with pytest.raises(InvalidArgumentError):
            sample_trajectory(0.3e-6, params, derived, _rng(3))
        with pytest.raises(InvalidArgumentError):
            _sample_trajectories(_R0, 0, 3, _T, _D2_TABLE, _SIGMA, _rng(4))
