"""Tests for the physical parameter model and the analytical impulse response."""

import dataclasses
import itertools
import math
import warnings

import numpy as np
import pytest

from mobilemc import channel as ch
from mobilemc.errors import (
    InvalidArgumentError,
    InvalidConfigError,
    NumericalFailureError,
)
from mobilemc.specfun import CubicRoots

from _oracles import companion_roots, sorted_by_parts

# reference link constants used throughout (SI units)
_N_A = 5000
_DIFF_A = 0.5e-9
_DIFF_TX = 0.5e-12
_DIFF_RX = 0.5e-12
_R0 = 1e-6
_A_RX = 0.5e-6
_K_F = 12.5e-15
_K_B = 2e5
_K_D = 0.2e5
_M = 1000
_R_S = 13.95e-9
_T = 3e-4
_T_S = 6e-5


def reference_params(**overrides) -> ch.PhysicalParams:
    base = dict(
        num_molecules=_N_A,
        diff_A=_DIFF_A,
        diff_TX=_DIFF_TX,
        diff_RX=_DIFF_RX,
        r0=_R0,
        radius_rx=_A_RX,
        radius_tx=0.0,
        k_f=_K_F,
        k_b=_K_B,
        k_d=_K_D,
        num_receptors=_M,
        receptor_radius=_R_S,
        bit_interval=_T,
        sample_offset=_T_S,
        seq_length=10,
        p1=0.5,
    )
    base.update(overrides)
    return ch.PhysicalParams(**base)


def double_root_params() -> tuple[ch.PhysicalParams, float]:
    # sq = sqrt(diff)/a_rx = 2 exactly; with the forward-rate override giving
    # kappa = 3, k_d = sq^2 and k_b = 6 sq^2 the decay cubic factors as
    # (x - 2)^2 (x - 4): a collided pair by construction
    params = reference_params(
        diff_A=4.0,
        diff_TX=0.0,
        diff_RX=0.0,
        r0=3.0,
        radius_rx=1.0,
        k_f=1.0,
        k_b=24.0,
        k_d=4.0,
        num_receptors=1,
        receptor_radius=1e-3,
        bit_interval=1.0,
        sample_offset=0.5,
    )
    return params, 48.0 * math.pi


class TestPhysicalParams:
    def test_reference_set_constructs(self):
        p = reference_params()
        assert p.num_molecules == _N_A
        assert p.coverage_fraction() == pytest.approx(
            _M * math.pi * _R_S**2 / (4.0 * math.pi * _A_RX**2), rel=1e-15
        )

    @pytest.mark.parametrize(
        "overrides",
        [
            {"r0": 0.4e-6},
            {"radius_tx": 0.7e-6},
            {"radius_rx": 0.0},
            {"sample_offset": 0.0},
            {"sample_offset": 4e-4},
            {"bit_interval": 0.0},
            {"seq_length": 0},
            {"p1": 1.5},
            {"p1": -0.1},
            {"k_f": -1.0},
            {"k_b": -1.0},
            {"k_d": -1.0},
            {"diff_A": -1e-9},
            {"num_molecules": -1},
            {"num_receptors": -1},
            {"receptor_radius": float("nan")},
            {"num_receptors": 40000},
        ],
    )
    def test_invalid_values_rejected(self, overrides):
        with pytest.raises(InvalidConfigError):
            reference_params(**overrides)

    def test_non_integer_counts_rejected(self):
        with pytest.raises(InvalidConfigError):
            reference_params(num_molecules=5000.0)


class TestDerive:
    def test_coverage_fraction_value(self):
        d = ch.derive(reference_params(), "fixed")
        by_hand = _M * math.pi * _R_S**2 / (4.0 * math.pi * _A_RX**2)
        assert d.lambda_ == pytest.approx(by_hand, rel=1e-14)
        assert d.lambda_ == pytest.approx(0.1946025, rel=1e-7)

    def test_effective_diffusion_sums(self):
        for mode in ("fixed", "mobile"):
            d = ch.derive(reference_params(), mode)
            assert d.d_eff1 == _DIFF_A + _DIFF_RX
            assert d.d_eff1 == pytest.approx(5.005e-10, rel=1e-12)
            assert d.d_eff2 == _DIFF_TX + _DIFF_RX

    def test_no_receptors_kills_forward_rate(self):
        d = ch.derive(reference_params(num_receptors=0), "fixed")
        assert d.phi == 0.0
        assert d.k_f_mod == 0.0

    @pytest.mark.parametrize("mode", ["fixed", "mobile"])
    def test_roots_match_companion_matrix(self, mode):
        p = reference_params()
        d = ch.derive(p, mode)
        diff = d.diff_substituted(p)
        sq = math.sqrt(diff) / p.radius_rx
        ratio = 1.0 + d.k_f_mod / (4.0 * math.pi * p.radius_rx * diff)
        e1 = ratio * sq
        e2 = p.k_b - p.k_d
        e3 = p.k_b * sq - p.k_d * ratio * sq
        expect = sorted_by_parts(companion_roots(e1, e2, e3))
        got = sorted_by_parts(d.roots.roots)
        scale = max(abs(r) for r in expect)
        for g, e in zip(got, expect):
            assert abs(g - e) <= 1e-10 * scale
        assert d.roots.residual <= 1e-10

    def test_mobile_substitution_changes_roots(self):
        fixed = ch.derive(reference_params(), "fixed")
        mobile = ch.derive(reference_params(), "mobile")
        assert fixed.roots.roots != mobile.roots.roots
        assert mobile.mobility_mode == "mobile"

    def test_forward_rate_override(self):
        p = reference_params()
        d = ch.derive(p, "fixed", k_f_mod_override=1e-15)
        assert d.k_f_mod == 1e-15

    def test_bad_mode_rejected(self):
        with pytest.raises(InvalidConfigError):
            ch.derive(reference_params(), "drifting")

    def test_degenerate_roots_warn_and_split(self):
        p, override = double_root_params()
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            d = ch.derive(p, "fixed", k_f_mod_override=override)
        assert d.degenerate_roots
        assert any("degenerate" in str(w.message) for w in rec)
        rs = sorted_by_parts(d.roots.roots)
        gaps = [abs(a - b) for a, b in itertools.combinations(rs, 2)]
        assert min(gaps) > 1e-7 * max(abs(r) for r in rs)


class TestCir:
    def test_vanishes_before_arrival(self):
        p = reference_params()
        d = ch.derive(p, "fixed")
        assert ch.cir(1e-12, p.r0, d, p) < 1e-12

    def test_zero_forward_rate_gives_zero(self):
        p = reference_params(k_f=0.0)
        for mode in ("fixed", "mobile"):
            d = ch.derive(p, mode)
            for t in (1e-6, _T_S, 1e-3):
                assert ch.cir(t, p.r0, d, p) == 0.0

    @pytest.mark.parametrize("mode", ["fixed", "mobile"])
    def test_single_interior_maximum(self, mode):
        p = reference_params()
        d = ch.derive(p, mode)
        ts = np.geomspace(1e-6, 3e-3, 500)
        vals = np.array([ch.cir(t, p.r0, d, p) for t in ts])
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        sign = np.sign(np.diff(vals))
        sign = sign[sign != 0.0]
        flips = np.count_nonzero(np.diff(sign))
        assert flips == 1
        assert sign[0] > 0 and sign[-1] < 0

    def test_substitution_consistency_bit_identical(self):
        p_mobile = reference_params()
        p_folded = reference_params(diff_A=_DIFF_A + _DIFF_RX, diff_RX=0.0)
        dm = ch.derive(p_mobile, "mobile")
        df = ch.derive(p_folded, "fixed")
        assert dm.k_f_mod == df.k_f_mod
        assert dm.phi == df.phi
        assert dm.roots.roots == df.roots.roots
        for t in np.geomspace(1e-6, 2e-3, 60):
            assert ch.cir(t, _R0, dm, p_mobile) == ch.cir(t, _R0, df, p_folded)

    def test_range_on_random_draws(self):
        # log-uniform draws spanning a decade either side of the reference
        # constants, resampled until physically valid
        rng = np.random.default_rng(20260821)
        centers = dict(
            diff_A=_DIFF_A,
            diff_TX=_DIFF_TX,
            diff_RX=_DIFF_RX,
            r0=_R0,
            radius_rx=_A_RX,
            k_f=_K_F,
            k_b=_K_B,
            k_d=_K_D,
            receptor_radius=_R_S,
        )
        checked = 0
        while checked < 10_000:
            draw = {
                k: v * 10.0 ** rng.uniform(-1.0, 1.0) for k, v in centers.items()
            }
            draw["num_receptors"] = int(round(1000 * 10.0 ** rng.uniform(-1.0, 1.0)))
            mode = "mobile" if rng.random() < 0.5 else "fixed"
            t = 10.0 ** rng.uniform(-6.0, -2.0)
            try:
                p = reference_params(**draw)
            except InvalidConfigError:
                continue
            v = ch.cir(t, p.r0, ch.derive(p, mode), p)
            assert math.isfinite(v)
            assert 0.0 <= v <= 1.0
            checked += 1

    def test_degradation_never_helps(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            scale_b = 10.0 ** rng.uniform(-1.0, 1.0)
            scale_f = 10.0 ** rng.uniform(-1.0, 1.0)
            t = 10.0 ** rng.uniform(-5.5, -3.0)
            prev = None
            for k_d in (0.0, 5e3, 2e4, 1e5, 4e5):
                p = reference_params(k_b=_K_B * scale_b, k_f=_K_F * scale_f, k_d=k_d)
                v = ch.cir(t, p.r0, ch.derive(p, "mobile"), p)
                if prev is not None:
                    assert v <= prev * (1.0 + 1e-10) + 1e-300
                prev = v

    def test_root_permutation_invariance(self):
        p = reference_params()
        d = ch.derive(p, "mobile")
        base = [ch.cir(t, p.r0, d, p) for t in (1e-5, _T_S, 5e-4)]
        for perm in itertools.permutations(d.roots.roots):
            dp = dataclasses.replace(
                d, roots=CubicRoots(tuple(perm), d.roots.residual)
            )
            for t, v in zip((1e-5, _T_S, 5e-4), base):
                assert ch.cir(t, p.r0, dp, p) == pytest.approx(v, rel=1e-12)

    def test_degenerate_params_still_evaluate(self):
        p, override = double_root_params()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            d = ch.derive(p, "fixed", k_f_mod_override=override)
        for t in (0.05, 0.3, 2.0):
            v = ch.cir(t, p.r0, d, p)
            assert 0.0 <= v <= 1.0

    def test_bad_arguments_rejected(self):
        p = reference_params()
        d = ch.derive(p, "fixed")
        with pytest.raises(InvalidArgumentError):
            ch.cir(0.0, p.r0, d, p)
        with pytest.raises(InvalidArgumentError):
            ch.cir(-1e-5, p.r0, d, p)
        with pytest.raises(InvalidArgumentError):
            ch.cir(1e-4, 0.3 * _A_RX, d, p)
        with pytest.raises(InvalidArgumentError):
            ch.cir(float("nan"), p.r0, d, p)


class TestExpectedReceivedSignal:
    def test_no_molecules_no_signal(self):
        p = reference_params(num_molecules=0)
        d = ch.derive(p, "fixed")
        for t in (1e-5, _T_S, 1e-3):
            assert ch.expected_received_signal(t, d, p) == 0.0

    def test_scales_linearly_with_release_size(self):
        p1 = reference_params(num_molecules=5000)
        p2 = reference_params(num_molecules=10000)
        d1 = ch.derive(p1, "mobile")
        d2 = ch.derive(p2, "mobile")
        v1 = ch.expected_received_signal(_T_S, d1, p1)
        assert v1 == 5000 * ch.cir(_T_S, _R0, d1, p1)
        assert ch.expected_received_signal(_T_S, d2, p2) == 2.0 * v1
