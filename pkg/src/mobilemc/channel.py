"""Physical parameters, derived constants and the analytical impulse response.

The model describes a point release of signaling molecules that diffuse,
degrade, and reversibly bind to receptors spread over a spherical receiver.
Receptor coverage is homogenized into a modified forward rate, and the
response to an impulsive release is the activation probability P(t): the
probability that a given released molecule sits bound to a receptor at
time t.  Transceiver mobility enters through effective diffusion
coefficients; with a mobile receiver the molecule-receiver encounter is
described in relative coordinates, which replaces the molecule diffusion
coefficient everywhere it appears.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import InvalidArgumentError, InvalidConfigError, NumericalFailureError
from .specfun import CubicRoots

__all__ = [
    "PhysicalParams",
    "DerivedParams",
    "derive",
    "cir",
    "expected_received_signal",
]

_MODES = ("fixed", "mobile")
# roots closer than this (relative) make the divided differences in the
# response sum amplify roundoff past the range tolerance
_DEGENERACY_DETECT = 1e-7
_PERTURB_REL = 1e-9
_IMAG_TOL = 1e-9
_RANGE_TOL = 1e-10
_EXP_GUARD = 700.0
_UNDERFLOW_ARG = 745.0


@dataclass(frozen=True)
class PhysicalParams:
    """Complete physical description of one communication link.

    Units are SI throughout: diffusion coefficients in m^2/s, radii and
    distances in m, the forward rate in molecule^-1 m^3 s^-1, backward and
    degradation rates in 1/s, times in s.
    """

    num_molecules: int
    diff_A: float
    diff_TX: float
    diff_RX: float
    r0: float
    radius_rx: float
    radius_tx: float
    k_f: float
    k_b: float
    k_d: float
    num_receptors: int
    receptor_radius: float
    bit_interval: float
    sample_offset: float
    seq_length: int
    p1: float

    def __post_init__(self):
        def _chk(cond: bool, msg: str):
            if not cond:
                raise InvalidConfigError(msg)

        for name in (
            "diff_A", "diff_TX", "diff_RX", "r0", "radius_rx", "radius_tx",
            "k_f", "k_b", "k_d", "receptor_radius", "bit_interval",
            "sample_offset", "p1",
        ):
            v = getattr(self, name)
            _chk(isinstance(v, (int, float)) and math.isfinite(float(v)),
                 f"{name} must be a finite number, got {v!r}")
        for name in ("num_molecules", "num_receptors", "seq_length"):
            v = getattr(self, name)
            _chk(isinstance(v, int) and not isinstance(v, bool),
                 f"{name} must be an integer, got {v!r}")

        _chk(self.num_molecules >= 0, "num_molecules must be >= 0")
        _chk(self.diff_A >= 0.0, "diff_A must be >= 0")
        _chk(self.diff_TX >= 0.0, "diff_TX must be >= 0")
        _chk(self.diff_RX >= 0.0, "diff_RX must be >= 0")
        _chk(self.radius_rx > 0.0, "radius_rx must be > 0")
        _chk(self.radius_tx >= 0.0, "radius_tx must be >= 0")
        _chk(self.r0 >= self.radius_rx + self.radius_tx,
             "r0 must be at least radius_rx + radius_tx")
        _chk(self.k_f >= 0.0, "k_f must be >= 0")
        _chk(self.k_b >= 0.0, "k_b must be >= 0")
        _chk(self.k_d >= 0.0, "k_d must be >= 0")
        _chk(self.num_receptors >= 0, "num_receptors must be >= 0")
        _chk(self.receptor_radius >= 0.0, "receptor_radius must be >= 0")
        _chk(self.bit_interval > 0.0, "bit_interval must be > 0")
        _chk(0.0 < self.sample_offset <= self.bit_interval,
             "sample_offset must lie in (0, bit_interval]")
        _chk(self.seq_length >= 1, "seq_length must be >= 1")
        _chk(0.0 <= self.p1 <= 1.0, "p1 must lie in [0, 1]")

        lam = self.coverage_fraction()
        _chk(lam <= 1.0,
             f"receptor coverage fraction {lam:.6g} exceeds 1; "
             "reduce num_receptors or receptor_radius")

    def coverage_fraction(self) -> float:
        """Fraction of the receiver surface covered by receptor disks."""
        return (
            self.num_receptors
            * math.pi
            * self.receptor_radius**2
            / (4.0 * math.pi * self.radius_rx**2)
        )


@dataclass(frozen=True)
class DerivedParams:
    """Constants computed once from PhysicalParams for a given mobility mode.

    ``roots`` holds the decay constants of the activation-probability
    kernel; they were solved with the substituted diffusion coefficient
    when ``mobility_mode`` is ``"mobile"``.
    """

    lambda_: float
    phi: float
    k_f_mod: float
    d_eff1: float
    d_eff2: float
    roots: CubicRoots
    mobility_mode: str
    degenerate_roots: bool = field(default=False)

    def __post_init__(self):
        if self.mobility_mode not in _MODES:
            raise InvalidConfigError(
                f"mobility_mode must be one of {_MODES}, got {self.mobility_mode!r}"
            )
        if not 0.0 <= self.phi <= 1.0:
            raise InvalidConfigError(f"phi must lie in [0, 1], got {self.phi!r}")
        if self.d_eff1 < 0.0 or self.d_eff2 < 0.0:
            raise InvalidConfigError("effective diffusion coefficients must be >= 0")

    def diff_substituted(self, params: PhysicalParams) -> float:
        """Diffusion coefficient in force inside the response formulas."""
        return self.d_eff1 if self.mobility_mode == "mobile" else params.diff_A


def _phi_correction(params: PhysicalParams, diff: float) -> float:
    """Coverage correction factor for homogenized receptor patches."""
    m = params.num_receptors
    r_s = params.receptor_radius
    a = params.radius_rx
    k_f = params.k_f
    lam = params.coverage_fraction()
    num = m * r_s**2 * (k_f * a + 4.0 * math.pi * diff)
    den = (
        a**2 * (1.0 - lam) * (math.pi * r_s * k_f + 16.0 * math.pi * diff) + num
    )
    if den == 0.0:
        return 0.0
    return num / den


def _modified_forward_rate(params: PhysicalParams, diff: float, phi: float) -> float:
    k_f = params.k_f
    a = params.radius_rx
    den = k_f * a * (1.0 - phi) + 4.0 * math.pi * diff
    if den == 0.0:
        return 0.0
    return 4.0 * math.pi * diff * k_f * phi / den


def _symmetric_functions(
    params: PhysicalParams, diff: float, k_f_mod: float, k_d: float
) -> tuple[float, float, float]:
    a = params.radius_rx
    sq = math.sqrt(diff) / a
    ratio = 1.0 + k_f_mod / (4.0 * math.pi * a * diff)
    e1 = ratio * sq
    e2 = params.k_b - k_d
    e3 = params.k_b * sq - k_d * ratio * sq
    return e1, e2, e3


def _is_degenerate(roots: CubicRoots) -> bool:
    rs = roots.roots
    scale = max(abs(r) for r in rs)
    if scale == 0.0:
        return True
    gap = min(
        abs(rs[0] - rs[1]), abs(rs[0] - rs[2]), abs(rs[1] - rs[2])
    )
    return gap < _DEGENERACY_DETECT * scale


def derive(
    params: PhysicalParams,
    mobility_mode: str,
    k_f_mod_override: float | None = None,
) -> DerivedParams:
    """Compute coverage, homogenized rate and kernel decay constants.

    In mobile mode the molecule diffusion coefficient is replaced by
    diff_A + diff_RX everywhere it enters the response formulas, including
    the coverage correction and the modified forward rate.  When
    ``k_f_mod_override`` is given it replaces the homogenized forward rate
    directly and the correction factor is reported for reference only.
    """
    if mobility_mode not in _MODES:
        raise InvalidConfigError(
            f"mobility_mode must be one of {_MODES}, got {mobility_mode!r}"
        )
    d_eff1 = params.diff_A + params.diff_RX
    d_eff2 = params.diff_TX + params.diff_RX
    diff = d_eff1 if mobility_mode == "mobile" else params.diff_A
    if diff <= 0.0:
        raise InvalidConfigError(
            "the substituted diffusion coefficient must be positive"
        )
    lam = params.coverage_fraction()
    if lam > 1.0:
        raise InvalidConfigError(f"receptor coverage fraction {lam:.6g} exceeds 1")

    phi = _phi_correction(params, diff)
    if k_f_mod_override is not None:
        k_f_mod = float(k_f_mod_override)
        if not math.isfinite(k_f_mod) or k_f_mod < 0.0:
            raise InvalidConfigError("k_f_mod override must be finite and >= 0")
    else:
        k_f_mod = _modified_forward_rate(params, diff, phi)

    roots = specfun.roots_from_symmetric(
        *_symmetric_functions(params, diff, k_f_mod, params.k_d)
    )
    degenerate = _is_degenerate(roots)
    if degenerate:
        # collided decay constants make the divided differences blow up;
        # nudge the degradation rate to split them
        k_d_pert = (
            params.k_d * (1.0 + _PERTURB_REL)
            if params.k_d > 0.0
            else _PERTURB_REL * max(params.k_b, diff / params.radius_rx**2, 1.0)
        )
        warnings.warn(
            "degenerate kernel decay constants; evaluating with degradation "
            f"rate perturbed by one part in {1.0 / _PERTURB_REL:.0e}",
            RuntimeWarning,
            stacklevel=2,
        )
        roots = specfun.roots_from_symmetric(
            *_symmetric_functions(params, diff, k_f_mod, k_d_pert)
        )
        if _is_degenerate(roots):
            raise NumericalFailureError(
                "kernel decay constants remain degenerate after perturbation"
            )

    return DerivedParams(
        lambda_=lam,
        phi=phi,
        k_f_mod=k_f_mod,
        d_eff1=d_eff1,
        d_eff2=d_eff2,
        roots=roots,
        mobility_mode=mobility_mode,
        degenerate_roots=degenerate,
    )


def _cir_array(
    t: np.ndarray,
    r0: np.ndarray,
    derived: DerivedParams,
    params: PhysicalParams,
) -> np.ndarray:
    """Activation probability on broadcastable arrays of time and release
    distance.  Core shared by the scalar operation and the table builders."""
    t = np.asarray(t, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    if np.any(t <= 0.0):
        raise InvalidArgumentError("t must be > 0")
    if np.any(r0 < params.radius_rx):
        raise InvalidArgumentError("release distance must be >= radius_rx")

    t, r0 = np.broadcast_arrays(t, r0)
    if derived.k_f_mod == 0.0:
        return np.zeros(t.shape)

    diff = derived.diff_substituted(params)
    a = params.radius_rx
    sqrt_t = np.sqrt(t)
    n = (r0 - a) / (2.0 * np.sqrt(diff) * sqrt_t)
    damp_n = n * n + params.k_d * t
    pref = derived.k_f_mod / (4.0 * math.pi * r0 * a * math.sqrt(diff))

    rts = derived.roots.roots
    acc = np.zeros(t.shape, dtype=complex)
    with np.errstate(under="ignore"):
        for i, ai in enumerate(rts):
            denom = 1.0 + 0.0j
            for j, aj in enumerate(rts):
                if j != i:
                    denom *= ai - aj
            m = ai * sqrt_t
            z = n + m
            term = np.empty(t.shape, dtype=complex)
            pos = z.real >= 0.0
            if np.any(pos):
                if ai.imag == 0.0:
                    ex = np.exp(-damp_n[pos])
                    term[pos] = ex * specfun._erfcx_real_array(z[pos].real)
                else:
                    ex = np.exp(-damp_n[pos])
                    term[pos] = ex * specfun._erfcx_cplx_array(z[pos])
            if np.any(~pos):
                zneg = z[~pos]
                exponent = 2.0 * n[~pos] * m[~pos] + m[~pos] * m[~pos] - params.k_d * t[~pos]
                if np.any(exponent.real > _EXP_GUARD):
                    raise NumericalFailureError(
                        "impulse-response term overflows double precision; "
                        "the parameter set is outside the evaluable range"
                    )
                if ai.imag == 0.0:
                    refl = 2.0 * np.exp(exponent.real) - np.exp(
                        -damp_n[~pos]
                    ) * specfun._erfcx_real_array(-zneg.real)
                    term[~pos] = refl
                else:
                    term[~pos] = 2.0 * np.exp(exponent) - np.exp(
                        -damp_n[~pos]
                    ) * specfun._erfcx_cplx_array(-zneg)
            acc += (ai / denom) * term

    total = -acc
    re = total.real
    im = total.imag
    bad = np.abs(im) > _IMAG_TOL * np.abs(re)
    if np.any(bad & (np.abs(im) > 0.0)):
        raise NumericalFailureError(
            "impulse response lost realness; imaginary residue "
            f"{float(np.max(np.abs(im))):.3e}"
        )
    val = pref * re
    if np.any(val < -_RANGE_TOL) or np.any(val > 1.0 + _RANGE_TOL):
        raise NumericalFailureError(
            "impulse response left [0, 1]: range "
            f"[{float(np.min(val)):.3e}, {float(np.max(val)):.3e}]"
        )
    return np.clip(val, 0.0, 1.0) + 0.0


def cir(
    t: float,
    r0: float,
    derived: DerivedParams,
    params: PhysicalParams,
) -> float:
    """Activation probability at time t for a release from distance r0."""
    tv = float(t)
    rv = float(r0)
    if not math.isfinite(tv) or tv <= 0.0:
        raise InvalidArgumentError(f"t must be finite and > 0, got {t!r}")
    if not math.isfinite(rv) or rv < params.radius_rx:
        raise InvalidArgumentError(
            f"release distance must be finite and >= radius_rx, got {r0!r}"
        )
    return float(_cir_array(np.array([tv]), np.array([rv]), derived, params)[0])


def expected_received_signal(
    t: float,
    derived: DerivedParams,
    params: PhysicalParams,
) -> float:
    """Expected number of activated receptors at time t after one release
    from the nominal distance."""
    return params.num_molecules * cir(t, params.r0, derived, params)
