"""Scalar special functions that the channel and mobility models build on.

Everything is implemented on top of numpy and the math module; no external
special-function library is used.  The scaled complementary error function
erfcx(z) = exp(z^2) erfc(z) is evaluated with a two-region scheme on the
quarter plane Re z >= 0, Im z >= 0:

* moderate arguments (|z| < 6): a 28-node midpoint lattice sum for the
  Faddeeva function w(iz) plus the pole-capture correction term
  2 exp(-zeta^2) / (1 + exp(-2 pi i zeta / h)), which carries the residue
  of the integrand pole and keeps the rule uniformly accurate,
* large arguments (|z| >= 6): the Laplace continued fraction evaluated
  backward at fixed depth.

Points within 1e-3 of a lattice node (only reachable near the imaginary
axis) take a patched path that combines the nearest lattice term with the
correction analytically, so the cancellation between the two is removed
before any floating-point subtraction happens.  Other quadrants reduce to
the quarter plane by conjugation and by the reflection
erfcx(-z) = 2 exp(z^2) - erfcx(z).

The public operations are deliberately scalar; internal array cores back
them and are shared with sibling modules that need vectorised evaluation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalFailureError

__all__ = [
    "ComplexScalar",
    "CubicRoots",
    "erfcx",
    "erfcx_complex",
    "w_kernel",
    "roots_from_symmetric",
    "poisson_cdf_below",
]

# Complex values cross module boundaries as plain Python complex numbers;
# finiteness is enforced at every public entry point.
ComplexScalar = complex

_SQRTPI = math.sqrt(math.pi)

# midpoint lattice for the Faddeeva sum
_H = 0.5
_NODES = (np.arange(-14, 14) + 0.5) * _H
_WEIGHTS = np.exp(-(_NODES**2))

_SWITCH_RADIUS = 6.0  # lattice below, continued fraction at or above
_CF_DEPTH = 28
_SEAM_WIDTH = 1e-3  # |i z - node| below which the patched path is taken

# exp() argument ceiling; beyond this the reflected branch overflows double
_EXP_GUARD = 700.0

_RESIDUAL_LIMIT = 1e-10


def _require_real(name: str, value) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} must be a real number, got {value!r}") from exc
    if not math.isfinite(x):
        raise InvalidArgumentError(f"{name} must be finite, got {x!r}")
    return x


def _require_complex(name: str, value) -> complex:
    try:
        z = complex(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} must be a complex number, got {value!r}") from exc
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidArgumentError(f"{name} must have finite components, got {z!r}")
    return z


# ---------------------------------------------------------------------------
# array cores
# ---------------------------------------------------------------------------


def _cf_quarter(z: np.ndarray) -> np.ndarray:
    """Backward Laplace continued fraction; |z| >= 6, Re z >= 0."""
    f = z.astype(complex, copy=True)
    for k in range(_CF_DEPTH, 0, -1):
        f = z + (0.5 * k) / f
    return 1.0 / (_SQRTPI * f)


def _lattice_quarter(z: np.ndarray) -> np.ndarray:
    """Midpoint lattice sum with pole-capture correction; |z| < 6 quarter plane."""
    zeta = 1j * z
    out = np.empty(z.shape, dtype=complex)

    near_idx = np.clip(np.rint(zeta.real / _H - 0.5).astype(int), -14, 13)
    u = zeta - (near_idx + 0.5) * _H
    seam = np.abs(u) < _SEAM_WIDTH

    plain = ~seam
    if np.any(plain):
        zp = zeta[plain]
        s = (1j * _H / np.pi) * np.sum(_WEIGHTS / (zp[:, None] - _NODES), axis=1)
        corr = 2.0 * np.exp(-zp * zp) / (1.0 + np.exp(-2j * np.pi * zp / _H))
        out[plain] = s + corr

    if np.any(seam):
        zs = zeta[seam]
        us = u[seam]
        cols = near_idx[seam] - (-14)
        rows = np.arange(zs.size)
        wmat = np.broadcast_to(_WEIGHTS, (zs.size, _NODES.size)).copy()
        wmat[rows, cols] = 0.0
        denom = zs[:, None] - _NODES
        denom[rows, cols] = 1.0  # weight is zero; keep 0/0 out of the sum
        others = (1j * _H / np.pi) * np.sum(wmat / denom, axis=1)

        t = (near_idx[seam] + 0.5) * _H
        wt = np.exp(-t * t)
        # nearest lattice term merged with the singular part of the correction
        merged = np.empty(zs.shape, dtype=complex)
        nz = us != 0
        delta = 2.0 * t * us + us * us
        with np.errstate(invalid="ignore", divide="ignore"):
            merged[nz] = -(1j * _H / np.pi) * wt[nz] * np.expm1(-delta[nz]) / us[nz]
        merged[~nz] = (2j * _H / np.pi) * t[~nz] * wt[~nz]
        v = (2j * np.pi / _H) * us
        tail = np.exp(-zs * zs) * (1.0 + v / 6.0 - v**3 / 360.0 + v**5 / 15120.0)
        out[seam] = others + merged + tail

    return out


def _erfcx_quarter(z: np.ndarray) -> np.ndarray:
    """erfcx on Re z >= 0, Im z >= 0."""
    out = np.empty(z.shape, dtype=complex)
    big = np.abs(z) >= _SWITCH_RADIUS
    if np.any(big):
        out[big] = _cf_quarter(z[big])
    if np.any(~big):
        out[~big] = _lattice_quarter(z[~big])
    return out


def _erfcx_cplx_array(z: np.ndarray) -> np.ndarray:
    """erfcx for arbitrary finite complex arguments (1-d array)."""
    z = np.asarray(z, dtype=complex)
    flip_im = z.imag < 0.0
    zq = np.where(flip_im, np.conj(z), z)
    flip_re = zq.real < 0.0
    zr = np.where(flip_re, -np.conj(zq), zq)
    core = _erfcx_quarter(zr)
    if np.any(flip_re):
        zz = zq[flip_re] ** 2
        if np.any(zz.real > _EXP_GUARD):
            raise NumericalFailureError(
                "erfcx reflection overflows double precision for Re(z^2) > "
                f"{_EXP_GUARD:g}"
            )
        reflected = 2.0 * np.exp(zz) - np.conj(core[flip_re])
        core = core.copy()
        core[flip_re] = reflected
    return np.where(flip_im, np.conj(core), core)


def _erfcx_real_array(x: np.ndarray) -> np.ndarray:
    """erfcx for real arguments (1-d array); raises where the result overflows."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    out = np.empty(a.shape, dtype=float)

    small = a < _SWITCH_RADIUS
    if np.any(small):
        xs = a[small]
        s = (_H / np.pi) * xs * np.sum(_WEIGHTS / (xs[:, None] ** 2 + _NODES**2), axis=1)
        s += 2.0 * np.exp(xs * xs) / (1.0 + np.exp((2.0 * np.pi / _H) * xs))
        out[small] = s
    if np.any(~small):
        xl = a[~small]
        f = xl.copy()
        for k in range(_CF_DEPTH, 0, -1):
            f = xl + (0.5 * k) / f
        out[~small] = 1.0 / (_SQRTPI * f)

    neg = x < 0.0
    if np.any(neg):
        sq = x[neg] ** 2
        if np.any(sq > _EXP_GUARD):
            raise NumericalFailureError(
                f"erfcx(x) overflows double precision for x < -{math.sqrt(_EXP_GUARD):.2f}"
            )
        out[neg] = 2.0 * np.exp(sq) - out[neg]
    return out


# ---------------------------------------------------------------------------
# public scalar operations
# ---------------------------------------------------------------------------


def erfcx(x: float) -> float:
    """Scaled complementary error function exp(x^2) erfc(x) for real x."""
    xv = _require_real("x", x)
    return float(_erfcx_real_array(np.array([xv]))[0])


def erfcx_complex(z: ComplexScalar) -> ComplexScalar:
    """Analytic continuation of erfcx to finite complex arguments."""
    zv = _require_complex("z", z)
    return complex(_erfcx_cplx_array(np.array([zv]))[0])


def w_kernel(n: float, m: ComplexScalar) -> ComplexScalar:
    """Kernel W(n, m) = exp(2nm + m^2) erfc(n + m).

    Always evaluated through the algebraically identical form
    exp(-n^2) erfcx(n + m), which stays in range for the argument
    magnitudes the channel model produces.  When Re(n + m) < 0 the
    reflected form 2 exp(2nm + m^2) - exp(-n^2) erfcx(-(n + m)) is used
    instead, since erfcx itself would overflow there.
    """
    nv = _require_real("n", n)
    mv = _require_complex("m", m)

    if mv.imag == 0.0:
        mr = mv.real
        zr = nv + mr
        if zr >= 0.0:
            scale = math.exp(-min(nv * nv, 745.0)) if nv * nv < 745.0 else 0.0
            return complex(scale * float(_erfcx_real_array(np.array([zr]))[0]), 0.0)
        arg = 2.0 * nv * mr + mr * mr
        if arg > _EXP_GUARD:
            raise NumericalFailureError(
                "W(n, m) overflows double precision: 2nm + m^2 = " f"{arg:g}"
            )
        scale = math.exp(-nv * nv) if nv * nv < 745.0 else 0.0
        tail = scale * float(_erfcx_real_array(np.array([-zr]))[0])
        return complex(2.0 * math.exp(arg) - tail, 0.0)

    z = nv + mv
    if z.real >= 0.0:
        scale = math.exp(-nv * nv) if nv * nv < 745.0 else 0.0
        return scale * complex(_erfcx_cplx_array(np.array([z]))[0])
    arg = 2.0 * nv * mv + mv * mv
    if arg.real > _EXP_GUARD:
        raise NumericalFailureError(
            "W(n, m) overflows double precision: Re(2nm + m^2) = " f"{arg.real:g}"
        )
    scale = math.exp(-nv * nv) if nv * nv < 745.0 else 0.0
    tail = scale * complex(_erfcx_cplx_array(np.array([-z]))[0])
    return 2.0 * cmath.exp(arg) - tail


# ---------------------------------------------------------------------------
# cubic roots from elementary symmetric functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubicRoots:
    """Roots of a monic cubic with real coefficients, plus a quality measure.

    ``residual`` is the maximum relative defect of the three elementary
    symmetric functions reconstructed from the stored roots.  Non-real
    roots always form an exact conjugate pair.
    """

    roots: tuple[complex, complex, complex]
    residual: float

    def __post_init__(self):
        for r in self.roots:
            if not (math.isfinite(r.real) and math.isfinite(r.imag)):
                raise NumericalFailureError(f"non-finite cubic root {r!r}")
        imags = [r for r in self.roots if r.imag != 0.0]
        if imags and not (
            len(imags) == 2 and imags[0] == imags[1].conjugate()
        ):
            raise NumericalFailureError(
                "non-real cubic roots must form a conjugate pair"
            )
        if not (math.isfinite(self.residual) and self.residual <= _RESIDUAL_LIMIT):
            raise NumericalFailureError(
                f"cubic root residual {self.residual:.3e} exceeds {_RESIDUAL_LIMIT:g}"
            )


def _cubic_initial(e1: float, e2: float, e3: float) -> list[complex]:
    """Closed-form roots of x^3 - e1 x^2 + e2 x - e3."""
    shift = e1 / 3.0
    p = e2 - e1 * e1 / 3.0
    q = -2.0 * e1**3 / 27.0 + e1 * e2 / 3.0 - e3
    if p == 0.0 and q == 0.0:
        return [complex(shift, 0.0)] * 3

    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc <= 0.0 and p < 0.0:
        # three real roots, evaluated trigonometrically to avoid complex detours
        rp = math.sqrt(-p / 3.0)
        c3 = min(1.0, max(-1.0, -q / (2.0 * rp**3)))
        theta = math.acos(c3) / 3.0
        return [
            complex(shift + 2.0 * rp * math.cos(theta - 2.0 * math.pi * k / 3.0), 0.0)
            for k in range(3)
        ]

    sd = math.sqrt(disc)
    half = -q / 2.0
    cube = half + sd if abs(half + sd) >= abs(half - sd) else half - sd
    a = math.copysign(abs(cube) ** (1.0 / 3.0), cube)
    b = -p / (3.0 * a) if a != 0.0 else 0.0
    re = shift - (a + b) / 2.0
    im = (math.sqrt(3.0) / 2.0) * (a - b)
    return [complex(shift + a + b, 0.0), complex(re, im), complex(re, -im)]


def _polish_and_project(
    roots: list[complex], e1: float, e2: float, e3: float
) -> tuple[complex, complex, complex]:
    polished = []
    for r in roots:
        for _ in range(2):
            f = ((r - e1) * r + e2) * r - e3
            fp = (3.0 * r - 2.0 * e1) * r + e2
            if fp == 0.0:
                break
            r = r - f / fp
        polished.append(r)
    # real coefficients: force either all-real roots or one exact conjugate pair
    polished.sort(key=lambda r: r.imag)
    lo, mid, hi = polished
    if lo.imag == 0.0 and hi.imag == 0.0:
        trio = [complex(lo.real, 0.0), complex(mid.real, 0.0), complex(hi.real, 0.0)]
    else:
        pair = 0.5 * (hi + lo.conjugate())
        trio = [complex(mid.real, 0.0), pair, pair.conjugate()]
    trio.sort(key=lambda r: (r.real, r.imag))
    return tuple(trio)


def _symmetric_residual(
    trio: tuple[complex, complex, complex], e1: float, e2: float, e3: float
) -> float:
    r1, r2, r3 = trio
    s1 = r1 + r2 + r3
    s2 = r1 * r2 + r1 * r3 + r2 * r3
    s3 = r1 * r2 * r3
    scale = max(abs(e1), abs(e2) ** 0.5, abs(e3) ** (1.0 / 3.0))
    d1 = max(abs(e1), scale, 1e-300)
    d2 = max(abs(e2), scale**2, 1e-300)
    d3 = max(abs(e3), scale**3, 1e-300)
    return max(abs(s1 - e1) / d1, abs(s2 - e2) / d2, abs(s3 - e3) / d3)


def roots_from_symmetric(e1: float, e2: float, e3: float) -> CubicRoots:
    """Recover {a, b, c} from a+b+c, ab+ac+bc and abc.

    The roots solve x^3 - e1 x^2 + e2 x - e3 = 0.  A closed-form solution
    is refined by two Newton passes; if the reconstructed symmetric
    functions still disagree with the inputs beyond 1e-10 relative, an
    eigenvalue-based fallback is tried before giving up.
    """
    e1v = _require_real("e1", e1)
    e2v = _require_real("e2", e2)
    e3v = _require_real("e3", e3)

    trio = _polish_and_project(_cubic_initial(e1v, e2v, e3v), e1v, e2v, e3v)
    residual = _symmetric_residual(trio, e1v, e2v, e3v)
    if residual > _RESIDUAL_LIMIT:
        alt = _polish_and_project(
            list(np.roots([1.0, -e1v, e2v, -e3v]).astype(complex)), e1v, e2v, e3v
        )
        alt_residual = _symmetric_residual(alt, e1v, e2v, e3v)
        if alt_residual < residual:
            trio, residual = alt, alt_residual
    return CubicRoots(roots=trio, residual=residual)


# ---------------------------------------------------------------------------
# Poisson lower tail
# ---------------------------------------------------------------------------

_GAMMA_EPS = 1e-16
_GAMMA_MAX_ITER = 10_000_000
_RECURSION_MEAN_LIMIT = 600.0


def _upper_gamma_regularized(a: float, x: float) -> float:
    """Q(a, x) for a >= 1 integer-valued, x > 0, via series or Lentz fraction."""
    lg = math.lgamma(a)
    if x < a + 1.0:
        ap = a
        delt = 1.0 / a
        total = delt
        for _ in range(_GAMMA_MAX_ITER):
            ap += 1.0
            delt *= x / ap
            total += delt
            if abs(delt) < abs(total) * _GAMMA_EPS:
                p = total * math.exp(-x + a * math.log(x) - lg)
                return min(1.0, max(0.0, 1.0 - p))
        raise NumericalFailureError("incomplete gamma series did not converge")
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delt = d * c
        h *= delt
        if abs(delt - 1.0) < _GAMMA_EPS:
            q = h * math.exp(-x + a * math.log(x) - lg)
            return min(1.0, max(0.0, q))
    raise NumericalFailureError("incomplete gamma fraction did not converge")


def poisson_cdf_below(mean: float, xi: int) -> float:
    """Pr(N < xi) for N Poisson-distributed with the given mean."""
    mv = _require_real("mean", mean)
    if mv < 0.0:
        raise InvalidArgumentError(f"mean must be non-negative, got {mv!r}")
    try:
        xv = int(xi)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"xi must be an integer, got {xi!r}") from exc
    if xv != xi:
        raise InvalidArgumentError(f"xi must be an integer, got {xi!r}")
    if xv < 0:
        raise InvalidArgumentError(f"xi must be non-negative, got {xv}")

    if xv == 0:
        return 0.0
    if mv == 0.0:
        return 1.0
    if mv >= _RECURSION_MEAN_LIMIT:
        return _upper_gamma_regularized(float(xv), mv)
    if xv - 1 >= mv:
        # the upper tail is the smaller piece; summing it and taking the
        # complement keeps results near 1 accurate and monotone
        log_head = -mv + xv * math.log(mv) - math.lgamma(xv + 1.0)
        term = math.exp(log_head)
        if term == 0.0:
            return 1.0
        total = term
        w = xv
        while True:
            w += 1
            term *= mv / w
            total += term
            # the underflow test must come first: with a subnormal head
            # term, total * 1e-18 rounds to 0.0 and the comparison alone
            # would never trigger
            if term == 0.0 or term < total * 1e-18:
                break
        return max(0.0, min(1.0, 1.0 - total))
    # lower tail; at most mean + 1 terms because xi - 1 < mean here
    term = math.exp(-mv)
    total = term
    for w in range(1, xv):
        term *= mv / w
        total += term
    return min(total, 1.0)


def _poisson_cdf_below_grid(means: np.ndarray, xi: int) -> np.ndarray:
    """Vectorised twin of poisson_cdf_below, mirroring its tail selection;
    means must stay below the scalar recursion limit so both paths share
    one algorithm."""
    means = np.asarray(means, dtype=float)
    if means.size and float(np.max(means)) >= _RECURSION_MEAN_LIMIT:
        raise NumericalFailureError(
            "vectorised Poisson recursion is limited to means below "
            f"{_RECURSION_MEAN_LIMIT:g}"
        )
    xi = int(xi)
    if xi <= 0:
        return np.zeros(means.shape)
    out = np.empty(means.shape)

    lower = means > xi - 1
    if np.any(lower):
        ml = means[lower]
        term = np.exp(-ml)
        total = term.copy()
        for w in range(1, xi):
            term = term * (ml / w)
            total += term
        out[lower] = np.minimum(total, 1.0)

    if np.any(~lower):
        mu = means[~lower]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_head = -mu + xi * np.log(mu) - math.lgamma(xi + 1.0)
        term = np.where(mu > 0.0, np.exp(log_head), 0.0)
        total = term.copy()
        w = xi
        while np.any(term > total * 1e-18):
            w += 1
            term = term * (mu / w)
            total += term
        out[~lower] = np.clip(1.0 - total, 0.0, 1.0)
    return out
