"""Interface quantities Y = y'(0)/y(0) and the dispersion function F(c, k, eps).

    F = eps*(U+'(0) d+ - Y+ d+^2) - U-'(0) d- + Y- d-^2 - (g(1-eps) + sigma k^2/rho-)

with d(side) = U(side)(0) - c. Zeros of F in c at fixed (k, eps) are the modes.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Sequence

import numpy as np
from scipy import integrate

from .errors import EndpointUndefinedError, InputError, QuadratureError, YPoleError
from .profile import LOWER, UPPER, InterfaceConfig, ShearProfile, critical_layer
from .rayleigh import (
    SPLIT_DELTA,
    LayerIntegral,
    critical_interface,
    integrate_layer,
    integrate_layer_batch,
    needs_critical_path,
    solve_split,
)

POLE_TOL = 1e-8
CRITICAL_LOWER = "critical_lower"
CRITICAL_UPPER = "critical_upper"
NEAR_Y_POLE = "near_Y_pole"


def _sign(side: str) -> int:
    return 1 if side == LOWER else -1


def layer_data(side: str, c: complex, k: float, cfg: InterfaceConfig) -> LayerIntegral:
    """Shooting data for one side; real c in a curved range takes the c + i0 limit."""
    profile = cfg.profile(side)
    c = complex(c)
    if needs_critical_path(profile, c):
        return critical_interface(profile, c, k)
    return integrate_layer(profile, c, k)


def _check_endpoint(profile: ShearProfile, c: complex):
    if c.imag == 0.0 and c.real == profile.interface_value:
        raise EndpointUndefinedError(f"Y({profile.side}) undefined at c = U(0) = {c.real}")


def Y(side: str, c: complex, k: float, cfg: InterfaceConfig, pole_tol: float = POLE_TOL) -> complex:
    """y'(0)/y(0) of the fundamental solution; one-sided limit from c_I > 0 on the range."""
    profile = cfg.profile(side)
    c = complex(c)
    _check_endpoint(profile, c)
    li = layer_data(side, c, k, cfg)
    if li.pole_ratio <= pole_tol:
        raise YPoleError(f"|y(0)| below pole tolerance for {side} side at c={c}, k={k}", y0=li.y0)
    return complex(li.Y)


def dY_dc(side: str, c: complex, k: float, cfg: InterfaceConfig) -> complex:
    li = layer_data(side, c, k, cfg)
    return _sign(side) * li.int_cy2


def dY_dK(side: str, c: complex, k: float, cfg: InterfaceConfig) -> complex:
    li = layer_data(side, c, k, cfg)
    return _sign(side) * li.int_y2


def Y_imag_formula(side: str, c: float, k: float, cfg: InterfaceConfig) -> float:
    """Imaginary part of Y on the open range from the critical-layer value of y.

    Lower side: pi U''(x_c) y(x_c)^2 / (|U'(x_c)| |y(0)|^2); the upper side has the
    opposite sign. y is obtained by the split (Frobenius) route, independent of the
    complex-offset extrapolation used by :func:`Y`.
    """
    profile = cfg.profile(side)
    c = float(c)
    xc = critical_layer(profile, c)
    if xc is None:
        raise InputError(f"c={c} outside the {side} range")
    _, d1, d2 = profile._eval(xc)
    if d2 == 0.0 or profile.linear:
        return 0.0
    sp = solve_split(profile, c, k)
    y0 = sp.interface.y0
    if abs(y0) == 0.0:
        raise YPoleError("y(0) vanishes", y0=y0)
    return _sign(side) * math.pi * d2 * sp.y_xc ** 2 / (abs(d1) * abs(y0) ** 2)


def _coth_term(side: str, k: float, h: float) -> float:
    if k == 0.0:
        return _sign(side) / h
    return _sign(side) * k / math.tanh(k * h)


class _CauchyDensity:
    """Interpolant of U''(x) y_x(x)^2 / |y_x(0)|^2, with y_x solved at c' = U(x).

    The density has x log x type behaviour at the layer ends, so it is sampled on Chebyshev
    points of a graded variable t with x = x0 + (x1 - x0) t^3 / (t^3 + (1 - t)^3), which
    smooths those end singularities. The split route needs x_c away from the layer ends,
    so [x0, x1] is the domain shrunk by a few split offsets; the thin end strips reuse the
    end values.
    """

    def __init__(self, profile: ShearProfile, k: float, n: int):
        lo, hi = profile.domain
        pad = 4 * SPLIT_DELTA * profile.depth
        self.x0, self.x1 = lo + pad, hi - pad
        t = 0.5 + 0.5 * np.cos(np.pi * (np.arange(n) + 0.5) / n)
        phi = np.zeros(n)
        for i, x in enumerate(self._x(t)):
            U, _, d2 = profile._eval(float(x))
            if d2 != 0.0:
                sp = solve_split(profile, U, k)
                phi[i] = d2 * sp.y_xc ** 2 / abs(sp.interface.y0) ** 2
        self.cheb = np.polynomial.Chebyshev.fit(t, phi, n - 1, domain=[0.0, 1.0])

    def _x(self, t):
        return self.x0 + (self.x1 - self.x0) * t ** 3 / (t ** 3 + (1 - t) ** 3)

    def _dx(self, t):
        d = t ** 3 + (1 - t) ** 3
        return (self.x1 - self.x0) * 3.0 * t * t * (1 - t) ** 2 / (d * d)

    def _t(self, x: float) -> float:
        psi = min(max((x - self.x0) / (self.x1 - self.x0), 0.0), 1.0)
        if psi == 0.0 or psi == 1.0:
            return psi
        q = (psi / (1.0 - psi)) ** (1.0 / 3.0)
        return q / (1.0 + q)

    def cauchy(self, profile: ShearProfile, c: complex, edges: Sequence[float]) -> complex:
        """int over the layer of density / (U - c) dx, integrated in the graded variable."""
        lo, hi = profile.domain
        ts = sorted({self._t(x) for x in edges} | {0.0, 1.0})
        out = 0j
        for part in ("real", "imag"):
            if part == "imag" and not c.imag:
                break

            def f(t):
                x = float(self._x(t))
                return getattr(self.cheb(t) * self._dx(t) / (profile._eval(x)[0] - c), part)

            def strip(x, end):
                return getattr(self.cheb(end) / (profile._eval(x)[0] - c), part)

            with warnings.catch_warnings():
                # interpolation noise can stall quad at epsrel 1e-12; the caller's doubling
                # loop is what decides convergence
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val = _piecewise_quad(f, ts, epsrel=1e-12)
                val += integrate.quad(strip, lo, self.x0, args=(0.0,), epsrel=1e-10)[0]
                val += integrate.quad(strip, self.x1, hi, args=(1.0,), epsrel=1e-10)[0]
            out += val if part == "real" else 1j * val
        return out


@lru_cache(maxsize=64)
def _cauchy_density(profile: ShearProfile, k: float, n: int) -> _CauchyDensity:
    return _CauchyDensity(profile, k, n)


def _geometric_edges(profile: ShearProfile, c: complex) -> list:
    """Breakpoints over the layer shrinking geometrically towards the end where |U - c| is smallest."""
    lo, hi = profile.domain
    d_lo, d_hi = abs(profile._eval(lo)[0] - c), abs(profile._eval(hi)[0] - c)
    near, far = (lo, hi) if d_lo < d_hi else (hi, lo)
    span = abs(profile._eval(far)[0] - profile._eval(near)[0])
    rel = min(d_lo, d_hi) / span if span > 0 else 1.0
    levels = int(min(16, max(0, math.ceil(-math.log10(max(rel, 1e-300))) + 1)))
    return [near + (far - near) * 10.0 ** -j for j in range(0, levels + 1)] + [near]


def _piecewise_quad(fn, edges, epsabs=0.0, epsrel=1e-13) -> float:
    return sum(integrate.quad(fn, min(x0, x1), max(x0, x1), epsabs=epsabs, epsrel=epsrel, limit=200)[0]
               for x0, x1 in zip(edges[:-1], edges[1:]))


def Y_cauchy(
    side: str,
    c: complex,
    k: float,
    cfg: InterfaceConfig,
    n_start: int = 16,
    rtol: float = 1e-8,
    max_n: int = 256,
) -> complex:
    """Y from the Cauchy-integral representation over the velocity range.

    Y = (1/pi) int Y_I(c') / (c' - c) dc' +/- k coth(k h), with Y_I the imaginary part on
    the range. Substituting c' = U(x) removes |U'|, leaving

        Y = +/- [int_layer U''(x) y_x(x)^2 / (|y_x(0)|^2 (U(x) - c)) dx + k coth(k h)]

    (+ lower, - upper) where y_x is the split-route solution at c' = U(x). The smooth
    density is interpolated on Chebyshev points, doubling their number until successive
    integrals agree to ``rtol``; the Cauchy factor is then integrated adaptively.
    """
    profile = cfg.profile(side)
    c = complex(c)
    lo_r, hi_r = profile.value_range()
    if c.imag == 0.0 and lo_r <= c.real <= hi_r:
        raise InputError("Y_cauchy needs c outside the closed range")
    base = _coth_term(side, abs(k), profile.depth)
    if profile.linear:
        return complex(base)
    s = _sign(side)
    k = abs(float(k))
    edges = _geometric_edges(profile, c)

    def estimate(n):
        return s * _cauchy_density(profile, k, n).cauchy(profile, c, edges)

    n = n_start
    prev = estimate(n)
    while n < max_n:
        n *= 2
        cur = estimate(n)
        if abs(cur - prev) <= rtol * max(abs(cur + base), 1e-300):
            return cur + base
        prev = cur
    raise QuadratureError(f"Cauchy integral not converged with {n} interpolation points")


# ---------------------------------------------------------------------------
# k = 0 closed forms


def _inv_sq_integral(profile: ShearProfile, c: complex) -> complex:
    # pieces shrink geometrically towards the endpoint where |U - c| is smallest
    edges = _geometric_edges(profile, c)

    def part(fn, epsabs=0.0):
        return _piecewise_quad(fn, edges, epsabs)

    re = part(lambda x: ((profile._eval(x)[0] - c) ** -2).real)
    if complex(c).imag:
        # the imaginary part may nearly cancel; resolve it relative to the real part
        im = part(lambda x: ((profile._eval(x)[0] - c) ** -2).imag, 1e-15 * abs(re))
    else:
        im = 0.0
    return complex(re, im)


def inv_sq_integral(profile: ShearProfile, c: complex) -> complex:
    """int over the layer of (U - c)^(-2), for c off the closed range."""
    return _inv_sq_integral(profile, complex(c))


def Y_k0(side: str, c: complex, cfg: InterfaceConfig) -> complex:
    """Closed form of Y at k = 0.

    Off the range: U'(0)/(U(0)-c) +/- 1/((U(0)-c)^2 int (U-c)^-2), with + for the lower
    and - for the upper side. At c = U(wall): U'(0)/(U(0)-c).
    """
    profile = cfg.profile(side)
    c = complex(c)
    _check_endpoint(profile, c)
    U0, d1_0, _ = profile._eval(0.0)
    d = U0 - c
    if c.imag == 0.0 and c.real == profile.wall_value:
        return d1_0 / d
    lo_r, hi_r = profile.value_range()
    if c.imag == 0.0 and lo_r <= c.real <= hi_r and not profile.linear:
        raise InputError("k=0 closed form needs c off the range or at the wall value")
    return d1_0 / d + _sign(side) / (d * d * _inv_sq_integral(profile, c))


def y_k0(side: str, c: float, cfg: InterfaceConfig, x2) -> np.ndarray:
    """Closed-form fundamental solution at k = 0 (c off the range or at the wall value)."""
    profile = cfg.profile(side) if isinstance(cfg, InterfaceConfig) else cfg
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    Uw, d1w, _ = profile._eval(profile.wall)
    if c == Uw:
        return np.array([(profile._eval(x)[0] - Uw) / d1w for x in x2])
    out = []
    for x in x2:
        a, b = sorted((profile.wall, float(x)))
        I, _ = integrate.quad(lambda s: (profile._eval(s)[0] - c) ** -2, a, b, epsabs=0.0, epsrel=1e-13)
        Ux = profile._eval(float(x))[0]
        # lower: (U(x)-c)(U(-h)-c) int_{-h}^x ; upper: -(U(h)-c)(U(x)-c) int_x^h
        out.append(_sign(profile.side) * (Ux - c) * (Uw - c) * I)
    return np.array(out)


# ---------------------------------------------------------------------------
# the dispersion function


@dataclass
class DispersionPoint:
    c: complex
    k: float
    eps: float
    F: complex
    dF_dc: complex
    dF_dK: complex
    dF_deps: complex
    y_minus_0: complex
    y_plus_0: complex
    flags: FrozenSet[str] = field(default_factory=frozenset)
    Y_minus: complex = complex("nan")
    Y_plus: complex = complex("nan")
    # pole-free surrogate F * y+(0) * y-(0) * exp(-|k|(h+ + h-))
    G: complex = complex("nan")

    def conjugate(self) -> "DispersionPoint":
        cj = np.conj
        return DispersionPoint(
            complex(cj(self.c)), self.k, self.eps, complex(cj(self.F)), complex(cj(self.dF_dc)),
            complex(cj(self.dF_dK)), complex(cj(self.dF_deps)), complex(cj(self.y_minus_0)),
            complex(cj(self.y_plus_0)), self.flags, complex(cj(self.Y_minus)),
            complex(cj(self.Y_plus)), complex(cj(self.G)),
        )


def check_eps(eps: float) -> float:
    eps = float(eps)
    if not math.isfinite(eps) or eps < 0:
        raise InputError(f"eps must be finite and >= 0, got {eps}")
    if eps > 1:
        warnings.warn("eps > 1: the semicircle hypothesis may fail for small k", RuntimeWarning, stacklevel=3)
    return eps


class _Side:
    """Per-side contribution. ``skip`` marks c = U(0), where the Y-weighted terms vanish."""

    __slots__ = ("d", "d1", "li", "skip", "critical", "Y", "dYc", "dYK", "u0", "vs", "y0", "pole")

    def __init__(self, side, c, k, cfg, pole_tol, li=None):
        profile = cfg.profile(side)
        U0, d1, _ = profile._eval(0.0)
        self.d = U0 - c
        self.d1 = d1
        self.skip = self.d == 0
        self.critical = False
        self.pole = False
        if self.skip:
            self.li = None
            self.Y = self.dYc = self.dYK = 0j
            self.u0, self.vs, self.y0 = 1.0 + 0j, 0j, complex("nan")
            return
        self.critical = needs_critical_path(profile, c)
        if li is None:
            li = layer_data(side, c, k, cfg)
        self.li = li
        s = _sign(side)
        self.Y = li.Y
        self.dYc = s * li.int_cy2
        self.dYK = s * li.int_y2
        self.u0 = li.u0
        self.vs = s * li.v0
        self.y0 = li.y0
        self.pole = li.pole_ratio <= pole_tol


def evaluate(
    c: complex,
    k: float,
    eps: float,
    cfg: InterfaceConfig,
    pole_tol: float = POLE_TOL,
) -> DispersionPoint:
    """F and its derivatives at one point. c_I < 0 is obtained by conjugation."""
    c = complex(c)
    k = float(k)
    if not (cmath.isfinite(c) and math.isfinite(k)):
        raise InputError(f"non-finite input c={c}, k={k}")
    eps = check_eps(eps)
    if c.imag < 0:
        return evaluate(c.conjugate(), k, eps, cfg, pole_tol).conjugate()
    lo = _Side(LOWER, c, k, cfg, pole_tol)
    up = _Side(UPPER, c, k, cfg, pole_tol)
    return _assemble(c, k, eps, cfg, lo, up)


def _assemble(c, k, eps, cfg, lo: _Side, up: _Side) -> DispersionPoint:
    g, sig, rho = cfg.g, cfg.sigma, cfg.rho_minus
    K = k * k
    P = eps * up.d1 * up.d - lo.d1 * lo.d - (g * (1.0 - eps) + sig * K / rho)
    F = P - eps * up.d ** 2 * up.Y + lo.d ** 2 * lo.Y
    dFc = (
        eps * (-up.d1 + 2.0 * up.d * up.Y - up.dYc * up.d ** 2)
        + lo.dYc * lo.d ** 2
        - 2.0 * lo.d * lo.Y
        + lo.d1
    )
    dFK = lo.d ** 2 * lo.dYK - eps * up.d ** 2 * up.dYK - sig / rho
    dFe = -up.d ** 2 * up.Y + up.d1 * up.d + g
    G = P * up.u0 * lo.u0 - eps * up.d ** 2 * up.vs * lo.u0 + lo.d ** 2 * lo.vs * up.u0
    flags = set()
    if lo.critical:
        flags.add(CRITICAL_LOWER)
    if up.critical:
        flags.add(CRITICAL_UPPER)
    if lo.pole or up.pole:
        flags.add(NEAR_Y_POLE)
        F = complex("nan")
    return DispersionPoint(
        c, k, eps, complex(F), complex(dFc), complex(dFK), complex(dFe),
        complex(lo.y0), complex(up.y0), frozenset(flags), complex(lo.Y), complex(up.Y), complex(G),
    )


def _batchable(profile: ShearProfile, c: complex) -> bool:
    if needs_critical_path(profile, c):
        return False
    if c.imag != 0.0:
        return True
    lo, hi = profile.value_range()
    return not (lo <= c.real <= hi)


def evaluate_many(cs, ks, eps: float, cfg: InterfaceConfig, pole_tol: float = POLE_TOL) -> list:
    """:func:`evaluate` over many points, sharing one vectorised integration per side.

    ``ks`` is a scalar or a sequence matching ``cs``. Points on a real range fall back
    to the pointwise path.
    """
    eps = check_eps(eps)
    cs = [complex(c) for c in np.atleast_1d(cs)]
    ks = [float(x) for x in np.broadcast_to(np.asarray(ks, dtype=float), (len(cs),))]
    for c, k in zip(cs, ks):
        if not (cmath.isfinite(c) and math.isfinite(k)):
            raise InputError(f"non-finite input c={c}, k={k}")
    flip = [c.imag < 0 for c in cs]
    cu = [c.conjugate() if f else c for c, f in zip(cs, flip)]
    data = {}
    for side in (LOWER, UPPER):
        prof = cfg.profile(side)
        idx = [i for i, c in enumerate(cu) if _batchable(prof, c) and c != prof.interface_value]
        lis = integrate_layer_batch(prof, [cu[i] for i in idx], [ks[i] for i in idx])
        data[side] = dict(zip(idx, lis))
    out = []
    for i, (c, k) in enumerate(zip(cu, ks)):
        lo = _Side(LOWER, c, k, cfg, pole_tol, data[LOWER].get(i))
        up = _Side(UPPER, c, k, cfg, pole_tol, data[UPPER].get(i))
        pt = _assemble(c, k, eps, cfg, lo, up)
        out.append(pt.conjugate() if flip[i] else pt)
    return out


def F(c: complex, k: float, eps: float, cfg: InterfaceConfig) -> DispersionPoint:
    return evaluate(c, k, eps, cfg)


def F_value(c: complex, k: float, eps: float, cfg: InterfaceConfig) -> complex:
    return evaluate(c, k, eps, cfg).F


def dF_dc(c, k, eps, cfg) -> complex:
    return evaluate(c, k, eps, cfg).dF_dc


def dF_dK(c, k, eps, cfg) -> complex:
    return evaluate(c, k, eps, cfg).dF_dK


def dF_deps(c, k, cfg) -> complex:
    return evaluate(c, k, 0.0, cfg).dF_deps


def F_k0(c: complex, eps: float, cfg: InterfaceConfig) -> complex:
    """F at k = 0 assembled from the closed-form Y values (c off both ranges or at a wall value)."""
    c = complex(c)
    val = eps * cfg.upper._eval(0.0)[1] * (cfg.upper.interface_value - c)
    val -= cfg.lower._eval(0.0)[1] * (cfg.lower.interface_value - c)
    val -= cfg.g * (1.0 - eps)
    for side, w in ((UPPER, -eps), (LOWER, 1.0)):
        d = cfg.profile(side).interface_value - c
        if d != 0:
            val += w * d * d * Y_k0(side, c, cfg)
    return val


def kh_roots(k: float, eps: float, cfg: InterfaceConfig) -> tuple:
    """Roots of the constant-profile quadratic eps*A+(U+ - c)^2 + A- (U- - c)^2 = g(1-eps) + sigma k^2/rho-.

    A+ = k coth(k h+), A- = k coth(k h-). Used as an oracle for constant profiles.
    """
    Up, Um = cfg.upper.interface_value, cfg.lower.interface_value
    Ap = abs(_coth_term(UPPER, abs(k), cfg.h_plus))
    Am = abs(_coth_term(LOWER, abs(k), cfg.h_minus))
    R = cfg.g * (1 - eps) + cfg.sigma * k * k / cfg.rho_minus
    qa = eps * Ap + Am
    qb = -2 * (eps * Ap * Up + Am * Um)
    qc = eps * Ap * Up * Up + Am * Um * Um - R
    disc = cmath.sqrt(qb * qb - 4 * qa * qc)
    r1 = (-qb - disc) / (2 * qa)
    r2 = (-qb + disc) / (2 * qa)
    return tuple(sorted((complex(r1), complex(r2)), key=lambda z: (z.real, z.imag)))
