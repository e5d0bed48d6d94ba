"""Shear velocity profiles U(x2) of the two fluid layers and the interface parameters.

The lower fluid occupies [-h_minus, 0], the upper fluid [0, h_plus]. Profiles come in
three forms: polynomials, shifted exponentials a*exp(b*x) + c and tabulated samples
interpolated by a cubic spline.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AmbiguityError, DomainError, InputError

UPPER = "upper"
LOWER = "lower"

_DOMAIN_SLACK = 1e-12
_N_METADATA_SAMPLES = 1001


@dataclass(frozen=True)
class ShearProfile:
    """Velocity profile on one layer.

    Build with :meth:`poly`, :meth:`exp` or :meth:`table` rather than directly.
    ``params`` holds the form-specific data: coefficients low-to-high for ``poly``,
    ``(a, b, c)`` for ``exp`` and ``(xs, us)`` for ``table``.
    """

    side: str
    depth: float
    kind: str
    params: tuple
    smoothness_order: int = 3
    monotone_tol: float = 1e-10
    # derived metadata, filled in __post_init__
    monotone: bool = field(init=False, default=False)
    direction: int = field(init=False, default=0)
    convexity: int = field(init=False, default=0)
    linear: bool = field(init=False, default=False)
    _spline: Optional[tuple] = field(init=False, default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.side not in (UPPER, LOWER):
            raise InputError(f"side must be 'upper' or 'lower', got {self.side!r}")
        if not (self.depth > 0 and math.isfinite(self.depth)):
            raise InputError(f"layer depth must be positive and finite, got {self.depth}")
        if self.smoothness_order < 3:
            raise InputError("smoothness_order must be >= 3")
        if self.kind == "poly":
            coeffs = tuple(float(a) for a in self.params)
            if not coeffs or not all(math.isfinite(a) for a in coeffs):
                raise InputError("polynomial coefficients must be finite and non-empty")
            object.__setattr__(self, "params", coeffs)
            linear = all(a == 0.0 for a in coeffs[2:])
        elif self.kind == "exp":
            if len(self.params) != 3:
                raise InputError("exponential profile needs (a, b, c)")
            a, b, c = (float(p) for p in self.params)
            if not all(math.isfinite(p) for p in (a, b, c)):
                raise InputError("exponential parameters must be finite")
            object.__setattr__(self, "params", (a, b, c))
            linear = a == 0.0 or b == 0.0
        elif self.kind == "table":
            xs, us = self.params
            xs = np.asarray(xs, dtype=float)
            us = np.asarray(us, dtype=float)
            if xs.ndim != 1 or xs.shape != us.shape or xs.size < 4:
                raise InputError("table needs at least 4 matching (x2, U) samples")
            if not np.all(np.diff(xs) > 0):
                raise InputError("table samples must be strictly increasing in x2")
            lo, hi = self.domain
            tol = _DOMAIN_SLACK * self.depth
            if xs[0] > lo + tol or xs[-1] < hi - tol:
                raise InputError(f"table must cover the layer [{lo}, {hi}]")
            spline = CubicSpline(xs, us)
            object.__setattr__(self, "params", (tuple(xs), tuple(us)))
            # (breakpoints, coefficient rows) for fast scalar evaluation
            coef = spline.c.T.tolist()
            object.__setattr__(self, "_spline", (spline, list(xs), coef))
            linear = False
        else:
            raise InputError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "linear", linear)

        xg = np.linspace(*self.domain, _N_METADATA_SAMPLES)
        d1 = np.array([self.eval(x)[1] for x in xg])
        d2 = np.array([self.eval(x)[2] for x in xg])
        scale = np.max(np.abs(d1))
        if scale > 0:
            signs = np.sign(d1)
            monotone = bool(np.all(np.abs(d1) >= self.monotone_tol * scale) and abs(signs.sum()) == signs.size)
            direction = int(signs[0]) if monotone else 0
        else:
            monotone, direction = False, 0
        scale2 = np.max(np.abs(d2))
        if scale2 > 0 and (np.all(d2 > 0) or np.all(d2 < 0)):
            convexity = int(np.sign(d2[0]))
        else:
            convexity = 0
        object.__setattr__(self, "monotone", monotone)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "convexity", convexity)

    # -- constructors -----------------------------------------------------

    @classmethod
    def poly(cls, side: str, depth: float, coeffs: Sequence[float], **kw) -> "ShearProfile":
        return cls(side, float(depth), "poly", tuple(coeffs), **kw)

    @classmethod
    def exp(cls, side: str, depth: float, a: float, b: float, c: float, **kw) -> "ShearProfile":
        return cls(side, float(depth), "exp", (a, b, c), **kw)

    @classmethod
    def table(cls, side: str, depth: float, xs, us, **kw) -> "ShearProfile":
        return cls(side, float(depth), "table", (xs, us), **kw)

    @classmethod
    def constant(cls, side: str, depth: float, value: float) -> "ShearProfile":
        return cls.poly(side, depth, [value])

    # -- evaluation -------------------------------------------------------

    @property
    def domain(self) -> Tuple[float, float]:
        return (0.0, self.depth) if self.side == UPPER else (-self.depth, 0.0)

    @property
    def wall(self) -> float:
        """Depth of the rigid boundary (lid for the upper fluid, bed for the lower)."""
        return self.depth if self.side == UPPER else -self.depth

    def eval(self, x2: float) -> Tuple[float, float, float]:
        """Return (U, U', U'') at depth ``x2``."""
        lo, hi = self.domain
        tol = _DOMAIN_SLACK * self.depth
        if not (lo - tol <= x2 <= hi + tol):
            raise DomainError(f"x2={x2} outside {self.side} layer [{lo}, {hi}]")
        return self._eval(x2)

    def _eval(self, x):
        kind = self.kind
        if kind == "poly":
            u = d1 = d2 = 0.0
            for a in reversed(self.params):
                d2 = d2 * x + 2.0 * d1
                d1 = d1 * x + u
                u = u * x + a
            return u, d1, d2
        if kind == "exp":
            a, b, c = self.params
            e = a * math.exp(b * x)
            return e + c, b * e, b * b * e
        _, xs, coef = self._spline
        i = min(max(bisect.bisect_right(xs, x) - 1, 0), len(xs) - 2)
        t = x - xs[i]
        c3, c2, c1, c0 = coef[i]
        return (((c3 * t + c2) * t + c1) * t + c0, (3.0 * c3 * t + 2.0 * c2) * t + c1, 6.0 * c3 * t + 2.0 * c2)

    def values(self, x2) -> np.ndarray:
        """Vectorised U(x2)."""
        return np.array([self._eval(float(x)) for x in np.atleast_1d(x2)])

    # -- range and critical layers ---------------------------------------

    def value_range(self) -> Tuple[float, float]:
        lo, hi = self.domain
        u_lo, u_hi = self._eval(lo)[0], self._eval(hi)[0]
        if self.monotone or self.linear:
            return min(u_lo, u_hi), max(u_lo, u_hi)
        xs = np.linspace(lo, hi, 4001)
        us = self.values(xs)
        return float(us.min()), float(us.max())

    @property
    def interface_value(self) -> float:
        return self._eval(0.0)[0]

    @property
    def wall_value(self) -> float:
        return self._eval(self.wall)[0]

    def critical_layer(self, c: float, tol: float = 1e-13) -> Optional[float]:
        """Depth x_c with U(x_c) = c, or None when c lies outside the closed range."""
        return critical_layer(self, c, tol)


def eval_profile(profile: ShearProfile, x2: float) -> Tuple[float, float, float]:
    return profile.eval(x2)


def critical_layer(profile: ShearProfile, c: float, tol: float = 1e-13) -> Optional[float]:
    """Solve U(x_c) = c by safeguarded Newton with a bisection fallback."""
    c = float(c)
    lo, hi = profile.domain
    u_lo, u_hi = profile._eval(lo)[0], profile._eval(hi)[0]
    umin, umax = min(u_lo, u_hi), max(u_lo, u_hi)
    if not profile.monotone:
        if profile.linear and u_lo == u_hi:
            if c == u_lo:
                raise AmbiguityError("constant profile: every depth is a critical layer")
            return None
        vmin, vmax = profile.value_range()
        if vmin <= c <= vmax:
            raise AmbiguityError(f"{profile.side} profile is not monotone; critical layer ambiguous")
        return None
    if c < umin or c > umax:
        return None
    if c == u_lo:
        return lo
    if c == u_hi:
        return hi
    # bracket [a, b] with f(a) < 0 < f(b) where f = (U - c) * direction
    sgn = profile.direction
    a, b = lo, hi
    x = lo + (hi - lo) * (c - u_lo) / (u_hi - u_lo)
    for _ in range(200):
        u, d1, _ = profile._eval(x)
        if u == c:
            return x
        f = (u - c) * sgn
        if f < 0:
            a = x
        else:
            b = x
        step = (u - c) / d1 if d1 != 0 else 0.0
        xn = x - step
        if not (a < xn < b) or d1 == 0:
            xn = 0.5 * (a + b)
        if abs(xn - x) <= tol or b - a <= tol:
            x = xn
            break
        x = xn
    return x


@dataclass(frozen=True)
class InterfaceConfig:
    """Physical parameters of the two-fluid interface problem (SI units)."""

    rho_plus: float
    rho_minus: float
    g: float
    sigma: float
    upper: ShearProfile
    lower: ShearProfile

    def __post_init__(self):
        for name in ("rho_plus", "rho_minus", "g", "sigma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"{name} must be finite")
        if self.rho_minus <= 0:
            raise InputError("rho_minus must be positive")
        if self.rho_plus < 0:
            raise InputError("rho_plus must be non-negative")
        if self.g < 0:
            raise InputError("g must be non-negative")
        if self.sigma <= 0:
            raise InputError("sigma must be positive")
        if self.upper.side != UPPER or self.lower.side != LOWER:
            raise InputError("profiles must be given as (upper, lower)")

    @property
    def epsilon(self) -> float:
        return self.rho_plus / self.rho_minus

    @property
    def h_plus(self) -> float:
        return self.upper.depth

    @property
    def h_minus(self) -> float:
        return self.lower.depth

    def profile(self, side: str) -> ShearProfile:
        return self.upper if side == UPPER else self.lower

    @property
    def ab(self) -> Tuple[float, float]:
        return range_extrema(self)

    def replace(self, **changes) -> "InterfaceConfig":
        from dataclasses import replace

        return replace(self, **changes)


def range_extrema(cfg: InterfaceConfig) -> Tuple[float, float]:
    """(a, b): min and max of the union of both velocity ranges."""
    lo_m, hi_m = cfg.lower.value_range()
    lo_p, hi_p = cfg.upper.value_range()
    return min(lo_m, lo_p), max(hi_m, hi_p)


def warn_if_not_monotone(profile: ShearProfile) -> None:
    if not profile.monotone and not profile.linear:
        warnings.warn(f"{profile.side} profile is not monotone", RuntimeWarning, stacklevel=2)
