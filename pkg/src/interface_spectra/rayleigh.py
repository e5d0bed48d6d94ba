"""Fundamental solutions of the Rayleigh equation on one fluid layer.

    -y'' + (k^2 + U''/(U - c)) y = 0

seeded at the rigid wall with y = 0, y' = 1 (bed for the lower fluid, lid for the
upper fluid). The equation is integrated in the distance ``s`` from the wall, with the
growing exponential factored out:

    u = y e^{-|k| s},  v = (dy/ds) e^{-|k| s}

The integrals of y^2 and U''/(U-c)^2 y^2 over the layer are carried along as extra
components (also scaled by e^{-2|k| s}) so that Y = y'(0)/y(0) and the normalised
integrals needed for dY/dc and dY/dK never overflow, even for |k| of order 10^4.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import ode

from .errors import (
    CriticalLayerConvergenceError,
    InputError,
    SingularIntegrationError,
)
from .profile import LOWER, ShearProfile, critical_layer

RTOL = 1e-11
ATOL = 1e-15
MAX_STEPS = 200_000
NEAR_AXIS = 1e-4  # relative to range width; closer c_I uses the offset extrapolation
BETA_SEQ = (1e-3, 1e-4, 1e-5)
JUMP_TOL = 1e-3
N_SAMPLES = 512
SERIES_START = 1e-8  # relative to layer depth, for a critical layer sitting on the wall
SPLIT_DELTA = 1e-5  # relative to layer depth, gap left around x_c by the split route


@dataclass
class LayerIntegral:
    """Scale-free interface data of one shooting run.

    ``Y`` is y'(0)/y(0) with the derivative taken in x2. ``int_y2`` and ``int_cy2`` are
    the integrals of y^2 and U''/(U-c)^2 y^2 over the layer divided by y(0)^2.
    ``log_scale`` is |k| h: the true y(0) equals ``u0 * exp(log_scale)``.
    """

    c: complex
    k: float
    u0: complex
    v0: complex
    J1: complex
    J2: complex
    log_scale: float
    peak: float  # max over checkpoints of |y| * exp(-log_scale)
    side: str

    @property
    def sign(self) -> int:
        return 1 if self.side == LOWER else -1

    @property
    def Y(self) -> complex:
        return self.sign * self.v0 / self.u0

    @property
    def int_y2(self) -> complex:
        return self.J1 / (self.u0 * self.u0)

    @property
    def int_cy2(self) -> complex:
        return self.J2 / (self.u0 * self.u0)

    @property
    def y0(self) -> complex:
        return self.u0 * _safe_exp(self.log_scale)

    @property
    def yprime0(self) -> complex:
        return self.sign * self.v0 * _safe_exp(self.log_scale)

    @property
    def pole_ratio(self) -> float:
        """|y(0)| / max|y| over the layer."""
        return abs(self.u0) / self.peak if self.peak > 0 else 0.0


def _safe_exp(x):
    return math.exp(x) if x < 700 else math.inf


@dataclass
class RayleighFundamental:
    """A fundamental solution sampled across one layer."""

    side: str
    c: complex
    k: float
    x2: np.ndarray
    y: np.ndarray
    yprime: np.ndarray
    y0: complex
    yprime0: complex
    xc: Optional[float] = None
    beta_used: Optional[float] = None
    error_estimate: float = float("nan")
    interface: Optional[LayerIntegral] = field(default=None, repr=False)

    @property
    def samples(self):
        return list(zip(self.x2, self.y, self.yprime))

    @property
    def Y(self) -> complex:
        return self.interface.Y if self.interface is not None else self.yprime0 / self.y0


# ---------------------------------------------------------------------------
# core integrator


class _Layer:
    """Coefficient evaluation on one layer in the wall distance s."""

    def __init__(self, profile: ShearProfile, c: complex, k: float):
        self.profile = profile
        self.c = complex(c)
        self.k = float(k)
        self.kappa = abs(float(k))
        self.K = float(k) * float(k)
        self.H = profile.depth
        self.orient = 1.0 if profile.side == LOWER else -1.0
        self.x_wall = profile.wall
        self.linear = profile.linear
        self._eval = profile._eval

    def x_of(self, s):
        return self.x_wall + self.orient * s

    def rhs(self, s, z):
        x = self.x_wall + self.orient * s
        u = complex(z[0], z[1])
        v = complex(z[2], z[3])
        J1 = complex(z[4], z[5])
        J2 = complex(z[6], z[7])
        kap = self.kappa
        uu = u * u
        if self.linear:
            q = self.K
            r2 = 0.0
        else:
            U, _, Upp = self._eval(x)
            if Upp == 0.0:
                q = self.K
                r2 = 0.0
            else:
                r1 = Upp / (U - self.c)
                q = self.K + r1
                r2 = r1 / (U - self.c)
        du = v - kap * u
        dv = q * u - kap * v
        dJ1 = uu - 2.0 * kap * J1
        dJ2 = r2 * uu - 2.0 * kap * J2
        return [du.real, du.imag, dv.real, dv.imag, dJ1.real, dJ1.imag, dJ2.real, dJ2.imag]


def _pack(u, v, J1, J2):
    return [u.real, u.imag, v.real, v.imag, J1.real, J1.imag, J2.real, J2.imag]


def _unpack(z):
    return complex(z[0], z[1]), complex(z[2], z[3]), complex(z[4], z[5]), complex(z[6], z[7])


def _wall_start(layer: _Layer):
    """Initial state; uses a Frobenius series when c equals the wall velocity."""
    s0 = 0.0
    u = 0j
    v = 1.0 + 0j
    J1 = 0j
    J2 = 0j
    prof = layer.profile
    if not layer.linear and layer.c.imag == 0.0:
        Uw, d1, d2 = prof._eval(layer.x_wall)
        if Uw == layer.c.real and d2 != 0.0:
            if d1 == 0.0:
                raise SingularIntegrationError("critical layer on the wall with U'=0", xc=layer.x_wall)
            dUds = layer.orient * d1
            alpha = d2 / dUds
            s0 = SERIES_START * layer.H
            y = s0 + 0.5 * alpha * s0 * s0
            yp = 1.0 + alpha * s0
            damp = math.exp(-layer.kappa * s0)
            u = complex(layer.orient * y * damp)
            v = complex(yp * damp)
            J1 = complex(s0 ** 3 / 3.0 * damp * damp)
            J2 = complex(d2 / (dUds * dUds) * s0 * damp * damp)
    # derivative in s: dy/ds = orient * dy/dx2, seeded dy/dx2 = 1 at the wall
    return s0, u, layer.orient * v, J1, J2


class _Shooter:
    def __init__(self, layer: _Layer, rtol=RTOL, atol=ATOL):
        self.layer = layer
        self.solver = ode(layer.rhs).set_integrator(
            "dopri5", rtol=rtol, atol=atol, nsteps=MAX_STEPS, verbosity=-1
        )

    def start(self, s0, state):
        self.solver.set_initial_value(_pack(*state), s0)

    def advance(self, s):
        if s == self.solver.t:
            return _unpack(self.solver.y)
        z = self.solver.integrate(s)
        if not self.solver.successful() or not np.all(np.isfinite(z)):
            raise SingularIntegrationError(
                f"Rayleigh integration failed at s={self.solver.t:.6g} "
                f"(c={self.layer.c}, k={self.layer.k})",
                xc=_xc_or_none(self.layer),
            )
        return _unpack(z)

    @property
    def s(self):
        return self.solver.t


def _xc_or_none(layer):
    try:
        return critical_layer(layer.profile, layer.c.real)
    except Exception:
        return None


def _coefficient_check(profile: ShearProfile, c: complex, k: float):
    if not (cmath.isfinite(c) and math.isfinite(k)):
        raise InputError(f"non-finite input c={c}, k={k}")


def _sq_integral_factor(x: float) -> float:
    """e^{-2x} (sinh(2x)/(2x) - 1) / (2x^2), the scaled integral of y^2 over a U''=0 layer over H^3."""
    if x < 0.5:
        # power series of sinh(2x)/(2x) - 1 avoids the cancellation at small x
        total, n, term = 0.0, 1, 1.0 / 3.0
        while term > 1e-18 * total or n == 1:
            total += term
            n += 1
            term = 2.0 ** (2 * n - 1) * x ** (2 * n - 2) / math.factorial(2 * n + 1)
        return math.exp(-2.0 * x) * total
    return (-math.expm1(-4.0 * x) / (4.0 * x) - math.exp(-2.0 * x)) / (2.0 * x * x)


def _linear_layer(profile: ShearProfile, c: complex, k: float) -> LayerIntegral:
    """Closed form for U'' = 0: y = sinh(|k| s)/|k| in the wall distance s."""
    H = profile.depth
    kap = abs(float(k))
    x = kap * H
    orient = 1.0 if profile.side == LOWER else -1.0
    u = orient * H * (-math.expm1(-2.0 * x) / (2.0 * x) if x > 0 else 1.0)
    v = orient * 0.5 * (1.0 + math.exp(-2.0 * x))
    J1 = H ** 3 * _sq_integral_factor(x)
    return LayerIntegral(complex(c), float(k), complex(u), complex(v), complex(J1), 0j, x, abs(u), profile.side)


def integrate_layer(
    profile: ShearProfile,
    c: complex,
    k: float,
    checkpoints: int = 8,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> LayerIntegral:
    """Shoot from the wall to the interface and return the scale-free interface data."""
    _coefficient_check(profile, c, k)
    if profile.linear:
        return _linear_layer(profile, c, k)
    layer = _Layer(profile, c, k)
    s0, u, v, J1, J2 = _wall_start(layer)
    sh = _Shooter(layer, rtol, atol)
    sh.start(s0, (u, v, J1, J2))
    H = layer.H
    kap = layer.kappa
    peak = 0.0
    for j in range(1, checkpoints + 1):
        s = H * j / checkpoints
        u, v, J1, J2 = sh.advance(s)
        peak = max(peak, abs(u) * math.exp(kap * (s - H)))
    return LayerIntegral(complex(c), float(k), u, v, J1, J2, kap * H, peak, profile.side)


def integrate_layer_batch(
    profile: ShearProfile,
    cs: Sequence[complex],
    ks: Sequence[float],
    checkpoints: int = 8,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> list:
    """:func:`integrate_layer` for many (c, k) pairs in one vectorised integration.

    The profile coefficients depend only on s, so they are evaluated once per stage
    for the whole batch. The error norm of the integrator is an RMS over all
    components, hence the tolerance is tightened by sqrt(N). Pairs needing a wall
    series start must go through :func:`integrate_layer`.
    """
    cs = np.asarray(cs, dtype=complex)
    ks = np.broadcast_to(np.asarray(ks, dtype=float), cs.shape).copy()
    n = cs.size
    if n == 0:
        return []
    if profile.linear:
        return [_linear_layer(profile, cs[i], ks[i]) for i in range(n)]
    orient = 1.0 if profile.side == LOWER else -1.0
    x_wall = profile.wall
    kap = np.abs(ks)
    K = ks * ks
    linear = profile.linear
    ev = profile._eval

    def rhs(s, z):
        Z = z.view(complex).reshape(4, n)
        u, v, J1, J2 = Z
        uu = u * u
        out = np.empty((4, n), dtype=complex)
        if linear:
            q = K
            r2 = 0.0
        else:
            U, _, Upp = ev(x_wall + orient * s)
            if Upp == 0.0:
                q = K
                r2 = 0.0
            else:
                r1 = Upp / (U - cs)
                q = K + r1
                r2 = r1 / (U - cs)
        out[0] = v - kap * u
        out[1] = q * u - kap * v
        out[2] = uu - 2.0 * kap * J1
        out[3] = r2 * uu - 2.0 * kap * J2
        return out.reshape(-1).view(float)

    z0 = np.zeros((4, n), dtype=complex)
    z0[1] = orient
    solver = ode(rhs).set_integrator(
        "dopri5", rtol=rtol / math.sqrt(n), atol=atol, nsteps=MAX_STEPS, verbosity=-1
    )
    solver.set_initial_value(z0.reshape(-1).view(float).copy(), 0.0)
    H = profile.depth
    peak = np.zeros(n)
    for j in range(1, checkpoints + 1):
        sj = H * j / checkpoints
        z = solver.integrate(sj)
        if not solver.successful() or not np.all(np.isfinite(z)):
            raise SingularIntegrationError(
                f"batched Rayleigh integration failed at s={solver.t:.6g}", xc=None
            )
        Z = z.view(complex).reshape(4, n)
        peak = np.maximum(peak, np.abs(Z[0]) * np.exp(kap * (sj - H)))
    Z = solver.y.view(complex).reshape(4, n)
    return [
        LayerIntegral(complex(cs[i]), float(ks[i]), Z[0, i], Z[1, i], Z[2, i], Z[3, i],
                      float(kap[i] * H), float(peak[i]), profile.side)
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# public solvers


def _side_profile(side, cfg_or_profile):
    if isinstance(cfg_or_profile, ShearProfile):
        return cfg_or_profile
    return cfg_or_profile.profile(side)


def in_closed_range(profile: ShearProfile, c: complex) -> bool:
    if c.imag != 0.0:
        return False
    lo, hi = profile.value_range()
    return lo <= c.real <= hi


def needs_critical_path(profile: ShearProfile, c: complex) -> bool:
    """c on or just above the range of a profile with U'' not identically zero.

    Real c at the wall value is regular (handled by the series start). For
    0 < c_I < NEAR_AXIS * width the direct integration is stiff, so the same offset
    extrapolation is used from c_I instead of from 0.
    """
    c = complex(c)
    if profile.linear or c.imag < 0:
        return False
    lo, hi = profile.value_range()
    if not (lo <= c.real <= hi):
        return False
    if c.imag == 0.0:
        return c.real != profile.wall_value
    return c.imag < NEAR_AXIS * max(hi - lo, 1e-300)


def sample_grid(profile: ShearProfile, n: int = N_SAMPLES, xc: Optional[float] = None) -> np.ndarray:
    """Wall distances s at which samples are recorded, refined 4x near a critical layer."""
    H = profile.depth
    s = np.linspace(0.0, H, n)
    if xc is not None:
        sc = abs(xc - profile.wall)
        w = 0.05 * H
        ds = H / (n - 1) / 4.0
        fine = np.arange(max(0.0, sc - w), min(H, sc + w) + ds / 2, ds)
        s = np.union1d(s, np.append(fine, sc))
    return s


def _sample_run(profile, c, k, s_grid, rtol=RTOL, atol=ATOL):
    layer = _Layer(profile, c, k)
    s0, u, v, J1, J2 = _wall_start(layer)
    sh = _Shooter(layer, rtol, atol)
    sh.start(s0, (u, v, J1, J2))
    kap = layer.kappa
    ys = np.empty(len(s_grid), dtype=complex)
    yps = np.empty(len(s_grid), dtype=complex)
    for i, s in enumerate(s_grid):
        if s < s0:
            # inside the series start interval
            ys[i] = 0.0 if s == 0 else layer.orient * s
            yps[i] = 1.0
            continue
        u, v, J1, J2 = sh.advance(s)
        scale = _safe_exp(kap * s)
        ys[i] = u * scale
        yps[i] = layer.orient * v * scale
    H = layer.H
    peak = float(np.max(np.abs(ys))) * _safe_exp(-kap * H) if kap * H < 700 else 0.0
    li = LayerIntegral(complex(c), float(k), u, v, J1, J2, kap * H, peak, profile.side)
    return ys, yps, li


def solve_fundamental(
    side: str,
    c: complex,
    k: float,
    cfg,
    n_samples: int = N_SAMPLES,
    rtol: float = RTOL,
    estimate_error: bool = True,
) -> RayleighFundamental:
    """Fundamental solution y(x2) on one layer for complex c.

    Real c inside the range of a curved profile is delegated to
    :func:`solve_fundamental_critical` (limit from c_I > 0).
    """
    profile = _side_profile(side, cfg)
    c = complex(c)
    _coefficient_check(profile, c, k)
    if needs_critical_path(profile, c):
        return solve_fundamental_critical(side, c.real, k, profile, n_samples=n_samples, rtol=rtol)
    xc = None
    if c.imag == 0.0 and in_closed_range(profile, c) and profile.monotone:
        xc = critical_layer(profile, c.real)
    s_grid = sample_grid(profile, n_samples, xc)
    ys, yps, li = _sample_run(profile, c, k, s_grid, rtol)
    err = float("nan")
    if estimate_error:
        li_coarse = integrate_layer(profile, c, k, rtol=rtol * 10)
        li_fine = integrate_layer(profile, c, k, rtol=rtol)
        err = abs(li_coarse.u0 - li_fine.u0) * _safe_exp(li.log_scale)
    x2 = profile.wall + (1.0 if profile.side == LOWER else -1.0) * s_grid
    order = np.argsort(x2)
    return RayleighFundamental(
        side=profile.side,
        c=c,
        k=float(k),
        x2=x2[order],
        y=ys[order],
        yprime=yps[order],
        y0=li.y0,
        yprime0=li.yprime0,
        xc=xc,
        beta_used=None,
        error_estimate=err,
        interface=li,
    )


def beta_offsets(profile: ShearProfile, beta_seq: Sequence[float] = BETA_SEQ) -> list:
    lo, hi = profile.value_range()
    width = hi - lo
    if width <= 0:
        width = 1.0
    return [b * width for b in beta_seq]


def richardson(values, ratio: float):
    """Linear-in-beta extrapolation of the last two entries; also returns the previous estimate."""
    v = [np.asarray(x) for x in values]
    last = (ratio * v[-1] - v[-2]) / (ratio - 1.0)
    if len(v) >= 3:
        prev = (ratio * v[-2] - v[-3]) / (ratio - 1.0)
    else:
        prev = v[-2]
    return last, prev


def _relative_gap(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def critical_interface(
    profile: ShearProfile,
    c: float,
    k: float,
    beta_seq: Sequence[float] = BETA_SEQ,
    jump_tol: float = JUMP_TOL,
    rtol: float = RTOL,
) -> LayerIntegral:
    """Interface data at c + i0 for real c in the range (Richardson over beta).

    A complex c with small c_I > 0 is handled the same way with offsets c_I + beta.
    """
    c = complex(c)
    betas = beta_offsets(profile, beta_seq)
    runs = [integrate_layer(profile, c + 1j * b, k, rtol=rtol) for b in betas]
    ratio = betas[0] / betas[1]
    # extrapolate the physically meaningful ratios, not the scaled raw state
    feats = [np.array([r.Y, r.int_y2, r.int_cy2, r.u0 / abs(r.u0) if r.u0 else 0, abs(r.u0)]) for r in runs]
    last, prev = richardson(feats, ratio)
    gap = _relative_gap(last[:1], prev[:1])
    if gap > 10 * jump_tol:
        raise CriticalLayerConvergenceError(
            f"beta extrapolation of Y not converged at c={c}, k={k}: relative gap {gap:.3g}"
        )
    Y, iy2, icy2 = last[0], last[1], last[2]
    ref = runs[-1]
    # rebuild a LayerIntegral consistent with the extrapolated ratios (u0 from the last run)
    u0_lim = (ratio * runs[-1].u0 - runs[-2].u0) / (ratio - 1.0)
    sign = 1 if profile.side == LOWER else -1
    li = LayerIntegral(
        c,
        float(k),
        u0_lim,
        sign * Y * u0_lim,
        iy2 * u0_lim * u0_lim,
        icy2 * u0_lim * u0_lim,
        ref.log_scale,
        ref.peak,
        profile.side,
    )
    li.extrapolation_gap = gap
    return li


def solve_fundamental_critical(
    side: str,
    c: float,
    k: float,
    cfg,
    beta_seq: Sequence[float] = BETA_SEQ,
    n_samples: int = N_SAMPLES,
    jump_tol: float = JUMP_TOL,
    rtol: float = RTOL,
) -> RayleighFundamental:
    """Limit lim_{beta->0+} y(c + i beta) for real c in the range, by Richardson extrapolation."""
    profile = _side_profile(side, cfg)
    c = float(np.real(c))
    xc = critical_layer(profile, c) if profile.monotone else None
    if xc is None and not profile.linear:
        raise InputError(f"c={c} is not in the range of the {profile.side} profile")
    betas = beta_offsets(profile, beta_seq)
    s_grid = sample_grid(profile, n_samples, xc)
    runs = [_sample_run(profile, complex(c, b), k, s_grid, rtol) for b in betas]
    ratio = betas[0] / betas[1]
    ys, ys_prev = richardson([r[0] for r in runs], ratio)
    yps, _ = richardson([r[1] for r in runs], ratio)
    # y' is log-singular at xc; judge convergence on y only
    gap = _relative_gap(ys, ys_prev)
    if gap > 10 * jump_tol:
        raise CriticalLayerConvergenceError(
            f"beta extrapolation of y not converged at c={c}, k={k}: relative gap {gap:.3g}"
        )
    li = critical_interface(profile, c, k, beta_seq, jump_tol, rtol)
    x2 = profile.wall + (1.0 if profile.side == LOWER else -1.0) * s_grid
    order = np.argsort(x2)
    return RayleighFundamental(
        side=profile.side,
        c=complex(c, 0.0),
        k=float(k),
        x2=x2[order],
        y=ys[order],
        yprime=yps[order],
        y0=complex(ys[-1]),
        yprime0=complex(yps[-1]),
        xc=xc,
        beta_used=betas[-1],
        error_estimate=gap * float(np.max(np.abs(ys))),
        interface=li,
    )


# ---------------------------------------------------------------------------
# validation route: split integration at the critical layer


@dataclass
class FrobeniusData:
    """Local expansion data at a critical layer, in the wall distance s."""

    s_c: float
    U1: float  # dU/ds
    alpha: float  # U'' / (dU/ds)
    q0: float  # regular part of the Rayleigh coefficient at s_c

    def phi1(self, t):
        a3 = (0.5 * self.alpha ** 2 + self.q0) / 6.0
        return t + 0.5 * self.alpha * t * t + a3 * t ** 3, 1.0 + self.alpha * t + 3.0 * a3 * t * t

    def phi2(self, t):
        al = self.alpha
        L = math.log(abs(t))
        d2 = 0.5 * al * al
        c2 = 0.5 * (self.q0 - 1.5 * al * al)
        val = 1.0 + al * t * L + t * t * (c2 + d2 * L)
        der = al * (L + 1.0) + 2.0 * c2 * t + d2 * (2.0 * t * L + t)
        return val, der


def frobenius_data(profile: ShearProfile, xc: float, k: float) -> FrobeniusData:
    orient = 1.0 if profile.side == LOWER else -1.0
    _, d1, d2 = profile._eval(xc)
    U1 = orient * d1
    # third derivative by a central difference of U'' (only enters at second order)
    h = 1e-4 * profile.depth
    lo, hi = profile.domain
    xa, xb = max(lo, xc - h), min(hi, xc + h)
    d3 = (profile._eval(xb)[2] - profile._eval(xa)[2]) / (xb - xa)
    U3 = orient * d3
    alpha = d2 / U1
    q0 = k * k + U3 / U1 - 0.5 * alpha * alpha
    return FrobeniusData(abs(xc - profile.wall), U1, alpha, q0)


def jump_coefficient(profile: ShearProfile, xc: float) -> float:
    """pi U''(x_c) / |U'(x_c)|."""
    _, d1, d2 = profile._eval(xc)
    return math.pi * d2 / abs(d1)


@dataclass
class SplitResult:
    interface: LayerIntegral
    y_xc: float
    A_before: float
    B: float
    A_after: complex


def solve_split(
    profile: ShearProfile,
    c: float,
    k: float,
    delta: float = SPLIT_DELTA,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> SplitResult:
    """Interface data for real c strictly inside the range, crossing x_c with the jump rule.

    The real solution is integrated up to a distance ``delta*H`` from the critical
    layer, matched to the local Frobenius pair, continued past x_c with the phi1
    coefficient shifted by i*pi*U''/|U'|*y(x_c), and integrated on to the interface.
    """
    c = float(c)
    xc = critical_layer(profile, c)
    if xc is None:
        raise InputError(f"c={c} outside the {profile.side} range")
    H = profile.depth
    fr = frobenius_data(profile, xc, k)
    dlt = delta * H
    if fr.s_c <= dlt or fr.s_c >= H - dlt:
        raise InputError("critical layer too close to a layer end for the split route")
    layer = _Layer(profile, complex(c), k)
    kap = layer.kappa
    sh = _Shooter(layer, rtol, atol)
    sh.start(0.0, (0j, layer.orient + 0j, 0j, 0j))
    s_left = fr.s_c - dlt
    u, v, J1, J2 = sh.advance(s_left)
    sc_l = math.exp(kap * s_left)
    y, yp = (u * sc_l).real, (layer.orient * v * sc_l).real
    # dy/ds from dy/dx2
    yps = layer.orient * yp
    p1, p1d = fr.phi1(-dlt)
    p2, p2d = fr.phi2(-dlt)
    det = p1 * p2d - p2 * p1d
    A = (y * p2d - p2 * yps) / det
    B = (p1 * yps - y * p1d) / det
    A_after = A + 1j * jump_coefficient(profile, xc) * B
    s_right = fr.s_c + dlt
    q1, q1d = fr.phi1(dlt)
    q2, q2d = fr.phi2(dlt)
    y_r = A_after * q1 + B * q2
    yps_r = A_after * q1d + B * q2d
    damp = math.exp(-kap * s_right)
    # the integrals over the excised interval are dropped: y^2 is bounded there and
    # U''/(U-c)^2 y^2 has a principal-value type singularity handled only by the beta route
    J1r = J1 * math.exp(-2 * kap * dlt) + (y * y) * 2 * dlt * damp * damp
    sh2 = _Shooter(layer, rtol, atol)
    sh2.start(s_right, (y_r * damp, yps_r * damp, J1r, 0j))
    u, v, J1, J2 = sh2.advance(H)
    li = LayerIntegral(complex(c), float(k), u, v, J1, complex(float("nan"), 0.0), kap * H, abs(u), profile.side)
    return SplitResult(li, B, A, B, A_after)


# ---------------------------------------------------------------------------
# diagnostics


def _regular_phi1(profile: ShearProfile, c: float, k: float, s_points, t0_rel=1e-6):
    """Real solution vanishing at the critical layer with unit slope in s, at wall distances s > s_c."""
    xc = critical_layer(profile, c)
    fr = frobenius_data(profile, xc, k)
    layer = _Layer(profile, complex(c), k)
    t0 = t0_rel * profile.depth
    p, pd = fr.phi1(t0)
    sh = _Shooter(layer, RTOL, ATOL)
    s0 = fr.s_c + t0
    kap = layer.kappa
    d = math.exp(-kap * s0)
    sh.start(s0, (complex(p * d), complex(pd * d), 0j, 0j))
    out = []
    for s in s_points:
        u, _, _, _ = sh.advance(s)
        out.append((u * math.exp(kap * s)).real)
    return np.array(out), fr


@dataclass
class JumpReport:
    xc: float
    measured: float  # jump of y_I' across x_c, in the x2 derivative
    predicted: float
    y_xc: float

    @property
    def relative_error(self) -> float:
        return abs(self.measured - self.predicted) / max(abs(self.predicted), 1e-300)


def measure_jump(fund: RayleighFundamental, profile: ShearProfile, window=(0.02, 0.2)) -> JumpReport:
    """Recover the jump of y_I' at x_c from sampled y_I beyond the critical layer.

    Past x_c (in the direction of integration) y_I solves the real Rayleigh equation
    with y_I(x_c) = 0, so y_I = J*phi1; J is fitted by least squares on a window.
    """
    if fund.xc is None:
        raise InputError("fundamental solution has no critical layer")
    orient = 1.0 if profile.side == LOWER else -1.0
    s = np.abs(fund.x2 - profile.wall)
    order = np.argsort(s)
    s = s[order]
    y = fund.y[order]
    fr = frobenius_data(profile, fund.xc, fund.k)
    H = profile.depth
    sel = (s > fr.s_c + window[0] * H) & (s < fr.s_c + window[1] * H)
    if sel.sum() < 3:
        sel = s > fr.s_c + 0.5 * (H - fr.s_c)
    phi, _ = _regular_phi1(profile, fund.c.real, fund.k, s[sel])
    yi = y[sel].imag
    J = float(np.dot(phi, yi) / np.dot(phi, phi))
    y_xc = float(np.interp(fr.s_c, s, y.real))
    predicted = jump_coefficient(profile, fund.xc) * y_xc
    return JumpReport(fund.xc, orient * J, orient * predicted, y_xc)


@dataclass
class AsymptoticReport:
    k: float
    literal: float  # deviation with the sinh(s / sqrt(k^2+1)) comparison function
    rescaled: float  # deviation from sinh(k s)/k, the exact U''=0 solution


def asymptotic_check(fund: RayleighFundamental, profile: Optional[ShearProfile] = None) -> AsymptoticReport:
    """Relative deviation of y from the constant-coefficient comparison function.

    ``literal`` uses |y/sqrt(k^2+1) - sinh(s/sqrt(k^2+1))| / sinh(s/sqrt(k^2+1));
    ``rescaled`` uses |y - sinh(k s)/k| / (sinh(k s)/k). Both are maxima over samples
    with s > 0, s the distance from the wall.
    """
    k = abs(fund.k)
    if k < 5:
        raise InputError("asymptotic_check needs |k| >= 5")
    wall = fund.x2[0] if fund.side == LOWER else fund.x2[-1]
    orient = 1.0 if fund.side == LOWER else -1.0
    s = np.abs(fund.x2 - wall)
    m = s > 0
    s, y = s[m], orient * fund.y[m]
    r = math.sqrt(k * k + 1.0)
    ref_lit = np.sinh(s / r)
    literal = float(np.max(np.abs(y / r - ref_lit) / ref_lit))
    # sinh(k s)/k with the growth factored out to avoid overflow
    ref = np.where(k * s > 20, 0.5 / k * np.exp(k * s), np.sinh(k * s) / k)
    rescaled = float(np.max(np.abs(y / ref - 1.0)))
    return AsymptoticReport(k, literal, rescaled)
