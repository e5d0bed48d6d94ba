"""Gravity thresholds, boundary-value wave numbers, c0 and the singular-mode exclusion test.

Write H(k) = F(a, k, eps) + g (1 - eps); H does not depend on g. Then

    g_* = max_k F(a, k, eps) + g = eps g + max_k H(k),

so g_* moves with g whenever eps > 0. The value of g at which g equals its own g_*
is H_max / (1 - eps); it is reported as ``threshold`` and is the number to compare g
against when asking whether F(a, ., eps) has zero, one or two roots in k.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import integrate, optimize

from .dispersion import evaluate, inv_sq_integral
from .errors import InputError
from .profile import InterfaceConfig, ShearProfile, range_extrema
from .spectrum import DEFAULT_TOL, Tolerances, boundary_values, in_union_range

K_REL_TOL = 1e-12


def _F_real(c: float, K: float, eps: float, cfg: InterfaceConfig):
    p = evaluate(c, math.sqrt(max(K, 0.0)), eps, cfg)
    return p


def _maximize_K(c: float, eps: float, cfg: InterfaceConfig):
    """Maximiser of F(c, sqrt(K), eps) over K >= 0 using dF/dK and concavity in K.

    dF/dK is decreasing in K, so the maximiser is K = 0 when dF/dK(0) <= 0 and the
    unique zero of dF/dK otherwise. The bracket [0, K_hi] doubles K_hi from 1.
    """
    d0 = _F_real(c, 0.0, eps, cfg).dF_dK.real
    if d0 <= 0:
        return 0.0
    K_hi = 1.0
    while _F_real(c, K_hi, eps, cfg).dF_dK.real > 0:
        K_hi *= 2.0
        if K_hi > 1e16:
            raise InputError("dF/dK does not change sign")
    return optimize.brentq(lambda K: _F_real(c, K, eps, cfg).dF_dK.real, 0.0, K_hi,
                           xtol=1e-300, rtol=K_REL_TOL, maxiter=200)


@dataclass
class GStar:
    c: float  # the boundary value maximised at (a for g_*)
    eps: float
    g: float  # gravity of the configuration
    value: float  # max_k F(c, k, eps) + g at this g
    k_max: float
    H_max: float  # max_k F(c, k, eps) + g (1 - eps), independent of g
    threshold: float  # H_max / (1 - eps): the g equal to its own g_*
    maximised_over: str = "k >= 0 at c = a"


def g_star(cfg: InterfaceConfig, eps: Optional[float] = None, c: Optional[float] = None,
           label: str = "k >= 0 at c = a") -> GStar:
    """max over k of F(c, k, eps) + g, with c = a by default."""
    eps = cfg.epsilon if eps is None else float(eps)
    a = range_extrema(cfg)[0] if c is None else float(c)
    K = _maximize_K(a, eps, cfg)
    p = _F_real(a, K, eps, cfg)
    value = p.F.real + cfg.g
    H = p.F.real + cfg.g * (1 - eps)
    thr = H / (1 - eps) if eps < 1 else math.inf
    return GStar(a, eps, cfg.g, value, math.sqrt(K), H, thr, label)


def g_sharp(cfg: InterfaceConfig) -> GStar:
    """g_* of the one-fluid problem: eps = 0, maximised over k at c = U-(-h-)."""
    return g_star(cfg, 0.0, cfg.lower.wall_value, "k >= 0 at c = U-(-h-), eps = 0")


@dataclass
class KStarRoots:
    v: float
    g: float
    eps: float
    kind: str  # none, tangent, pair, single, complex
    roots: List[float]
    k_max: float
    F_max: float


def k_star_roots(cfg: InterfaceConfig, eps: float, g: float, v: float,
                 tol: Tolerances = DEFAULT_TOL) -> KStarRoots:
    """Positive roots of k -> F(v, k, eps) at gravity g, using concavity in K = k^2.

    Two roots when F(v, k_max) > root_tol, one double root when |F(v, k_max)| <= root_tol.
    A boundary value where F is complex (it lies inside the other fluid's open range)
    yields kind 'complex' and no roots.
    """
    c2 = cfg.replace(g=float(g))
    K_max = _maximize_K(v, eps, c2)
    pm = _F_real(v, K_max, eps, c2)
    k_max = math.sqrt(K_max)
    if abs(pm.F.imag) > tol.root_tol(c2, k_max) * 1e3:
        return KStarRoots(v, g, eps, "complex", [], k_max, float("nan"))
    Fmax = pm.F.real
    rt = tol.root_tol(c2, k_max)
    if abs(Fmax) <= rt:
        return KStarRoots(v, g, eps, "tangent", [k_max], k_max, Fmax)
    if Fmax < 0:
        return KStarRoots(v, g, eps, "none", [], k_max, Fmax)
    f = lambda K: _F_real(v, K, eps, c2).F.real
    roots = []
    if K_max > 0 and f(0.0) < 0:
        roots.append(math.sqrt(optimize.brentq(f, 0.0, K_max, xtol=1e-300, rtol=K_REL_TOL)))
    K_hi = max(2.0 * K_max, 1.0)
    while f(K_hi) > 0:
        K_hi *= 2.0
    roots.append(math.sqrt(optimize.brentq(f, K_max, K_hi, xtol=1e-300, rtol=K_REL_TOL)))
    return KStarRoots(v, g, eps, "pair" if len(roots) == 2 else "single", roots, k_max, Fmax)


# ---------------------------------------------------------------------------
# c0


def c0_solve(cfg: InterfaceConfig) -> float:
    """Unique c above the lower range with int_{-h-}^0 (U- - c)^-2 dx2 = 1/g."""
    if cfg.g <= 0:
        raise InputError("c0 needs g > 0")
    prof = cfg.lower
    lo, hi = prof.value_range()
    target = 1.0 / cfg.g

    def f(c):
        return inv_sq_integral(prof, c).real - target

    span = max(hi - lo, 1.0)
    left = hi + 1e-9 * span
    while f(left) <= 0:
        left = hi + (left - hi) * 1e-3
        if left - hi < 1e-15 * span:
            raise InputError("integral does not exceed 1/g near the range")
    right = hi + span
    while f(right) > 0:
        right = hi + 2.0 * (right - hi)
    c = optimize.brentq(f, left, right, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    # one Newton polish: d/dc int (U-c)^-2 = 2 int (U-c)^-3
    lo_x, hi_x = prof.domain
    d, _ = integrate.quad(lambda x: 2.0 * (prof._eval(x)[0] - c) ** -3, lo_x, hi_x, epsabs=0, epsrel=1e-13)
    if d != 0:
        cn = c - f(c) / d
        if abs(f(cn)) < abs(f(c)):
            c = cn
    return float(c)


# ---------------------------------------------------------------------------
# exclusion of singular modes


def m_of_c(cfg: InterfaceConfig, c: float, eps: float) -> float:
    """eps * int_0^h+ (U+ - c)^2 + int_-h-^0 (U- - c)^2."""
    def sq(p: ShearProfile):
        lo, hi = p.domain
        v, _ = integrate.quad(lambda x: (p._eval(x)[0] - c) ** 2, lo, hi, epsabs=0, epsrel=1e-12)
        return v
    return eps * sq(cfg.upper) + sq(cfg.lower)


@dataclass
class Inequality:
    name: str
    lhs: float
    rhs: float
    passed: bool
    note: str = ""


@dataclass
class ExclusionCertificate:
    eps: float
    overlap_empty: bool
    inequalities: List[Inequality] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.inequalities)

    @property
    def failed(self) -> List[str]:
        return [i.name for i in self.inequalities if not i.passed]


def _inv_sq_or_inf(p: ShearProfile, c: float) -> float:
    lo, hi = p.value_range()
    if lo <= c <= hi:
        return math.inf  # non-integrable singularity at the critical layer
    return inv_sq_integral(p, c).real


def overlap_set(cfg: InterfaceConfig):
    """Open overlap of the two open ranges, as (lo, hi) or None."""
    lm, hm = cfg.lower.value_range()
    lp, hp = cfg.upper.value_range()
    lo, hi = max(lm, lp), min(hm, hp)
    return (lo, hi) if lo < hi else None


def exclusion_certificate(cfg: InterfaceConfig, eps: Optional[float] = None) -> ExclusionCertificate:
    """Evaluate the sufficient conditions for 'no singular modes, two real branches'.

    The stated integral conditions take c at a fluid's own endpoints, where the
    integrals diverge; those are listed (and pass). The k = 0 sign conditions that the
    argument actually needs pair each fluid's integral with the other fluid's endpoint
    values and are listed as the 'cross' inequalities.
    """
    eps = cfg.epsilon if eps is None else float(eps)
    g = cfg.g
    inv_g = math.inf if g == 0 else 1.0 / g
    cert = ExclusionCertificate(eps, overlap_set(cfg) is None)
    bv = boundary_values(cfg)
    own_lower = min(_inv_sq_or_inf(cfg.lower, bv[n]) for n in ("U-(0)", "U-(-h-)"))
    own_upper = min(_inv_sq_or_inf(cfg.upper, bv[n]) for n in ("U+(0)", "U+(h+)"))
    cert.inequalities.append(Inequality("lower_integral_own_endpoints > 1/g", own_lower, inv_g,
                                        own_lower > inv_g, "divergent" if math.isinf(own_lower) else ""))
    cert.inequalities.append(Inequality("upper_integral_own_endpoints > eps/g", own_upper, eps * inv_g if eps else 0.0,
                                        own_upper > (eps * inv_g if eps else 0.0),
                                        "divergent" if math.isinf(own_upper) else ""))
    rhs_l = math.inf if g * (1 - eps) <= 0 else 1.0 / (g * (1 - eps))
    cross_lower = min(_inv_sq_or_inf(cfg.lower, bv[n]) for n in ("U+(0)", "U+(h+)"))
    cert.inequalities.append(Inequality("lower_integral_at_upper_endpoints > 1/(g(1-eps))", cross_lower, rhs_l,
                                        cross_lower > rhs_l))
    rhs_u = eps * inv_g if eps else 0.0
    cross_upper = min(_inv_sq_or_inf(cfg.upper, bv[n]) for n in ("U-(0)", "U-(-h-)"))
    cert.inequalities.append(Inequality("upper_integral_at_lower_endpoints > eps/g", cross_upper, rhs_u,
                                        cross_upper > rhs_u))
    s_rho = cfg.sigma / cfg.rho_minus
    if cert.overlap_empty:
        m_max = max(m_of_c(cfg, v, eps) for v in bv.values())
        cert.inequalities.append(Inequality("max_E m(c) < sigma/rho-", m_max, s_rho, m_max < s_rho))
    else:
        a, b = range_extrema(cfg)
        m_max = max(m_of_c(cfg, a, eps), m_of_c(cfg, b, eps))
        cert.inequalities.append(Inequality("max_{a,b} m(c) < sigma/rho-", m_max, s_rho, m_max < s_rho))
        prod = cfg.upper.convexity * cfg.lower.convexity
        cert.inequalities.append(Inequality("U+'' U-'' > 0", float(prod), 0.0, prod > 0))
    return cert


# ---------------------------------------------------------------------------
# local bifurcation at a boundary value


@dataclass
class BifurcationDirection:
    v: float
    k_at: float
    dF_dc: float
    dF_dk: float
    sign_dF_dc: int
    sign_dF_dk: int
    tangent: bool
    into_range: int  # +1 if the range lies above v, -1 below, 0 ambiguous
    ci_sign: int  # sign of Im c on the side where Re c enters the range
    unstable_side: Optional[str]  # 'above' (k > k_at) or 'below' (k < k_at), None if none
    conclusive: bool
    note: str = ""


def bifurcation_direction(cfg: InterfaceConfig, eps: float, v: float, k_at: float,
                          tol: Tolerances = DEFAULT_TOL) -> BifurcationDirection:
    """Which side of k_at carries a root with c_I > 0 leaving the boundary value v.

    The root through (v, k_at) moves with dc/dk = -dF/dk / dF/dc, real while it stays
    off the range. Where it enters the range, Im c has the sign of -N / dF/dc, with N the
    imaginary part of F just inside the range: positive for convex, negative for concave
    profiles (weight eps for the upper fluid).
    """
    p = evaluate(v, k_at, eps, cfg)
    dc = p.dF_dc.real
    dk = 2.0 * k_at * p.dF_dK.real
    rt = tol.root_tol(cfg, k_at)
    a, b = range_extrema(cfg)
    delta = 1e-6 * max(b - a, 1e-12)
    above, below = in_union_range(v + delta, cfg), in_union_range(v - delta, cfg)
    into = 1 if above and not below else (-1 if below and not above else 0)
    if abs(dc) < 1e3 * rt:
        return BifurcationDirection(v, k_at, dc, dk, 0, int(np.sign(dk)), False, into, 0, None, False,
                                    "dF/dc degenerate")
    # convexity weight of the profiles containing the entering point
    entering = v + into * delta
    num = 0.0
    for prof, w in ((cfg.lower, 1.0), (cfg.upper, eps)):
        lo, hi = prof.value_range()
        if lo <= entering <= hi:
            num += w * prof.convexity
    ci_sign = int(np.sign(-num / dc)) if num != 0 else 0
    tangent = abs(dk) <= 1e-6 * max(1.0, abs(dc)) * max(1.0, k_at)
    if tangent:
        return BifurcationDirection(v, k_at, dc, dk, int(np.sign(dc)), 0, True, into, ci_sign, None, True,
                                    "real on both sides, away from the range")
    slope = -dk / dc  # dRe c / dk
    if into == 0:
        return BifurcationDirection(v, k_at, dc, dk, int(np.sign(dc)), int(np.sign(dk)), False, into, ci_sign,
                                    None, False, "boundary value interior to the union of ranges")
    side = "above" if slope * into > 0 else "below"
    unstable = side if ci_sign > 0 else None
    note = "" if ci_sign > 0 else "entering root has c_I < 0 in the extension; no unstable mode predicted"
    return BifurcationDirection(v, k_at, dc, dk, int(np.sign(dc)), int(np.sign(dk)), False, into, ci_sign,
                                unstable, ci_sign != 0, note)


# ---------------------------------------------------------------------------
# report


@dataclass
class ThresholdReport:
    g_star: float
    g_star_threshold: float
    g_star_k: float
    g_sharp: float
    g_sharp_k: float
    g_sharp_set: str
    c0: Optional[float]
    k_star_pairs: Dict[str, dict]
    exclusion: dict
    bifurcation: Dict[str, list]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_json_default)

    @classmethod
    def from_json(cls, text: str) -> "ThresholdReport":
        return cls(**json.loads(text))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def threshold_report(cfg: InterfaceConfig, eps: Optional[float] = None) -> ThresholdReport:
    eps = cfg.epsilon if eps is None else float(eps)
    gs = g_star(cfg, eps)
    gh = g_sharp(cfg)
    try:
        c0 = c0_solve(cfg)
    except InputError:
        c0 = None
    pairs: Dict[str, dict] = {}
    bif: Dict[str, list] = {}
    for name, v in boundary_values(cfg).items():
        try:
            r = k_star_roots(cfg, eps, cfg.g, v)
        except Exception as exc:  # report and continue with the other boundary values
            pairs[name] = {"v": v, "kind": "error", "error": str(exc)}
            continue
        pairs[name] = asdict(r)
        bif[name] = [asdict(bifurcation_direction(cfg, eps, v, k)) for k in r.roots if k > 0]
    cert = exclusion_certificate(cfg, eps)
    excl = {"passed": cert.passed, "overlap_empty": cert.overlap_empty,
            "inequalities": [asdict(i) for i in cert.inequalities]}
    return ThresholdReport(gs.value, gs.threshold, gs.k_max, gh.value, gh.k_max, gh.maximised_over,
                           c0, pairs, excl, bif)
