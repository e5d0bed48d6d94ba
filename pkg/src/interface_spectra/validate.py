"""Invariant suite run by the ``validate`` subcommand on a loaded configuration.

Each check reports the measured worst value, the tolerance it was held to and a status:
``pass``, ``fail``, ``skipped`` (not applicable to this configuration) or
``tolerance-infeasible`` (the requested tolerance is below what double precision can
resolve for that quantity; the check is not attempted).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from . import dispersion as D
from . import rayleigh as R
from . import spectrum as SP
from . import thresholds as T
from .config import RunSpec
from .errors import SpectraError
from .profile import LOWER, UPPER, InterfaceConfig, range_extrema

VALIDATE_DEFAULTS: Dict[str, float] = {
    "roundtrip": 1e-12,
    "conj": 1e-10,
    "even": 1e-10,
    "fd_rel": 1e-6,
    "cr_resid": 1e-6,
    "gstar_dk": 1e-8,
    "c0_resid": 1e-10,
}

# below these a check cannot be met in double precision
FEASIBLE_FLOOR: Dict[str, float] = {
    "roundtrip": 1e-15,
    "conj": 1e-14,
    "even": 1e-14,
    "fd_rel": 1e-11,
    "cr_resid": 1e-11,
    "gstar_dk": 1e-14,
    "c0_resid": 1e-15,
    "root_scale": 1e-15,
    "class_tol": 1e-15,
    "fixed_point_tol": 1e-15,
}

SEED = 20240611


@dataclass
class CheckResult:
    name: str
    status: str
    measured: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "skipped")


@dataclass
class _Ctx:
    cfg: InterfaceConfig
    spec: RunSpec
    vt: Dict[str, float]
    rng: np.random.Generator
    eps: float


def _outside_points(cfg: InterfaceConfig, rng, n: int, margin: float = 0.05) -> List[float]:
    """Real c outside the closed union of ranges, on both sides."""
    a, b = range_extrema(cfg)
    w = max(b - a, 1.0)
    out = []
    for i in range(n):
        d = margin * w + rng.uniform(0, w)
        out.append(a - d if i % 2 == 0 else b + d)
    return out


def _monotone_sign(x: _Ctx):
    bad = []
    for p in (x.cfg.lower, x.cfg.upper):
        if not p.monotone:
            continue
        xs = np.linspace(*p.domain, 1000)
        d1 = np.array([p._eval(v)[1] for v in xs])
        if not (np.all(d1 > 0) or np.all(d1 < 0)):
            bad.append(p.side)
    return (0.0 if not bad else 1.0), None, ", ".join(bad)


def _roundtrip(x: _Ctx):
    worst = 0.0
    for p in (x.cfg.lower, x.cfg.upper):
        if not p.monotone:
            continue
        lo, hi = p.value_range()
        for c in x.rng.uniform(lo, hi, 100):
            xc = p.critical_layer(c)
            worst = max(worst, abs(p._eval(xc)[0] - c) / (1 + abs(c)))
    return worst, "roundtrip", ""


def _fund_pairs(x: _Ctx, n: int):
    a, b = range_extrema(x.cfg)
    w = max(b - a, 1.0)
    for _ in range(n):
        c = complex(x.rng.uniform(a - 0.5 * w, b + 0.5 * w), x.rng.uniform(0.05, 0.5) * w)
        yield c, float(x.rng.uniform(0.1, 5.0))


def _conjugation(x: _Ctx):
    worst = 0.0
    for c, k in _fund_pairs(x, 4):
        for side in (LOWER, UPPER):
            f1 = R.solve_fundamental(side, c, k, x.cfg, n_samples=64, estimate_error=False)
            f2 = R.solve_fundamental(side, c.conjugate(), k, x.cfg, n_samples=64, estimate_error=False)
            s = np.max(np.abs(f1.y)) + 1e-300
            worst = max(worst, float(np.max(np.abs(np.conj(f1.y) - f2.y)) / s))
    return worst, "conj", ""


def _even_k(x: _Ctx):
    worst = 0.0
    for c, k in _fund_pairs(x, 4):
        for side in (LOWER, UPPER):
            f1 = R.solve_fundamental(side, c, k, x.cfg, n_samples=64, estimate_error=False)
            f2 = R.solve_fundamental(side, c, -k, x.cfg, n_samples=64, estimate_error=False)
            s = np.max(np.abs(f1.y)) + 1e-300
            worst = max(worst, float(np.max(np.abs(f1.y - f2.y)) / s))
    return worst, "even", ""


def _fundamental_sign(x: _Ctx):
    bad = 0
    for c in _outside_points(x.cfg, x.rng, 6):
        k = float(x.rng.uniform(0.1, 5.0))
        fl = R.solve_fundamental(LOWER, c, k, x.cfg, n_samples=200, estimate_error=False)
        fu = R.solve_fundamental(UPPER, c, k, x.cfg, n_samples=200, estimate_error=False)
        # the wall sample itself is zero
        bad += int(np.sum(fl.y.real[fl.x2 > fl.x2.min()] <= 0))
        bad += int(np.sum(fu.y.real[fu.x2 < fu.x2.max()] >= 0))
    return float(bad), None, "count of samples with the wrong sign"


def _concavity(x: _Ctx):
    worst = -math.inf
    for c in _outside_points(x.cfg, x.rng, 12):
        K = float(x.rng.uniform(0.05, 20.0))
        eps = float(x.rng.uniform(0.0, 1.0))
        h = 1e-3 * (1 + K)
        f = [D.F_value(c, math.sqrt(K + j * h), eps, x.cfg).real for j in (-1, 0, 1)]
        d2 = (f[0] - 2 * f[1] + f[2]) / h**2
        worst = max(worst, d2)
    return worst, None, "largest second difference in K (must be < 0)"


def _Y_monotone(x: _Ctx):
    worst = -math.inf
    for c in _outside_points(x.cfg, x.rng, 12):
        k = float(x.rng.uniform(0.1, 5.0))
        worst = max(worst, -D.dY_dK(LOWER, c, k, x.cfg).real, D.dY_dK(UPPER, c, k, x.cfg).real)
    return worst, None, "largest of -dK Y- and dK Y+ (must be < 0)"


def _fd_derivatives(x: _Ctx):
    worst = 0.0
    a, b = range_extrema(x.cfg)
    w = max(b - a, 1.0)
    for i in range(10):
        if i % 2:
            c = complex(x.rng.uniform(a - 0.5 * w, b + 0.5 * w), x.rng.uniform(0.05, 0.5) * w)
        else:
            c = complex(_outside_points(x.cfg, x.rng, 1)[0])
        K = float(x.rng.uniform(0.1, 10.0))
        eps = float(x.rng.uniform(0.0, 1.0))
        p = D.evaluate(c, math.sqrt(K), eps, x.cfg)
        hc = 1e-5 * w
        fd_c = (D.F_value(c + hc, math.sqrt(K), eps, x.cfg) - D.F_value(c - hc, math.sqrt(K), eps, x.cfg)) / (2 * hc)
        hK = 1e-5 * (1 + K)
        fd_K = (D.F_value(c, math.sqrt(K + hK), eps, x.cfg) - D.F_value(c, math.sqrt(K - hK), eps, x.cfg)) / (2 * hK)
        he = 1e-5
        fd_e = (D.F_value(c, math.sqrt(K), eps + he, x.cfg) - D.F_value(c, math.sqrt(K), eps - he, x.cfg)) / (2 * he)
        for an, fd in ((p.dF_dc, fd_c), (p.dF_dK, fd_K), (p.dF_deps, fd_e)):
            worst = max(worst, abs(an - fd) / max(abs(an), 1.0))
    return worst, "fd_rel", ""


def _cauchy_riemann(x: _Ctx):
    worst = 0.0
    a, b = range_extrema(x.cfg)
    w = max(b - a, 1.0)
    for _ in range(8):
        c = complex(x.rng.uniform(a - 0.5 * w, b + 0.5 * w), x.rng.uniform(0.1, 0.5) * w)
        k = float(x.rng.uniform(0.1, 5.0))
        h = 1e-5 * w
        fx = (D.F_value(c + h, k, x.eps, x.cfg) - D.F_value(c - h, k, x.eps, x.cfg)) / (2 * h)
        fy = (D.F_value(c + 1j * h, k, x.eps, x.cfg) - D.F_value(c - 1j * h, k, x.eps, x.cfg)) / (2 * h)
        worst = max(worst, abs(fx - fy / 1j) / max(abs(fx), 1.0))
    return worst, "cr_resid", ""


def _g_star(x: _Ctx):
    gs = T.g_star(x.cfg, x.eps)
    if gs.k_max == 0:
        return 0.0, "gstar_dk", "maximum at k = 0"
    p = D.evaluate(gs.c, gs.k_max, x.eps, x.cfg)
    scale = x.cfg.g + x.cfg.sigma / x.cfg.rho_minus + abs(p.F)
    resid = abs(p.F.real + x.cfg.g - gs.value) / scale
    return max(abs(p.dF_dK.real) / scale, resid), "gstar_dk", ""


def _c0(x: _Ctx):
    if x.cfg.g <= 0:
        return None, "c0_resid", "g = 0"
    c0 = T.c0_solve(x.cfg)
    r = abs(D.inv_sq_integral(x.cfg.lower, c0).real - 1.0 / x.cfg.g) * x.cfg.g
    return r, "c0_resid", f"c0 = {c0:.12e}"


def _g_star_sigma(x: _Ctx):
    vals = [T.g_star(x.cfg.replace(sigma=s), x.eps).value for s in (0.01, 0.1, 1.0)]
    inc = max(vals[1] - vals[0], vals[2] - vals[1])
    return inc, None, "largest increase of g_* along sigma = 0.01, 0.1, 1 (must be <= 0)"


def _branch_signs(x: _Ctx):
    a, b = range_extrema(x.cfg)
    k = SP.k_large(x.eps, x.cfg, x.spec.tol)
    cm, cp = SP.large_k_roots(k, x.eps, x.cfg, x.spec.tol)
    bad = []
    p = D.evaluate(cp, k, x.eps, x.cfg)
    if abs(cp.imag) <= x.spec.tol.class_tol and cp.real > b and not p.dF_dc.real > 0:
        bad.append("c_plus")
    p = D.evaluate(cm, k, x.eps, x.cfg)
    if abs(cm.imag) <= x.spec.tol.class_tol and cm.real < a and not p.dF_dc.real < 0:
        bad.append("c_minus")
    return float(len(bad)), None, ", ".join(bad) or f"k = {k:.6g}"


def _conjugate_pairing(x: _Ctx):
    worst = 0.0
    n = 0
    for k in (0.5, 2.0, 10.0):
        for c in SP.find_roots(k, x.eps, x.cfg, x.spec.tol):
            if c.imag > x.spec.tol.class_tol:
                n += 1
                r = SP.newton_root(c.conjugate(), k, x.eps, x.cfg, x.spec.tol)
                worst = max(worst, abs(r.c - c.conjugate()))
    return worst, None, f"{n} unstable roots checked"


def _expect(x: _Ctx, key: str) -> Optional[tuple]:
    want = x.spec.validate.get(key)
    if not want:
        return None
    cfg = x.cfg
    if key == "expect_convex":
        bad = [p.side for p in (cfg.lower, cfg.upper) if p.convexity != 1]
    elif key == "expect_concave":
        bad = [p.side for p in (cfg.lower, cfg.upper) if p.convexity != -1]
    elif key == "expect_monotone":
        bad = [p.side for p in (cfg.lower, cfg.upper) if not (p.monotone or p.linear)]
    else:
        cert = T.exclusion_certificate(cfg, x.eps)
        bad = cert.failed
    return float(len(bad)), None, ", ".join(bad)


CHECKS: Dict[str, Callable] = {
    "profile_monotone_sign": _monotone_sign,
    "critical_layer_roundtrip": _roundtrip,
    "fundamental_conjugation": _conjugation,
    "fundamental_even_in_k": _even_k,
    "fundamental_sign": _fundamental_sign,
    "F_concave_in_K": _concavity,
    "Y_monotone_in_K": _Y_monotone,
    "F_derivatives_vs_fd": _fd_derivatives,
    "F_cauchy_riemann": _cauchy_riemann,
    "g_star_consistency": _g_star,
    "c0_residual": _c0,
    "g_star_nonincreasing_in_sigma": _g_star_sigma,
    "branch_dF_dc_signs": _branch_signs,
    "conjugate_pairing": _conjugate_pairing,
}

# checks whose verdict is "measured must be <= 0" / "< 0" rather than "<= tolerance"
_SIGN_CHECKS = {"F_concave_in_K": "lt", "Y_monotone_in_K": "lt", "g_star_nonincreasing_in_sigma": "le"}
_ROOT_CHECKS = {"branch_dF_dc_signs", "conjugate_pairing"}
EXPECTATIONS = ("expect_convex", "expect_concave", "expect_monotone", "expect_exclusion")


def _infeasible(keys, vt, tol) -> Optional[str]:
    for key in keys:
        val = vt[key] if key in vt else getattr(tol, key)
        if val < FEASIBLE_FLOOR.get(key, 0.0):
            return f"{key} = {val:g} below the double-precision floor {FEASIBLE_FLOOR[key]:g}"
    return None


def run_validate(spec: RunSpec, eps: Optional[float] = None, overrides: Optional[Dict[str, float]] = None,
                 only: Optional[List[str]] = None) -> List[CheckResult]:
    vt = dict(VALIDATE_DEFAULTS)
    vt.update(overrides or {})
    cfg = spec.interface
    ctx = _Ctx(cfg, spec, vt, np.random.default_rng(SEED), cfg.epsilon if eps is None else float(eps))
    out: List[CheckResult] = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        keys = list(_TOL_KEYS.get(name, ()))
        if name in _ROOT_CHECKS:
            keys = ["root_scale", "class_tol"]
        why = _infeasible(keys, vt, spec.tol)
        if why:
            out.append(CheckResult(name, "tolerance-infeasible", None, None, why))
            continue
        try:
            measured, tkey, detail = fn(ctx)
        except SpectraError as exc:
            out.append(CheckResult(name, "fail", None, None, f"{type(exc).__name__}: {exc}"))
            continue
        if measured is None:
            out.append(CheckResult(name, "skipped", None, None, detail))
            continue
        if name in _SIGN_CHECKS:
            ok = measured < 0 if _SIGN_CHECKS[name] == "lt" else measured <= 0
            tolv = 0.0
        elif tkey is None:
            ok, tolv = measured == 0, 0.0
        else:
            tolv = vt[tkey]
            ok = measured <= tolv
        out.append(CheckResult(name, "pass" if ok else "fail", float(measured), tolv, detail))
    for key in EXPECTATIONS:
        if only and key not in only:
            continue
        r = _expect(ctx, key)
        if r is not None:
            out.append(CheckResult(key, "pass" if r[0] == 0 else "fail", r[0], 0.0, r[2]))
    return out


_TOL_KEYS = {
    "critical_layer_roundtrip": ("roundtrip",),
    "fundamental_conjugation": ("conj",),
    "fundamental_even_in_k": ("even",),
    "F_derivatives_vs_fd": ("fd_rel",),
    "F_cauchy_riemann": ("cr_resid",),
    "g_star_consistency": ("gstar_dk",),
    "c0_residual": ("c0_resid",),
}


def report_json(results: List[CheckResult]) -> list:
    return [asdict(r) for r in results]
