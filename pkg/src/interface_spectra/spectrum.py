"""Roots of F(., k, eps): large-k fixed points, Newton, continuation in k, and counting.

Roots are tracked by their representative with c_I >= 0; since F(conj c) = conj F(c),
the conjugate of every complex root is a root as well.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dispersion import DispersionPoint, evaluate, evaluate_many
from .errors import ContourError, ContractionError, NewtonError, SpectraError
from .profile import InterfaceConfig, range_extrema

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    root_scale: float = 1e-10  # root_tol = root_scale * (g + sigma (1 + k^2) / rho-)
    branch_factor: float = 10.0
    class_tol: float = 1e-9
    bnd_rel: float = 1e-6  # bnd_tol = bnd_rel * (b - a)
    max_iter: int = 50
    min_derivative: float = 1e-14
    fixed_point_tol: float = 1e-12
    dk_min: float = 1e-4
    dk_max: float = 0.25

    def root_tol(self, cfg: InterfaceConfig, k: float) -> float:
        return self.root_scale * (cfg.g + cfg.sigma * (1.0 + k * k) / cfg.rho_minus)

    def branch_tol(self, cfg: InterfaceConfig, k: float) -> float:
        return self.branch_factor * self.root_tol(cfg, k)

    def bnd_tol(self, cfg: InterfaceConfig) -> float:
        a, b = range_extrema(cfg)
        return self.bnd_rel * max(b - a, 1e-300)


DEFAULT_TOL = Tolerances()


class ModeClass(str, Enum):
    UNSTABLE = "unstable"
    NEUTRAL_NONSINGULAR = "neutral_nonsingular"
    NEUTRAL_SINGULAR = "neutral_singular"
    NEUTRAL_LIMITING_CANDIDATE = "neutral_limiting_candidate"


def in_union_range(c: float, cfg: InterfaceConfig, tol: float = 0.0) -> bool:
    for p in (cfg.lower, cfg.upper):
        lo, hi = p.value_range()
        if lo - tol <= c <= hi + tol:
            return True
    return False


def classify(c: complex, k: float, cfg: InterfaceConfig, tol: Tolerances = DEFAULT_TOL,
             from_unstable: bool = False) -> ModeClass:
    """Mode class of a root. ``from_unstable`` marks a real root reached from unstable samples."""
    c = complex(c)
    if abs(c.imag) > tol.class_tol and k != 0:
        # c_I < 0 is the conjugate partner of an unstable root
        return ModeClass.UNSTABLE
    if from_unstable:
        return ModeClass.NEUTRAL_LIMITING_CANDIDATE
    if in_union_range(c.real, cfg):
        return ModeClass.NEUTRAL_SINGULAR
    return ModeClass.NEUTRAL_NONSINGULAR


def boundary_values(cfg: InterfaceConfig) -> dict:
    return {
        "U-(-h-)": cfg.lower.wall_value,
        "U-(0)": cfg.lower.interface_value,
        "U+(0)": cfg.upper.interface_value,
        "U+(h+)": cfg.upper.wall_value,
    }


# ---------------------------------------------------------------------------
# semicircle


@dataclass(frozen=True)
class Disc:
    center: float
    radius: float
    applicable: bool = True

    def contains(self, c: complex, tol: float = 1e-9) -> bool:
        return abs(complex(c) - self.center) <= self.radius + tol


def semicircle_bound(cfg: InterfaceConfig, k: float) -> Disc:
    """Disc over [a, b] that contains every unstable wave speed."""
    a, b = range_extrema(cfg)
    applicable = -cfg.g * (cfg.rho_plus - cfg.rho_minus) + cfg.sigma * k * k >= 0
    return Disc(0.5 * (a + b), 0.5 * (b - a), applicable)


# ---------------------------------------------------------------------------
# large k


def _frozen_quadratic(c: complex, k: float, eps: float, cfg: InterfaceConfig):
    """Coefficients (Q, B, A) of Q c^2 + B c + A = F with Y frozen at c."""
    p = evaluate(c, k, eps, cfg)
    Ym, Yp = p.Y_minus, p.Y_plus
    Up0, dUp = cfg.upper.interface_value, cfg.upper._eval(0.0)[1]
    Um0, dUm = cfg.lower.interface_value, cfg.lower._eval(0.0)[1]
    R = cfg.g * (1 - eps) + cfg.sigma * k * k / cfg.rho_minus
    A = eps * (dUp * Up0 - Yp * Up0 ** 2) - dUm * Um0 + Ym * Um0 ** 2 - R
    B = dUm - 2 * Um0 * Ym - eps * dUp + 2 * eps * Yp * Up0
    Q = Ym - eps * Yp
    return Q, B, A


def large_k_guess(k: float, eps: float, cfg: InterfaceConfig) -> Tuple[complex, complex]:
    Up0, Um0 = cfg.upper.interface_value, cfg.lower.interface_value
    mean = (eps * Up0 + Um0) / (1 + eps)
    rad = cmath.sqrt(-eps * (Up0 - Um0) ** 2 / (1 + eps) ** 2 + cfg.sigma * abs(k) / (cfg.rho_minus * (1 + eps)))
    return mean - rad, mean + rad


def _fixed_point(sign: int, c: complex, k, eps, cfg, tol: Tolerances, max_iter: int = 100):
    deltas = []
    for _ in range(max_iter):
        Q, B, A = _frozen_quadratic(c, k, eps, cfg)
        disc = cmath.sqrt(B * B - 4 * Q * A)
        cn = (-B + sign * disc) / (2 * Q)
        if abs(cn.imag) < 1e-14 * (1 + abs(cn)):
            cn = complex(cn.real, 0.0)
        dc = abs(cn - c)
        deltas.append(dc)
        c = cn
        if dc <= tol.fixed_point_tol * (1 + abs(c)):
            return c, deltas
        if len(deltas) >= 6 and all(deltas[-i] >= deltas[-i - 1] for i in range(1, 6)):
            raise ContractionError(f"fixed-point map not contracting at k={k}")
    raise ContractionError(f"fixed-point map did not converge at k={k}")


def contraction_factor(k: float, eps: float, cfg: InterfaceConfig, tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest ratio of successive fixed-point increments over both branches."""
    worst = 0.0
    for sign, c in zip((-1, 1), large_k_guess(k, eps, cfg)):
        try:
            _, d = _fixed_point(sign, c, k, eps, cfg, tol, max_iter=100)
        except ContractionError:
            return math.inf
        ratios = [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 1e-9 * (1 + abs(c))]
        if ratios:
            worst = max(worst, max(ratios))
    return worst


def k_large(eps: float, cfg: InterfaceConfig, tol: Tolerances = DEFAULT_TOL, max_doublings: int = 20) -> float:
    """Smallest tried k (by doubling) from which the fixed-point map contracts by < 0.5."""
    a, b = range_extrema(cfg)
    k = 10.0 * max(1.0, (b - a) * math.sqrt(cfg.rho_minus * (1 + eps) / cfg.sigma))
    for _ in range(max_doublings):
        if contraction_factor(k, eps, cfg, tol) < 0.5:
            return k
        k *= 2
    raise ContractionError("no contracting regime found")


def large_k_roots(k: float, eps: float, cfg: InterfaceConfig, tol: Tolerances = DEFAULT_TOL) -> Tuple[complex, complex]:
    """(c_minus, c_plus) as fixed points of the frozen-Y quadratic formula."""
    gm, gp = large_k_guess(k, eps, cfg)
    cm, _ = _fixed_point(-1, gm, k, eps, cfg, tol)
    cp, _ = _fixed_point(+1, gp, k, eps, cfg, tol)
    return cm, cp


# ---------------------------------------------------------------------------
# Newton


@dataclass
class NewtonResult:
    c: complex
    point: DispersionPoint
    iterations: int


def newton_root(c0: complex, k: float, eps: float, cfg: InterfaceConfig,
                tol: Tolerances = DEFAULT_TOL, max_iter: Optional[int] = None,
                keep_upper: bool = False, stall_limit: Optional[int] = None,
                avoid: Sequence[complex] = ()) -> NewtonResult:
    """Damped Newton with step halving on |F|.

    ``keep_upper`` reflects iterates into c_I >= 0 (valid since roots come in conjugate pairs).
    ``stall_limit`` aborts after that many consecutive steps that shrink |F| by less than 10%,
    and caps step halving at 8 (a cheap probe mode for root searches).
    ``avoid`` lists known stall points: reaching one aborts immediately.
    """
    max_iter = tol.max_iter if max_iter is None else max_iter
    rtol = tol.root_tol(cfg, k)
    c = complex(c0)
    if keep_upper and c.imag < 0:
        c = c.conjugate()
    p = evaluate(c, k, eps, cfg)
    if not cmath.isfinite(p.F):
        raise NewtonError(f"F not finite at the initial guess {c}")
    stalled = 0
    for it in range(max_iter + 1):
        if abs(p.F) <= rtol:
            # one polishing step: quadratic convergence takes c to working precision
            if p.dF_dc != 0:
                cn = c - p.F / p.dF_dc
                if keep_upper and cn.imag < 0:
                    cn = cn.conjugate()
                try:
                    pn = evaluate(cn, k, eps, cfg)
                    if cmath.isfinite(pn.F) and abs(pn.F) <= abs(p.F):
                        c, p = cn, pn
                except SpectraError:
                    pass
            return NewtonResult(c, p, it)
        if it == max_iter:
            break
        if abs(p.dF_dc) < tol.min_derivative:
            raise NewtonError(f"near-degenerate root: |dF/dc| = {abs(p.dF_dc):.3g} at c={c}")
        step = p.F / p.dF_dc
        lam = 1.0
        floor = 1e-14 * (1.0 + abs(c))
        for _ in range(30 if stall_limit is None else 8):
            if lam * abs(step) < floor:
                # further halving moves c by less than roundoff
                raise NewtonError(f"step halving failed at c={c}, k={k}", c)
            cn = c - lam * step
            if keep_upper and cn.imag < 0:
                cn = cn.conjugate()
            try:
                pn = evaluate(cn, k, eps, cfg)
            except SpectraError:
                pn = None
            if pn is not None and cmath.isfinite(pn.F) and abs(pn.F) < abs(p.F):
                break
            lam *= 0.5
        else:
            raise NewtonError(f"step halving failed at c={c}, k={k}", c)
        stalled = stalled + 1 if abs(pn.F) > 0.9 * abs(p.F) else 0
        if stall_limit is not None and stalled >= stall_limit:
            raise NewtonError(f"Newton stalled at c={cn}, k={k} (|F|={abs(pn.F):.3g})", cn)
        if any(abs(cn - q) <= 1e-6 * (1.0 + abs(q)) for q in avoid):
            raise NewtonError(f"Newton reached a known stall point near c={cn}, k={k}", cn)
        c, p = cn, pn
    raise NewtonError(f"Newton did not converge in {max_iter} iterations (|F|={abs(p.F):.3g}, c={c})")


# ---------------------------------------------------------------------------
# continuation


@dataclass
class BranchSample:
    k: float
    c: complex
    mode: ModeClass
    absF: float
    dF_dc: complex


@dataclass
class BranchEvent:
    k: float
    kind: str  # range_touch, turned_complex, turned_real, lost, reconnected
    value: Optional[float] = None
    label: str = ""


@dataclass
class Branch:
    label: str
    samples: List[BranchSample] = field(default_factory=list)
    events: List[BranchEvent] = field(default_factory=list)

    @property
    def ks(self) -> np.ndarray:
        return np.array([s.k for s in self.samples])

    @property
    def cs(self) -> np.ndarray:
        return np.array([s.c for s in self.samples])

    @property
    def lost(self) -> bool:
        return any(e.kind == "lost" for e in self.events)

    def to_rows(self):
        for s in self.samples:
            yield (s.k, s.c.real, s.c.imag, s.mode.value, s.absF, s.dF_dc.real, s.dF_dc.imag)

    def events_json(self):
        return [{"k": e.k, "kind": e.kind, "value": e.value, "boundary": e.label} for e in self.events]


def _near_boundary(c: complex, cfg: InterfaceConfig, bnd: float):
    if abs(c.imag) > bnd:
        return None
    for name, v in boundary_values(cfg).items():
        if abs(c.real - v) <= bnd:
            return name, v
    return None


def continue_branch(
    start: Tuple[float, complex],
    k_target: float,
    eps: float,
    cfg: InterfaceConfig,
    label: str = "secondary",
    tol: Tolerances = DEFAULT_TOL,
    dk0: Optional[float] = None,
    k_samples: Optional[Sequence[float]] = None,
) -> Branch:
    """Follow a root from (k0, c0) to k_target by tangent predictor and Newton corrector.

    The tangent is dc/dk = -2k dF/dK / dF/dc. Steps adapt between dk_min and dk_max.
    If ``k_samples`` is given, each of those k values is hit exactly as well.
    """
    k0, c0 = float(start[0]), complex(start[1])
    direction = 1.0 if k_target >= k0 else -1.0
    bnd = tol.bnd_tol(cfg)
    br = Branch(label)
    res = newton_root(c0, k0, eps, cfg, tol, keep_upper=True)
    c, p, k = res.c, res.point, k0
    was_unstable = c.imag > tol.class_tol
    br.samples.append(BranchSample(k, c, classify(c, k, cfg, tol), abs(p.F), p.dF_dc))
    touching = _near_boundary(c, cfg, bnd)
    if touching:
        br.events.append(BranchEvent(k, "range_touch", touching[1], touching[0]))
    dk = dk0 if dk0 is not None else tol.dk_max
    stops = sorted(set(float(x) for x in (k_samples or []) if (x - k0) * direction > 0 and (k_target - x) * direction >= 0))
    if direction < 0:
        stops = stops[::-1]
    stops.append(float(k_target))
    stop_i = 0
    while (k_target - k) * direction > 1e-14:
        while stop_i < len(stops) and (stops[stop_i] - k) * direction <= 1e-14:
            stop_i += 1
        next_stop = stops[min(stop_i, len(stops) - 1)]
        h = min(dk, abs(next_stop - k))
        kn = k + direction * h
        slope = -2.0 * k * p.dF_dK / p.dF_dc if p.dF_dc != 0 else 0.0
        pred = c + slope * (kn - k)
        if pred.imag < 0:
            pred = pred.conjugate()
        ok = False
        at_floor = h <= tol.dk_min * (1 + 1e-12)
        try:
            # above the step floor only fast corrections are accepted, so probe cheaply
            r = newton_root(pred, kn, eps, cfg, tol, max_iter=None if at_floor else 6, keep_upper=True,
                            stall_limit=None if at_floor else 3)
            ok = (
                r.iterations <= 6
                and abs(r.c - pred) <= 0.05 * (1.0 + abs(c)) * max(h / tol.dk_max, 0.1)
                and abs(r.point.dF_dc) >= 0.1 * abs(p.dF_dc)
            )
            if not ok and at_floor:
                ok = r.iterations <= tol.max_iter
        except SpectraError as exc:
            log.debug("continuation step failed at k=%g: %s", kn, exc)
            r = None
        if not ok:
            if at_floor:
                br.events.append(BranchEvent(kn, "lost", None, ""))
                return br
            dk = max(h / 2, tol.dk_min)
            continue
        prev_c = c
        c, p, k = r.c, r.point, kn
        unstable = c.imag > tol.class_tol
        if unstable and not was_unstable:
            br.events.append(BranchEvent(k, "turned_complex", c.real, ""))
        if was_unstable and not unstable:
            br.events.append(BranchEvent(k, "turned_real", c.real, ""))
        if not unstable and in_union_range(prev_c.real, cfg) and not in_union_range(c.real, cfg):
            br.events.append(BranchEvent(k, "reconnected", c.real, ""))
        touching = _near_boundary(c, cfg, bnd)
        if touching and not _near_boundary(prev_c, cfg, bnd):
            br.events.append(BranchEvent(k, "range_touch", touching[1], touching[0]))
        mode = classify(c, k, cfg, tol, from_unstable=(was_unstable and not unstable))
        was_unstable = unstable
        br.samples.append(BranchSample(k, c, mode, abs(p.F), p.dF_dc))
        if r.iterations <= 3:
            dk = min(dk * 1.5, tol.dk_max)
    return br


# ---------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def corners(self):
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def inflate(self, factor: float) -> "Rectangle":
        cx, cy = 0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max)
        hx, hy = 0.5 * (self.re_max - self.re_min) * factor, 0.5 * (self.im_max - self.im_min) * factor
        return Rectangle(cx - hx, cx + hx, cy - hy, cy + hy)

    def contains(self, c: complex) -> bool:
        return self.re_min < c.real < self.re_max and self.im_min < c.imag < self.im_max


def range_holes(cfg: InterfaceConfig, pad: float) -> List[Rectangle]:
    """Rectangles around the real range segments on which F is not analytic.

    Linear profiles contribute no hole (their F is analytic across the real axis).
    Overlapping holes are merged.
    """
    segs = []
    for p in (cfg.lower, cfg.upper):
        if p.linear:
            continue
        lo, hi = p.value_range()
        segs.append([lo - pad, hi + pad])
    segs.sort()
    merged = []
    for s in segs:
        if merged and s[0] <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], s[1])
        else:
            merged.append(s)
    return [Rectangle(lo, hi, -pad, pad) for lo, hi in merged]


def _gauss_edge(z0: complex, z1: complex, n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (z0 + z1), 0.5 * (z1 - z0)
    return mid + half * t, half * w


def _winding(rect: Rectangle, k, eps, cfg, n: int) -> float:
    """Winding number of F around ``rect``.

    For rectangles symmetric about the real axis only the upper half is integrated:
    F(conj c) = conj F(c) makes the lower half contribute -conj of the upper half, so
    the count is Im(I_upper) / pi.
    """
    if rect.im_min == -rect.im_max:
        path = [complex(rect.re_max, 0.0), complex(rect.re_max, rect.im_max),
                complex(rect.re_min, rect.im_max), complex(rect.re_min, 0.0)]
        closed = False
    else:
        path = rect.corners()
        closed = True
    m = len(path) if closed else len(path) - 1
    zs, ws = [], []
    for j in range(m):
        z, w = _gauss_edge(path[j], path[(j + 1) % len(path)], n)
        zs.append(z)
        ws.append(w)
    zs, ws = np.concatenate(zs), np.concatenate(ws)
    pts = evaluate_many(zs, k, eps, cfg)
    total = complex(np.sum(ws * np.array([p.dF_dc / p.F for p in pts])))
    if closed:
        return complex(total / (2j * math.pi))
    return complex(total.imag / math.pi)


def _scan_min(rect: Rectangle, k, eps, cfg, n=16):
    zs = []
    cs = rect.corners()
    for j in range(4):
        for t in np.linspace(0, 1, n, endpoint=False):
            zs.append(cs[j] + t * (cs[(j + 1) % 4] - cs[j]))
    vals = np.array([abs(p.F) for p in evaluate_many(zs, k, eps, cfg)])
    return float(vals.min()), float(np.median(vals))


@dataclass
class CountResult:
    n: int
    raw: complex
    nodes: int
    contour: Rectangle
    holes: List[Rectangle]


def count_eigenvalues(
    contour: Rectangle,
    k: float,
    eps: float,
    cfg: InterfaceConfig,
    nodes: int = 32,
    max_nodes: int = 512,
    hole_pad: Optional[float] = None,
    max_inflations: int = 4,
    details: bool = False,
):
    """Number of zeros of F inside ``contour`` minus the range holes, by the argument principle."""
    a, b = range_extrema(cfg)
    width = max(b - a, 1e-300)
    pad = hole_pad if hole_pad is not None else 1e-2 * width
    pad = max(pad, 1e-3 * width)
    holes = [h for h in range_holes(cfg, pad) if _overlaps(h, contour)]
    rect = contour
    for _ in range(max_inflations):
        mn, med = _scan_min(rect, k, eps, cfg)
        if mn > 1e-6 * med:
            break
        rect = rect.inflate(1.1)
    n = nodes
    prev = None
    while n <= max_nodes:
        val = _winding(rect, k, eps, cfg, n)
        for h in holes:
            val -= _winding(h, k, eps, cfg, n)
        near = round(val.real)
        if abs(val - near) < 0.1 and prev is not None and round(prev.real) == near and abs(prev - near) < 0.1:
            res = CountResult(int(near), val, n, rect, holes)
            return res if details else res.n
        prev = val
        n *= 2
    raise ContourError(f"winding integral not integral: {prev}")


def _overlaps(h: Rectangle, r: Rectangle) -> bool:
    return not (h.re_max <= r.re_min or h.re_min >= r.re_max or h.im_max <= r.im_min or h.im_min >= r.im_max)


def real_root_extent(k: float, eps: float, cfg: InterfaceConfig, start: float = 1.0) -> float:
    """Half-width about the range center beyond which F > 0 and moves away from zero on the real axis."""
    a, b = range_extrema(cfg)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a) + start
    for _ in range(60):
        ok = True
        for sgn in (-1, 1):
            p = evaluate(mid + sgn * half, k, eps, cfg)
            if not (p.F.real > 0 and sgn * p.dF_dc.real > 0):
                ok = False
                break
        if ok:
            return half
        half *= 1.5
    raise ContourError("could not bound the real roots")


def semicircle_rectangle(k: float, eps: float, cfg: InterfaceConfig, margin: float = 0.25) -> Rectangle:
    """Rectangle covering the semicircle disc and every real root, inflated by ``margin``."""
    a, b = range_extrema(cfg)
    disc = semicircle_bound(cfg, k)
    half = max(real_root_extent(k, eps, cfg), disc.radius) * (1 + margin)
    hi = max(disc.radius * (1 + margin), margin * half)
    return Rectangle(disc.center - half, disc.center + half, -hi, hi)


def find_roots(k: float, eps: float, cfg: InterfaceConfig, tol: Tolerances = DEFAULT_TOL,
               n_guess: int = 24) -> List[complex]:
    """All roots with c_I >= 0 found by Newton from a spread of starts (deduplicated)."""
    a, b = range_extrema(cfg)
    disc = semicircle_bound(cfg, k)
    half = real_root_extent(k, eps, cfg)
    mid = 0.5 * (a + b)
    guesses = list(np.linspace(mid - half, mid + half, n_guess))
    r = max(disc.radius, 1e-3)
    guesses += [disc.center + r * cmath.exp(1j * t) * 0.7 for t in np.linspace(0.2, math.pi - 0.2, 6)]
    roots: List[complex] = []
    dead: List[complex] = []
    for g in guesses:
        try:
            res = newton_root(complex(g), k, eps, cfg, tol, keep_upper=True, stall_limit=3, avoid=dead)
        except NewtonError as exc:
            if exc.c is not None:
                dead.append(exc.c)
            continue
        except SpectraError:
            continue
        c = res.c
        if abs(c.imag) <= tol.class_tol:
            c = complex(c.real, 0.0)
        if all(abs(c - q) > 1e-7 * (1 + abs(c)) for q in roots):
            roots.append(c)
    return sorted(roots, key=lambda z: (z.real, z.imag))
