"""Acceptance suite: one test per criterion, each recording a pass/fail line.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and printed in the terminal summary.
"""
import math
import time
from contextlib import contextmanager

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from interface_spectra import dispersion as D
from interface_spectra import rayleigh as R
from interface_spectra import spectrum as SP
from interface_spectra import thresholds as T
from interface_spectra.profile import InterfaceConfig, ShearProfile as S

from conftest import ACCEPTANCE_LINES, make_convex, make_couette, make_exclusion, make_kh


class Outcome:
    def __init__(self):
        self.ok = False
        self.detail = ""


@contextmanager
def criterion(n, title, limit):
    out = Outcome()
    t0 = time.perf_counter()
    err = None
    try:
        yield out
    except Exception as exc:  # recorded, then re-raised below
        err = exc
        out.ok = False
        out.detail = f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    passed = out.ok and elapsed < limit
    line = f"criterion {n} {'PASS' if passed else 'FAIL'} {title}: {out.detail}; {elapsed:.1f} s (limit {limit:g} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    if err is not None:
        raise err
    assert passed, line


def coth(x):
    return 1.0 / math.tanh(x)


def test_criterion_01_kelvin_helmholtz():
    with criterion(1, "KH quadratic oracle", 5.0) as out:
        worst = 0.0
        for rho_plus in (0.0, 0.1, 0.5):
            cfg = make_kh(rho_plus=rho_plus)
            eps = rho_plus
            for k in (0.5, 2.0, 10.0, 50.0):
                A = k * coth(k)
                # eps A (1 - c)^2 + A c^2 = g (1 - eps) + sigma k^2
                ref = np.roots([eps * A + A, -2 * eps * A, eps * A - cfg.g * (1 - eps) - cfg.sigma * k * k])
                ref = [complex(r) for r in ref if r.imag >= 0]
                found = SP.find_roots(k, eps, cfg)
                assert len(found) == len(ref), (rho_plus, k, found, ref)
                for r in ref:
                    worst = max(worst, min(abs(f - r) for f in found))
        out.ok = worst <= 1e-8
        out.detail = f"max |dc| = {worst:.2e} <= 1e-08"


def test_criterion_02_couette():
    with criterion(2, "Couette Y = +-k coth(kh)", 5.0) as out:
        cfg = make_couette()
        rng = np.random.default_rng(2)
        worst = 0.0
        for i in range(20):
            if i % 2:
                c = complex(rng.uniform(-1.0, 3.0), rng.uniform(0.1, 1.0))
            else:
                c = complex(rng.choice([rng.uniform(-3.0, -0.2), rng.uniform(2.2, 5.0)]))
            k = float(rng.uniform(0.1, 8.0))
            ref = k * coth(k)
            for side, sign in (("lower", 1.0), ("upper", -1.0)):
                y = D.Y(side, c, k, cfg)
                worst = max(worst, abs(y - sign * ref) / abs(ref))
        out.ok = worst <= 1e-10
        out.detail = f"max relative |dY| = {worst:.2e} <= 1e-10"


def test_criterion_03_large_k():
    with criterion(3, "large-k asymptotics", 30.0) as out:
        cfg = make_convex()
        eps = cfg.epsilon
        devs = []
        for k in (1e2, 1e3, 1e4):
            cm, cp = SP.large_k_roots(k, eps, cfg)
            s = math.sqrt(cfg.sigma * k / (cfg.rho_minus + cfg.rho_plus))
            devs.append(max(abs(cp / s - 1), abs(cm / s + 1)))
        out.ok = devs[-1] <= 0.02 and devs[0] > devs[1] > devs[2]
        out.detail = "deviation " + ", ".join(f"{d:.2e}" for d in devs) + " (<= 0.02 at 1e4, decreasing)"


def test_criterion_04_exactly_two():
    with criterion(4, "exactly two modes", 60.0) as out:
        cfg = make_exclusion()
        eps = cfg.epsilon
        assert T.exclusion_certificate(cfg).passed
        counts = []
        for k in (0.5, 1.0, 2.0, 5.0, 20.0):
            rect = SP.semicircle_rectangle(k, eps, cfg)
            counts.append(SP.count_eigenvalues(rect, k, eps, cfg))
        out.ok = all(n == 2 for n in counts)
        out.detail = f"counts {counts} == 2"


def test_criterion_05_semicircle():
    with criterion(5, "semicircle containment", 120.0) as out:
        stats = {"worst": -math.inf, "unstable": 0, "configs": 0}

        @settings(max_examples=6, deadline=None, derandomize=True)
        @given(st.floats(0.05, 1.0), st.floats(0.001, 0.1), st.floats(0.2, 2.0), st.floats(0.2, 2.0),
               st.floats(0.2, 2.0))
        def sweep(rho_plus, sigma, jump, slope_up, slope_lo):
            # linear shear on both sides with a velocity jump at the interface
            cfg0 = InterfaceConfig(rho_plus, 1.0, 1.0, sigma, S.poly("upper", 1.0, [jump, slope_up]),
                                   S.poly("lower", 1.0, [0.0, slope_lo]))
            eps = cfg0.epsilon
            a, b = cfg0.ab
            center, radius = 0.5 * (a + b), 0.5 * (b - a) + 1e-9
            stats["configs"] += 1
            for k in np.linspace(0.25, 12.0, 20):
                for g in np.geomspace(0.01, 20.0, 20):
                    for c in SP.find_roots(float(k), eps, cfg0.replace(g=float(g))):
                        if c.imag > 1e-9:
                            stats["unstable"] += 1
                            stats["worst"] = max(stats["worst"], abs(c - center) - radius)

        sweep()
        out.ok = stats["unstable"] > 0 and stats["worst"] <= 0.0
        out.detail = (f"{stats['configs']} configs x 400 (k, g), {stats['unstable']} unstable roots, "
                      f"max(|c - center| - radius) = {stats['worst']:.3e} <= 0")


def test_criterion_06_critical_layer():
    with criterion(6, "critical-layer jump and Y_cauchy", 30.0) as out:
        p = S.poly("lower", 1.0, [0.0, 1.0, 0.2])
        cfg = InterfaceConfig(0.1, 1.0, 9.8, 0.07, S.poly("upper", 1.0, [0.5, 1.0, 0.2]), p)
        c = p.eval(-0.5)[0]
        jump = R.measure_jump(R.solve_fundamental_critical("lower", c, 1.0, p), p).relative_error
        worst = 0.0
        # external speeds: outside the range [U(-1), U(0)] = [-0.8, 0], some close to its ends
        for cx in (-2.0, -0.85, 0.02, 0.3, 1.5):
            ext = R.critical_interface(p, cx, 1.0).Y
            ref = D.Y_cauchy("lower", cx, 1.0, cfg)
            worst = max(worst, abs(ext - ref) / abs(ref))
        out.ok = jump <= 1e-3 and worst <= 1e-3
        out.detail = f"jump rel err {jump:.2e} <= 1e-03, max rel |Y - Y_cauchy| = {worst:.2e} <= 1e-03"


def test_criterion_07_derivatives():
    with criterion(7, "derivative finite differences", 30.0) as out:
        cfg = make_convex()
        a, b = cfg.ab
        rng = np.random.default_rng(7)
        worst = 0.0
        for i in range(50):
            if i % 2:
                c = complex(rng.uniform(a - 1.0, b + 1.0), rng.uniform(0.1, 1.0))
            else:
                c = complex(rng.choice([rng.uniform(a - 2.0, a - 0.05), rng.uniform(b + 0.05, b + 2.0)]))
            K = float(rng.uniform(0.1, 10.0))
            eps = float(rng.uniform(0.01, 0.9))
            k = math.sqrt(K)
            pt = D.evaluate(c, k, eps, cfg)
            hc, hK, he = 1e-5, 1e-5 * (1 + K), 1e-5
            fd_c = (D.F_value(c + hc, k, eps, cfg) - D.F_value(c - hc, k, eps, cfg)) / (2 * hc)
            fd_K = (D.F_value(c, math.sqrt(K + hK), eps, cfg) - D.F_value(c, math.sqrt(K - hK), eps, cfg)) / (2 * hK)
            fd_e = (D.F_value(c, k, eps + he, cfg) - D.F_value(c, k, eps - he, cfg)) / (2 * he)
            for an, fd in ((pt.dF_dc, fd_c), (pt.dF_dK, fd_K), (pt.dF_deps, fd_e)):
                worst = max(worst, abs(an - fd) / abs(an))
        out.ok = worst <= 1e-6
        out.detail = f"max relative error {worst:.2e} <= 1e-06"


def test_criterion_08_concavity_monotonicity():
    with criterion(8, "concavity in K and monotone Y", 30.0) as out:
        cfg = make_convex()
        a, b = cfg.ab
        rng = np.random.default_rng(8)

        def outside():
            return float(rng.choice([rng.uniform(a - 3.0, a - 0.05), rng.uniform(b + 0.05, b + 3.0)]))

        d2_max = -math.inf
        for _ in range(50):
            c, K, eps = outside(), float(rng.uniform(0.05, 30.0)), float(rng.uniform(0.0, 1.0))
            h = 1e-3 * (1 + K)
            f = [D.F_value(c, math.sqrt(K + j * h), eps, cfg).real for j in (-1, 0, 1)]
            d2_max = max(d2_max, f[0] - 2 * f[1] + f[2])
        lo_min, up_max = math.inf, -math.inf
        for _ in range(50):
            c, k = outside(), float(rng.uniform(0.0, 8.0))
            lo_min = min(lo_min, D.dY_dK("lower", c, k, cfg).real)
            up_max = max(up_max, D.dY_dK("upper", c, k, cfg).real)
        out.ok = d2_max < 0 and lo_min > 0 and up_max < 0
        out.detail = (f"max second difference {d2_max:.2e} < 0, min dY-/dK {lo_min:.2e} > 0, "
                      f"max dY+/dK {up_max:.2e} < 0")


def test_criterion_09_threshold_structure():
    with criterion(9, "threshold structure and bifurcation", 120.0) as out:
        cv = make_convex()
        eps = 0.1
        a = cv.ab[0]
        thr = T.g_star(cv, eps).threshold
        above = T.k_star_roots(cv, eps, 2 * thr, a)
        tangent = T.k_star_roots(cv, eps, thr, a)
        pair = T.k_star_roots(cv, eps, thr / 2, a)
        cfg = cv.replace(g=thr / 2)
        lo, hi = pair.roots
        between = D.F_value(a, 0.5 * (lo + hi), eps, cfg).real
        d = T.bifurcation_direction(cfg, eps, a, hi)
        br = SP.continue_branch((hi, a), hi - 1e-3, eps, cfg, "c_minus")
        ci = br.samples[-1].c.imag
        checks = {
            "no roots at 2g*": above.kind == "none" and not above.roots,
            "tangent at g*": tangent.kind == "tangent" and len(tangent.roots) == 1,
            "pair at g*/2": pair.kind == "pair" and len(pair.roots) == 2 and between > 0,
            "predicted unstable below k*+": d.unstable_side == "below" and d.ci_sign > 0,
            "continued Im c > 0": not br.lost and abs(br.samples[-1].k - (hi - 1e-3)) < 1e-12 and ci > 0,
        }
        out.ok = all(checks.values())
        failed = [name for name, ok in checks.items() if not ok]
        out.detail = (f"g* = {thr:.6f}, k* = ({lo:.6f}, {hi:.6f}), F between = {between:.3e}, "
                      f"Im c(k*+ - 1e-3) = {ci:.3e}" + (f", failed: {failed}" if failed else ""))


def test_criterion_10_one_fluid_limit():
    with criterion(10, "eps = 0 matches rho+ = 0", 10.0) as out:
        two = make_convex()
        one = two.replace(rho_plus=0.0)
        ks = [5.0, 4.0, 3.0, 2.0, 1.0, 0.5]
        a, b = two.ab
        starts = [SP.newton_root(c0, ks[0], 0.0, two).c for c0 in (a - 0.5, b + 0.5)]
        assert abs(starts[0] - starts[1]) > 1e-6
        worst = 0.0
        n = 0
        for c0 in starts:
            b2 = SP.continue_branch((ks[0], c0), ks[-1], 0.0, two, k_samples=ks)
            b1 = SP.continue_branch((ks[0], c0), ks[-1], one.epsilon, one, k_samples=ks)
            s2 = {s.k: s.c for s in b2.samples if s.k in ks}
            s1 = {s.k: s.c for s in b1.samples if s.k in ks}
            assert set(s1) == set(s2)
            for k in s1:
                worst = max(worst, abs(s1[k] - s2[k]))
                n += 1
        out.ok = n > 0 and worst <= 1e-12
        out.detail = f"{n} samples on {len(starts)} branches, max |dc| = {worst:.2e} <= 1e-12"
