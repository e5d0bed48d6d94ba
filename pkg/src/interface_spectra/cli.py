"""Command line driver: branches, dispersion grids, thresholds, counts, validation and sweeps.

Exit codes: 0 ok, 1 configuration error, 2 partial result (a branch was lost or a sweep
cell failed), 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import dispersion as D
from . import rayleigh as R
from . import spectrum as SP
from . import thresholds as T
from .config import RunSpec, apply_overrides, load_config
from .errors import ConfigError, SpectraError
from .validate import VALIDATE_DEFAULTS, report_json, run_validate

log = logging.getLogger("interface_spectra")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_VALIDATION = 0, 1, 2, 3
FLOAT_FMT = "%.12e"
BRANCH_COLUMNS = ["k", "Re c", "Im c", "class", "|F|", "dF_dc_Re", "dF_dc_Im"]
SWEEP_COLUMNS = ["k", "eps", "g", "Re c", "Im c", "class", "growth_rate"]
BRANCH_LABELS = ("c_minus", "c_plus")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return FLOAT_FMT % v


def _round12(v):
    """Float rounded to the 12-digit serialization used in CSVs."""
    return float(FLOAT_FMT % v) if isinstance(v, float) else v


def write_table(path: Path, columns: Sequence[str], rows, fmt: str) -> Path:
    path = path.with_suffix("." + fmt)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    else:
        data = [dict(zip(columns, (_round12(v) for v in r))) for r in rows]
        path.write_text(json.dumps(data, indent=1) + "\n")
    return path


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# branches


@dataclass
class BranchRun:
    eps: float
    g: float
    branches: Dict[str, SP.Branch]
    k_start: float
    error: str = ""

    @property
    def lost(self) -> bool:
        return bool(self.error) or any(b.lost for b in self.branches.values())


def compute_branches(spec: RunSpec, eps: float, g: Optional[float] = None) -> BranchRun:
    """Both branches from the large-k fixed points down to grid.k_min, sampled on the grid."""
    cfg = spec.interface if g is None else spec.interface.replace(g=g)
    ks = spec.grid.ks()
    tol = spec.tol
    k0 = max(ks[0], SP.k_large(eps, cfg, tol))
    cm, cp = SP.large_k_roots(k0, eps, cfg, tol)
    out = {}
    for label, c in zip(BRANCH_LABELS, (cm, cp)):
        br = SP.continue_branch((k0, c), ks[-1], eps, cfg, label, tol, k_samples=ks)
        keep = set(ks)
        br.samples = [s for s in br.samples if s.k in keep]
        out[label] = br
    return BranchRun(eps, cfg.g, out, k0)


def run_branches(spec: RunSpec, out: Path, fmt: str, eps: float) -> int:
    run = compute_branches(spec, eps)
    events = {}
    for label, br in run.branches.items():
        write_table(out / f"branch_{label}", BRANCH_COLUMNS, br.to_rows(), fmt)
        events[label] = br.events_json()
    write_json(out / "events.json", {"eps": eps, "g": run.g, "k_start": run.k_start, "events": events})
    if run.lost:
        log.warning("a branch was lost; partial result written")
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# dispersion grid


def _c_grid(spec: RunSpec) -> List[complex]:
    d = spec.dispersion
    a, b = spec.interface.ab
    w = max(b - a, 1.0)
    lo, hi, n = d.get("c_re", [a - 0.5 * w, b + 0.5 * w, 11])
    n = int(n)
    re = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if n > 1 else [lo]
    im = [float(v) for v in d.get("c_im", [0.0])]
    return [complex(r, i) for i in im for r in re]


DISPERSION_COLUMNS = ["Re c", "Im c", "k", "eps", "Re F", "Im F", "dF_dc_Re", "dF_dc_Im",
                      "dF_dK_Re", "dF_dK_Im", "dF_deps_Re", "dF_deps_Im", "flags"]
FUNDAMENTAL_COLUMNS = ["x2", "Re y", "Im y", "Re y'", "Im y'"]


def run_dispersion(spec: RunSpec, out: Path, fmt: str, eps: float) -> int:
    cfg = spec.interface
    rows = []
    for k in sorted(spec.grid.ks()):
        for c in _c_grid(spec):
            try:
                p = D.evaluate(c, k, eps, cfg)
            except SpectraError as exc:
                rows.append((c.real, c.imag, k, eps) + (float("nan"),) * 8 + (type(exc).__name__,))
                continue
            rows.append((c.real, c.imag, k, eps, p.F.real, p.F.imag, p.dF_dc.real, p.dF_dc.imag,
                         p.dF_dK.real, p.dF_dK.imag, p.dF_deps.real, p.dF_deps.imag,
                         ";".join(sorted(p.flags)) or "-"))
    write_table(out / "dispersion", DISPERSION_COLUMNS, rows, fmt)
    fund = spec.dispersion.get("fundamental")
    if fund:
        side = fund.get("side", "lower")
        c = complex(float(fund.get("c_re", 0.0)), float(fund.get("c_im", 0.0)))
        k = float(fund.get("k", 1.0))
        prof = cfg.profile(side)
        if R.needs_critical_path(prof, c):
            f = R.solve_fundamental_critical(side, c, k, cfg)
        else:
            f = R.solve_fundamental(side, c, k, cfg)
        frows = [(x, y.real, y.imag, yp.real, yp.imag) for x, y, yp in f.samples]
        write_table(out / f"fundamental_{side}", FUNDAMENTAL_COLUMNS, frows, fmt)
    return EXIT_OK


# ---------------------------------------------------------------------------
# thresholds and counts


def run_thresholds(spec: RunSpec, out: Path, fmt: str, eps: float) -> int:
    rep = T.threshold_report(spec.interface, eps)
    (out / "thresholds.json").write_text(rep.to_json() + "\n")
    return EXIT_OK


COUNT_COLUMNS = ["k", "count", "raw_Re", "raw_Im", "nodes"]


def run_count(spec: RunSpec, out: Path, fmt: str, eps: float) -> int:
    cfg = spec.interface
    rows = []
    status = EXIT_OK
    for k in sorted(spec.grid.ks()):
        try:
            rect = SP.semicircle_rectangle(k, eps, cfg)
            res = SP.count_eigenvalues(rect, k, eps, cfg, details=True)
            rows.append((k, str(res.n), res.raw.real, res.raw.imag, str(res.nodes)))
        except SpectraError as exc:
            log.warning("count failed at k=%g: %s", k, exc)
            rows.append((k, "failed", float("nan"), float("nan"), "0"))
            status = EXIT_PARTIAL
    write_table(out / "count", COUNT_COLUMNS, rows, fmt)
    return status


# ---------------------------------------------------------------------------
# sweep


def _sweep_cell(args: Tuple[RunSpec, float, float]) -> BranchRun:
    spec, eps, g = args
    try:
        return compute_branches(spec, eps, g)
    except SpectraError as exc:
        return BranchRun(eps, g, {}, float("nan"), f"{type(exc).__name__}: {exc}")


def run_sweep(spec: RunSpec, out: Path, fmt: str, eps_list: List[float], g_list: List[float], jobs: int) -> int:
    cells = [(spec, e, g) for e, g in itertools.product(eps_list, g_list)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_sweep_cell, cells))
    else:
        runs = [_sweep_cell(c) for c in cells]
    # single collector, cells in axis order
    failures = []
    for label in BRANCH_LABELS:
        rows = []
        for run in runs:
            br = run.branches.get(label)
            if br is None:
                continue
            for s in br.samples:
                rows.append((s.k, run.eps, run.g, s.c.real, s.c.imag, s.mode.value, s.k * s.c.imag))
        write_table(out / f"sweep_{label}", SWEEP_COLUMNS, rows, fmt)
    for run in runs:
        if run.error:
            failures.append({"eps": run.eps, "g": run.g, "error": run.error})
        for label, br in run.branches.items():
            if br.lost:
                failures.append({"eps": run.eps, "g": run.g, "branch": label,
                                 "lost_at": [e.k for e in br.events if e.kind == "lost"]})
    write_json(out / "sweep_failures.json", failures)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# validate


def run_validate_cmd(spec: RunSpec, out: Path, fmt: str, eps: float, vt: Dict[str, float]) -> int:
    results = run_validate(spec, eps, vt)
    write_json(out / "validate.json", report_json(results))
    for r in results:
        m = "-" if r.measured is None else f"{r.measured:.3e}"
        print(f"{r.status:>20}  {r.name}  measured={m}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# argument handling


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _key_val(text: str) -> Tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VAL, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="interface-spectra", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=["branches", "dispersion", "thresholds", "count", "validate", "sweep"])
    ap.add_argument("--config", required=True, help="TOML configuration file")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweep cells")
    ap.add_argument("--k-min", type=float)
    ap.add_argument("--k-max", type=float)
    ap.add_argument("--k-step", type=float)
    ap.add_argument("--eps", type=_float_list, help="comma-separated density ratios")
    ap.add_argument("--g", type=_float_list, help="comma-separated gravities")
    ap.add_argument("--tol-override", type=_key_val, action="append", default=[], metavar="KEY=VAL")
    return ap


def _setup_logging():
    level = os.environ.get("INTERFACE_SPECTRA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def prepare(args) -> Tuple[RunSpec, Dict[str, float]]:
    spec = load_config(args.config)
    grid = spec.grid
    for name in ("k_min", "k_max", "k_step"):
        v = getattr(args, name)
        if v is not None:
            grid = replace(grid, **{name: v})
    if args.eps is not None:
        grid = replace(grid, eps=args.eps)
    if args.g is not None:
        grid = replace(grid, g=args.g)
    grid.ks()
    solver, vt = {}, {}
    for key, val in args.tol_override:
        if key in VALIDATE_DEFAULTS:
            try:
                vt[key] = float(val)
            except ValueError as exc:
                raise ConfigError(f"tolerance '{key}' must be numeric, got {val!r}") from exc
            if not vt[key] > 0:
                raise ConfigError(f"tolerance '{key}' must be positive, got {val!r}")
        else:
            solver[key] = val
    tol = apply_overrides(spec.tol, solver)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return replace(spec, grid=grid, tol=tol), vt


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        spec, vt = prepare(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    eps_list = spec.grid.eps or [spec.interface.epsilon]
    g_list = spec.grid.g or [spec.interface.g]
    cmd = args.subcommand
    if cmd != "sweep" and (len(eps_list) > 1 or len(g_list) > 1):
        print("config error: several eps or g values need the sweep subcommand", file=sys.stderr)
        return EXIT_CONFIG
    if cmd != "sweep" and g_list[0] != spec.interface.g:
        spec = replace(spec, interface=spec.interface.replace(g=g_list[0]))
    eps = eps_list[0]
    try:
        if cmd == "branches":
            return run_branches(spec, out, args.format, eps)
        if cmd == "dispersion":
            return run_dispersion(spec, out, args.format, eps)
        if cmd == "thresholds":
            return run_thresholds(spec, out, args.format, eps)
        if cmd == "count":
            return run_count(spec, out, args.format, eps)
        if cmd == "validate":
            return run_validate_cmd(spec, out, args.format, eps, vt)
        return run_sweep(spec, out, args.format, eps_list, g_list, args.jobs)
    except SpectraError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
