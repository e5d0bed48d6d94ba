import csv
import json
from pathlib import Path

import pytest

from interface_spectra import thresholds as T
from interface_spectra.cli import main
from interface_spectra.dispersion import kh_roots

from conftest import make_convex, make_kh

ROOT = Path(__file__).resolve().parents[1]
KH_TOML = ROOT / "configs" / "kh.toml"
CONVEX_TOML = ROOT / "configs" / "convex.toml"


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_cfg(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_branches_kh_match_quadratic(tmp_path):
    rc = main(["branches", "--config", str(KH_TOML), "--out", str(tmp_path), "--k-min", "0.5", "--k-max", "3",
               "--k-step", "0.5"])
    assert rc == 0
    kh = make_kh()
    for idx, label in ((0, "c_minus"), (1, "c_plus")):
        rows = read_csv(tmp_path / f"branch_{label}.csv")
        assert list(rows[0]) == ["k", "Re c", "Im c", "class", "|F|", "dF_dc_Re", "dF_dc_Im"]
        assert len(rows) == 6
        for r in rows:
            k = float(r["k"])
            ref = sorted(kh_roots(k, 0.1, kh), key=lambda z: z.real)[idx]
            assert abs(complex(float(r["Re c"]), float(r["Im c"])) - ref) < 1e-9
    events = json.loads((tmp_path / "events.json").read_text())
    assert set(events["events"]) == {"c_minus", "c_plus"}


def test_branches_convex_above_threshold(tmp_path):
    g = 2 * T.g_star(make_convex()).threshold
    rc = main(["branches", "--config", str(CONVEX_TOML), "--out", str(tmp_path), "--k-min", "0", "--k-max", "2",
               "--k-step", "0.5", "--g", str(g)])
    # c_plus enters the upper velocity range at large k and may be reported lost there
    assert rc in (0, 2)
    events = json.loads((tmp_path / "events.json").read_text())["events"]
    assert all(e["kind"] != "lost" for e in events["c_minus"])
    a = make_convex().ab[0]
    rows = read_csv(tmp_path / "branch_c_minus.csv")
    assert float(rows[-1]["k"]) == 0.0
    assert all(float(r["Im c"]) == 0.0 and float(r["Re c"]) < a for r in rows)


def test_missing_sigma(tmp_path, capsys):
    text = KH_TOML.read_text().replace("sigma = 0.07\n", "")
    rc = main(["branches", "--config", str(write_cfg(tmp_path, text)), "--out", str(tmp_path)])
    assert rc == 1
    assert "physics.sigma" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    rc = main(["branches", "--config", str(write_cfg(tmp_path, "spec_version = 1\n[physics\n")), "--out",
               str(tmp_path)])
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_bad_spec_version(tmp_path, capsys):
    text = KH_TOML.read_text().replace("spec_version = 1", "spec_version = 7")
    assert main(["count", "--config", str(write_cfg(tmp_path, text)), "--out", str(tmp_path)]) == 1
    assert "spec_version" in capsys.readouterr().err


def test_bad_tolerance_override(tmp_path):
    assert main(["count", "--config", str(KH_TOML), "--out", str(tmp_path), "--tol-override", "root_scale=-1"]) == 1
    assert main(["count", "--config", str(KH_TOML), "--out", str(tmp_path), "--tol-override", "nope=1"]) == 1


def test_empty_k_range(tmp_path):
    assert main(["count", "--config", str(KH_TOML), "--out", str(tmp_path), "--k-min", "3", "--k-max", "1"]) == 1


def test_lost_branch_partial(tmp_path):
    rc = main(["branches", "--config", str(KH_TOML), "--out", str(tmp_path), "--k-min", "1", "--k-max", "2",
               "--tol-override", "max_iter=1", "--tol-override", "dk_min=0.2"])
    assert rc == 2
    events = json.loads((tmp_path / "events.json").read_text())
    kinds = [e["kind"] for evs in events["events"].values() for e in evs]
    assert "lost" in kinds
    assert (tmp_path / "branch_c_minus.csv").exists()


def test_validate_passes(tmp_path):
    assert main(["validate", "--config", str(CONVEX_TOML), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    assert all(r["status"] == "pass" for r in report)


def test_validate_named_failure(tmp_path):
    text = CONVEX_TOML.read_text().replace('coeffs = [0.0, 1.0, 0.2]', 'coeffs = [0.0, 1.0, -0.2]')
    text = text.replace('coeffs = [0.5, 1.0, 0.2]', 'coeffs = [0.5, 1.0, -0.2]')
    rc = main(["validate", "--config", str(write_cfg(tmp_path, text)), "--out", str(tmp_path)])
    assert rc == 3
    report = {r["name"]: r for r in json.loads((tmp_path / "validate.json").read_text())}
    assert report["expect_convex"]["status"] == "fail"


def test_validate_tolerance_infeasible(tmp_path):
    rc = main(["validate", "--config", str(KH_TOML), "--out", str(tmp_path), "--tol-override", "fd_rel=1e-30"])
    assert rc == 3
    report = {r["name"]: r for r in json.loads((tmp_path / "validate.json").read_text())}
    assert report["F_derivatives_vs_fd"]["status"] == "tolerance-infeasible"


def _sweep(tmp_path, name, *extra):
    out = tmp_path / name
    rc = main(["sweep", "--config", str(KH_TOML), "--out", str(out), "--k-min", "1", "--k-max", "2", "--k-step", "1",
               *extra])
    return rc, out


def test_sweep_matches_branches_and_is_deterministic(tmp_path):
    rc, out = _sweep(tmp_path, "s1", "--jobs", "2")
    assert rc == 0
    _, out2 = _sweep(tmp_path, "s2")
    for label in ("c_minus", "c_plus"):
        assert (out / f"sweep_{label}.csv").read_bytes() == (out2 / f"sweep_{label}.csv").read_bytes()
    main(["branches", "--config", str(KH_TOML), "--out", str(tmp_path / "b"), "--k-min", "1", "--k-max", "2",
          "--k-step", "1"])
    for label in ("c_minus", "c_plus"):
        sw = read_csv(out / f"sweep_{label}.csv")
        br = read_csv(tmp_path / "b" / f"branch_{label}.csv")
        assert [(r["k"], r["Re c"], r["Im c"], r["class"]) for r in sw] == \
               [(r["k"], r["Re c"], r["Im c"], r["class"]) for r in br]
        for r in sw:
            assert float(r["growth_rate"]) == pytest.approx(float(r["k"]) * float(r["Im c"]), abs=1e-15)


def test_sweep_eps0_equals_one_fluid(tmp_path):
    rc, out = _sweep(tmp_path, "s", "--eps", "0,1e-3")
    assert rc == 0
    text = KH_TOML.read_text().replace("rho_plus = 0.1", "rho_plus = 0.0")
    main(["branches", "--config", str(write_cfg(tmp_path, text)), "--out", str(tmp_path / "one"), "--k-min", "1",
          "--k-max", "2", "--k-step", "1"])
    for label in ("c_minus", "c_plus"):
        rows = [r for r in read_csv(out / f"sweep_{label}.csv") if float(r["eps"]) == 0.0]
        one = read_csv(tmp_path / "one" / f"branch_{label}.csv")
        assert [(r["k"], r["Re c"], r["Im c"]) for r in rows] == [(r["k"], r["Re c"], r["Im c"]) for r in one]


def test_json_format_round_trip(tmp_path):
    rc = main(["branches", "--config", str(KH_TOML), "--out", str(tmp_path), "--k-min", "1", "--k-max", "2",
               "--k-step", "1", "--format", "json"])
    assert rc == 0
    rows = json.loads((tmp_path / "branch_c_plus.json").read_text())
    assert [r["k"] for r in rows] == [2.0, 1.0]
    assert main(["thresholds", "--config", str(CONVEX_TOML), "--out", str(tmp_path)]) == 0
    rep = T.ThresholdReport.from_json((tmp_path / "thresholds.json").read_text())
    assert rep.c0 == pytest.approx(T.c0_solve(make_convex()))


def test_dispersion_and_count(tmp_path):
    assert main(["dispersion", "--config", str(CONVEX_TOML), "--out", str(tmp_path), "--k-min", "1", "--k-max", "1"]) == 0
    rows = read_csv(tmp_path / "dispersion.csv")
    assert len(rows) == 12
    fund = read_csv(tmp_path / "fundamental_lower.csv")
    assert list(fund[0]) == ["x2", "Re y", "Im y", "Re y'", "Im y'"]
    assert main(["count", "--config", str(KH_TOML), "--out", str(tmp_path), "--k-min", "2", "--k-max", "2"]) == 0
    assert read_csv(tmp_path / "count.csv")[0]["count"] == "2"
