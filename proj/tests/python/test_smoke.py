import math
import os
from pathlib import Path

import pytest

import tdvsa

DATA = Path(os.environ.get("TDVSA_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_ieee9_case_file():
    net = tdvsa.load_network(str(DATA / "cases" / "ieee9.json"))
    assert len(net) == 9
    assert net.kind == "transmission"
    assert net.total_load_mw() == pytest.approx(315.0)
    assert net.to_dict() == tdvsa.ieee9().to_dict()


def test_base_power_flow():
    sol = tdvsa.solve(tdvsa.ieee9())
    assert sol["converged"]
    assert len(sol["buses"]) == 9


def test_feeder_pv_curve_invariants():
    feeder = tdvsa.feeder("D1", [0.0646] * 3, load_mw=9.0, load_mvar=3.0)
    curve = tdvsa.trace_pv(feeder, 4, direction_scale=1.5, v_b=1.0)
    assert curve["termination"] == "nose_passed"
    lam, nose = curve["lambda"], curve["nose_index"]
    assert lam[0] == 0.0
    assert max(lam) == curve["lambda_max"] == lam[nose]
    assert all(b > a for a, b in zip(lam[: nose + 1], lam[1 : nose + 1]))
    # a lower substation voltage lowers the nose
    assert tdvsa.trace_pv(feeder, 4, direction_scale=1.5, v_b=0.95)["lambda_max"] < curve["lambda_max"]


def test_t_vsa_lambda():
    curve = tdvsa.trace_pv(tdvsa.ieee9(), 5, direction_scale=1.5)
    assert curve["lambda_max"] == pytest.approx(0.99, abs=0.05)


def test_hypersurface_is_monotone():
    f = tdvsa.feeder("D2", [0.068] * 3, load_mw=4.5, load_mvar=1.5)
    pts = tdvsa.hypersurface(f, vb_min=0.5, vb_max=1.1, vb_step=0.05, direction_scale=1.5, threads=2)
    lams = [lam for _, lam in pts]
    assert lams == sorted(lams)
    assert all(v2 > v1 for (v1, _), (v2, _) in zip(pts, pts[1:]))


def test_compose_and_td_vsa():
    f = tdvsa.feeder("D1", [0.0646] * 3, load_mw=9.0, load_mvar=3.0)
    td = tdvsa.compose_td(tdvsa.ieee9(), 5, f, 10)
    assert td.kind == "integrated"
    res = tdvsa.td_vsa(td, direction_scale=1.5)
    assert 0.0 < res["lambda_td_max"] < 0.99
    shed = tdvsa.apply_load_shed(td, 5, 15.0)
    assert shed.total_load_mw() == pytest.approx(td.total_load_mw() - 15.0)
    der = tdvsa.apply_der(td, 0.2)
    assert der.total_load_mw() == pytest.approx(td.total_load_mw())
    with pytest.raises(tdvsa.ModelError):
        tdvsa.compose_td(tdvsa.ieee9(), 5, f, 3)


def test_scenarios(tmp_path):
    a = DATA / "scenarios" / "case_a.json"
    assert tdvsa.validate_scenario(a) == []
    out = tdvsa.run_scenario(a, out_dir=tmp_path)
    report = out["report"]
    assert report["classification"]["case"] == "A"
    assert report["classification"]["lambda_cut"] < report["t_vsa"]["lambda_max"]
    assert "Table I" in out["tables"]
    for name in ("t_pv.csv", "h_surface.csv", "td_pv.csv", "report.json", "tables.txt"):
        assert (tmp_path / name).exists()
    b = tdvsa.run_scenario(DATA / "scenarios" / "case_b.json")
    assert b["report"]["classification"]["case"] == "B"


def test_infeasible_base_case_raises():
    f = tdvsa.feeder("D1", [5.0] * 3, load_mw=9.0, load_mvar=3.0)
    with pytest.raises(tdvsa.InfeasibleError):
        tdvsa.d_vsa(f)
    assert math.isfinite(tdvsa.d_vsa(tdvsa.feeder("D1", [0.0646] * 3, 9.0, 3.0), direction_scale=1.5)["mw"])
