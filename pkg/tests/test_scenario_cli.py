import copy
import csv
import json
import os

import pytest
from hypothesis import given, strategies as st

from cfpenrose import ConfigInvalid, scenario as scn
from cfpenrose.cli import main

HERE = os.path.dirname(__file__)
SWEEPS = os.path.join(HERE, os.pardir, "sweeps")

BASE = {"name": "unit-zas", "n": 3,
        "domain": {"components": [{"radial": {"kind": "constant", "r": 1.0}}]},
        "factor": {"recipe": "dirichlet-zas"}, "suite": ["thm_zas", "pfs"]}


def _mutated(fn):
    d = copy.deepcopy(BASE)
    fn(d)
    return d


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- parsing -------------------------------------------------------------------------

def test_bundled_scenarios_parse():
    names = scn.bundled_names()
    assert len(names) >= 8
    for name in names:
        sc = scn.load_bundled(name)
        assert sc.name == name
        assert sc.suite


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d.pop("n"), "/n"),
    (lambda d: d.update(n="three"), "/n"),
    (lambda d: d.update(n=2), "/n"),
    (lambda d: d.pop("factor"), "/factor"),
    (lambda d: d["factor"].update(recipe="wormhole"), "/factor/recipe"),
    (lambda d: d["domain"]["components"][0]["radial"].update(r=-1.0), "/domain"),
    (lambda d: d["domain"]["components"][0]["radial"].update(kind="cube"),
     "/domain/components/0/radial"),
    (lambda d: d.update(suite=["thm_zas", "thm_main"]), "/suite/1"),
    (lambda d: d.update(suite=["unknown"]), "/suite/0"),
    (lambda d: d["factor"].update(m=1.0), "/factor/m"),
    (lambda d: d.update(domain_minus=d["domain"]), "/domain_minus"),
    (lambda d: d.update(solver={"resolution": 2}), "/solver/resolution"),
    (lambda d: d.update(solver={"residual_threshold": "small"}), "/solver/residual_threshold"),
    (lambda d: d.update(extra=1), ""),
])
def test_malformed_scenarios_carry_pointers(mutate, where):
    with pytest.raises(ConfigInvalid) as info:
        scn.parse(_mutated(mutate))
    assert info.value.pointer == where


def test_schwarzschild_recipe_builds_its_own_horizon():
    sc = scn.parse({"name": "s", "n": 4, "factor": {"recipe": "schwarzschild", "m": 2.0},
                    "suite": ["thm_main"]})
    assert sc.domain.components[0].radial.r == pytest.approx(1.0)
    with pytest.raises(ConfigInvalid) as info:
        scn.parse({"name": "s", "n": 4, "factor": {"recipe": "schwarzschild", "m": 2.0},
                   "domain": BASE["domain"], "suite": ["thm_main"]})
    assert info.value.pointer == "/domain"


def test_pole_outside_domain_is_config_error():
    d = _mutated(lambda d: d.update(factor={"recipe": "pole-family",
                                            "poles": [{"x": [3, 0, 0], "a": 0.5}]},
                                    suite=["thm_main"]))
    with pytest.raises(ConfigInvalid) as info:
        scn.parse(d)
    assert info.value.pointer == "/factor"


def test_overrides_reparse():
    sc = scn.parse(BASE).with_overrides(12, 5)
    assert sc.resolution == 12 and sc.seed == 5
    with pytest.raises(ConfigInvalid):
        scn.parse(BASE).with_overrides(2, None)


def test_bad_json_text():
    with pytest.raises(ConfigInvalid):
        scn.loads("{not json")


# --- placeholders and grids ----------------------------------------------------------

def test_placeholders_in_order():
    t = {"name": "x-${b}-${a}", "n": "${n}", "list": ["${a}", 1]}
    assert scn.placeholders(t) == ["b", "a", "n"]


@given(st.one_of(st.integers(-100, 100), st.floats(-1e6, 1e6), st.booleans()))
def test_whole_placeholder_keeps_type(v):
    out = scn.substitute({"x": "${v}", "y": "v=${v}"}, {"v": v})
    assert out["x"] == v and type(out["x"]) is type(v)
    assert out["y"] == f"v={v}"


def test_missing_placeholder_value():
    with pytest.raises(ConfigInvalid) as info:
        scn.substitute({"a": ["${q}"]}, {})
    assert info.value.pointer == "/a/0"


def test_grid_forms():
    assert scn.grid_points({"a": [1, 2], "b": [3]}) == [{"a": 1, "b": 3}, {"a": 2, "b": 3}]
    assert scn.grid_points([{"a": 1}]) == [{"a": 1}]
    assert scn.grid_points({"points": [{"a": 1}]}) == [{"a": 1}]
    assert scn.grid_points({}) == []
    with pytest.raises(ConfigInvalid):
        scn.grid_points({"a": 1})
    with pytest.raises(ConfigInvalid):
        scn.grid_points([1, 2])


# --- the command line ------------------------------------------------------------------

def test_run_writes_reports(tmp_path, capsys):
    code = main(["run", "schwarzschild-n3-m1", "--out-dir", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "schwarzschild-n3-m1.report.json").read_text())
    assert rep["verdict"] == "holds"
    assert rep["exit_code"] == 0
    main_rep = next(r for r in rep["reports"] if r["theorem"] == "thm_main")
    assert main_rep["margin"] == pytest.approx(0.5, abs=1e-6)
    assert (tmp_path / "schwarzschild-n3-m1.convergence.json").exists()
    rows = _read_csv(tmp_path / "schwarzschild-n3-m1.csv")
    assert len(rows) == 1 and rows[0]["verdict"] == "holds"
    assert "thm_main" in capsys.readouterr().out


def test_run_format_json_only(tmp_path):
    assert main(["run", "schwarzschild-n3-m1", "--format", "json", "--out-dir", str(tmp_path)]) == 0
    assert sorted(os.listdir(tmp_path)) == ["schwarzschild-n3-m1.convergence.json",
                                            "schwarzschild-n3-m1.report.json"]


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "two-horizons-n3", "--out-dir", str(d)]) == 0
    for f in os.listdir(a):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_hypothesis_failure_is_inconclusive(tmp_path):
    # the dumbbell is not mean-convex, so the Minkowski verifier cannot run
    assert main(["run", "dumbbell-n3", "--out-dir", str(tmp_path)]) == 2
    rep = json.loads((tmp_path / "dumbbell-n3.report.json").read_text())
    mk = [r for r in rep["reports"] if r["theorem"] == "minkowski"]
    assert mk and all(r["verdict"] == "inconclusive" for r in mk)
    assert mk[0]["details"]["hypothesis"] == "mean-convexity"


def test_config_error_exit(tmp_path, capsys):
    path = _write(tmp_path, "bad.json", _mutated(lambda d: d.update(n="x")))
    assert main(["run", path, "--out-dir", str(tmp_path)]) == 64
    assert "/n" in capsys.readouterr().err
    assert main(["run", "no-such-scenario"]) == 64
    assert main(["run", "schwarzschild-n3-m1", "--resolution", "2"]) == 64
    assert main(["frobnicate"]) == 64


def test_solver_failure_exit(tmp_path):
    d = _mutated(lambda d: d.update(
        domain={"components": [{"radial": {"kind": "axisymmetric", "profile": "cosine",
                                           "coeffs": [1.0, 0.3, 0.1]}}]},
        solver={"resolution": 8, "residual_threshold": 1e-15}))
    assert main(["run", _write(tmp_path, "tight.json", d), "--out-dir", str(tmp_path)]) == 70


def test_sweep_schwarzschild_chain(tmp_path):
    code = main(["sweep", os.path.join(SWEEPS, "schwarzschild-chain.json"),
                 "--grid", os.path.join(SWEEPS, "schwarzschild-chain.grid.json"),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    rows = _read_csv(tmp_path / "schwarzschild-chain.sweep.csv")
    assert len(rows) == 15
    for r in rows:
        assert r["verdict"] == "holds"
        assert float(r["thm_main_margin"]) == pytest.approx(float(r["m"]) / 2, abs=1e-6)
        assert float(r["m_adm"]) == pytest.approx(float(r["m"]), abs=1e-8)
    sweep = json.loads((tmp_path / "schwarzschild-chain.sweep.json").read_text())
    assert len(sweep["reports"]) == 15


@pytest.mark.slow
def test_sweep_spheroid_aspect_monotone(tmp_path):
    code = main(["sweep", os.path.join(SWEEPS, "spheroid-aspect.json"),
                 "--grid", os.path.join(SWEEPS, "spheroid-aspect.grid.json"),
                 "--format", "csv", "--out-dir", str(tmp_path)])
    assert code == 0
    caps = [float(r["capacity"]) for r in _read_csv(tmp_path / "spheroid-aspect.sweep.csv")]
    assert len(caps) == 5
    assert all(b > a for a, b in zip(caps, caps[1:]))


def test_sweep_empty_grid_writes_header_only(tmp_path):
    template = _write(tmp_path, "t.json", _mutated(lambda d: d.update(name="z-${r}")))
    grid = _write(tmp_path, "g.json", {})
    assert main(["sweep", template, "--grid", grid, "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "t.sweep.csv").read_text()
    assert text.count("\n") == 1
    assert text.startswith("point,r,scenario,")


def test_sweep_reports_worst_exit(tmp_path):
    template = _write(tmp_path, "t.json", _mutated(lambda d: d.update(name="z", n="${n}")))
    grid = _write(tmp_path, "g.json", {"n": [3, 2]})
    assert main(["sweep", template, "--grid", grid, "--out-dir", str(tmp_path)]) == 64
    rows = _read_csv(tmp_path / "t.sweep.csv")
    assert [r["status"] for r in rows] == ["ok", "config_error"]


def test_sweep_rejects_templated_suite(tmp_path):
    template = _write(tmp_path, "t.json", _mutated(lambda d: d.update(suite="${s}")))
    grid = _write(tmp_path, "g.json", {"s": [["pfs"]]})
    assert main(["sweep", template, "--grid", grid, "--out-dir", str(tmp_path)]) == 64


def test_capacity_command(tmp_path, capsys):
    dom = {"n": 3, "components": [{"center": [0, 0, 0], "radial": {"kind": "constant", "r": 2.0}}]}
    path = _write(tmp_path, "ball.json", dom)
    assert main(["capacity", path, "--out-dir", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["capacity"] == pytest.approx(2.0, rel=1e-10)
    assert json.loads((tmp_path / "ball.capacity.json").read_text()) == out
    # a scenario file is accepted too
    assert main(["capacity", _write(tmp_path, "sc.json", BASE)]) == 0
    bad = _write(tmp_path, "bad.json", {"components": []})
    assert main(["capacity", bad]) == 64


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in scn.bundled_names():
        assert name in out
