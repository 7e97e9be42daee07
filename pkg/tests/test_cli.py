import csv
import json

import pytest

from deepcycle.cli import main, strip_wall_clock
from deepcycle.emission import read_samples_csv
from deepcycle.engine.mps import read_mps
from deepcycle.formulation import LEVELS, assemble
from deepcycle.grid import bundled_case_path, load_case, with_wind

SMALL = {
    "name": "small", "horizon": 4,
    "network": {"buses": [{"id": 1, "reference": True}, {"id": 2}],
                "lines": [{"from": 1, "to": 2, "susceptance": 10.0, "capacity": 80.0, "name": "L12"}]},
    "generators": [
        {"id": "C", "bus": 1, "kind": "coal", "g_min": 10, "g_max": 60, "ramp_limit": 40,
         "offer_blocks": [[25, 7], [20, 10], [15, 15]], "initial_commitment": True, "initial_output": 25},
        {"id": "P", "bus": 2, "kind": "gas", "g_min": 0, "g_max": 50, "ramp_limit": 50,
         "offer_blocks": [[50, 30]], "no_load_cost": 10, "startup_cost": 40,
         "initial_commitment": False, "initial_output": 0},
    ],
    "coal_plants": [{"generator": "C", "eol": 30}],
    "profiles": {"load": [[10, 20], [20, 30], [15, 45], [10, 25]]},
}


@pytest.fixture
def small_case(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def test_validate_ok_and_bad(tmp_path, small_case, capsys):
    assert main(["validate", "--case", str(small_case)]) == 0
    assert "OK" in capsys.readouterr().out
    assert main(["validate"]) == 0
    bad = dict(SMALL, generators=[dict(SMALL["generators"][0], bus=99)], coal_plants=[])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["validate", "--case", str(path)]) == 2
    assert "99" in capsys.readouterr().out


def test_solve_writes_outputs(tmp_path, small_case):
    out = tmp_path / "out"
    code = main(["solve", "--case", str(small_case), "--levels", "zeros,high", "--wind", "off", "--out", str(out)])
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["complete"] and len(man["runs"]) == 2
    assert all(r["status"] == "optimal" for r in man["runs"])
    for name in ("comparison_wind_off.csv", "comparison_wind_off.txt", "plot_data.csv",
                 "wind_off_zeros/dispatch.csv"):
        assert (out / name).exists()


def test_manifest_reproducible_without_wall_clock(tmp_path, small_case):
    docs = []
    for d in ("a", "b"):
        out = tmp_path / d
        assert main(["solve", "--case", str(small_case), "--levels", "low", "--wind", "off", "--out", str(out)]) == 0
        docs.append(strip_wall_clock(json.loads((out / "manifest.json").read_text())))
    assert docs[0] == docs[1]
    assert (tmp_path / "a" / "wind_off_low" / "dispatch.csv").read_bytes() == \
        (tmp_path / "b" / "wind_off_low" / "dispatch.csv").read_bytes()


def test_solve_config_file_and_flag_precedence(tmp_path, small_case):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"levels": "zeros,low", "wind": "off", "mip_gap": 1e-3}))
    out = tmp_path / "out"
    assert main(["solve", "--config", str(conf), "--case", str(small_case), "--levels", "high", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert [lv["label"] for lv in man["options"]["levels"]] == ["high"]
    assert man["options"]["solver"]["mip_gap"] == 1e-3


def test_unwritable_output(tmp_path, small_case, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["solve", "--case", str(small_case), "--levels", "zeros", "--wind", "off",
                 "--out", str(blocker / "sub")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "Traceback" not in err


def test_input_errors_exit_two(tmp_path, small_case):
    assert main(["solve", "--case", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["solve", "--case", str(small_case), "--levels", "nonsense", "--out", str(tmp_path)]) == 2
    assert main(["solve", "--case", str(small_case), "--mip-gap", "-1", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["solve", "--wind", "sideways"])


def test_infeasible_run_exits_one(tmp_path):
    # bus 2 needs 60 MW, its unit offers 50 and the line carries 1
    doc = dict(SMALL, profiles={"load": [[10, 60]] * 4})
    doc["network"] = dict(SMALL["network"], lines=[dict(SMALL["network"]["lines"][0], capacity=1.0)])
    path = tmp_path / "short.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", "--case", str(path)]) == 0
    out = tmp_path / "o"
    assert main(["solve", "--case", str(path), "--levels", "zeros", "--wind", "off", "--out", str(out)]) == 1
    man = json.loads((out / "manifest.json").read_text())
    assert not man["complete"] and man["runs"][0]["status"] == "infeasible"


def test_synth_deterministic_and_empty(tmp_path):
    a, b, z = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "z.csv"
    for p in (a, b):
        assert main(["synth", str(p), "--count", "40", "--seed", "7"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_samples_csv(a)) == 40
    assert main(["synth", str(z), "--count", "0"]) == 0
    assert len(z.read_text().strip().splitlines()) == 1


def test_fit_round_trip(tmp_path):
    samples = tmp_path / "s.csv"
    assert main(["synth", str(samples), "--count", "600", "--noise", "0", "--seed", "3"]) == 0
    out = tmp_path / "fit"
    assert main(["fit", str(samples), "--out", str(out), "--threshold", "300"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["static"]["params"]["f0"] == pytest.approx(11.53, rel=1e-3)
    assert man["dynamic"]["params"]["b"] == pytest.approx(6.12, rel=1e-3)
    with open(out / "fit_residuals.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 600
    assert max(abs(float(r["residual_tCO2"])) for r in rows) <= 1e-3


def test_fit_static_only(tmp_path, capsys):
    samples = tmp_path / "s.csv"
    with open(samples, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["g_prev", "g", "g_next", "emission_tCO2"])
        for g in range(100, 601, 50):
            w.writerow([g, g, g, 11.53 + 0.86 * g**1.02])
    assert main(["fit", str(samples), "--out", str(tmp_path / "fit")]) == 0
    assert "not identified" in capsys.readouterr().out


def test_export_counts_and_reimport(tmp_path):
    out = tmp_path / "mps"
    assert main(["export", "--levels", "zeros,high", "--wind", "both", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["files"]) == 4
    base = load_case(bundled_case_path())
    for f in man["files"]:
        wind = f["file"].startswith("wind_on")
        level = f["file"].split("_", 2)[2].removesuffix(".mps")
        p, _ = assemble(with_wind(base, wind), level=LEVELS[level])
        q = read_mps(out / f["file"])
        assert (q.n_rows, q.n_cols, int(q.integer.sum())) == (p.n_rows, p.n_cols, int(p.integer.sum()))
        assert (f["rows"], f["cols"]) == (p.n_rows, p.n_cols)
