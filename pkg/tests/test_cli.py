import csv
import io
import json
import math

import numpy as np
import pytest

from gss_states.cli import (
    SUMMARY_COLUMNS,
    TABLE_COLUMNS,
    RunReport,
    example2_formula,
    export_state,
    import_state,
    load_config,
    main,
    parse_config,
    run_scenario,
    table_example2,
)
from gss_states.exceptions import ConfigError, InvalidStateError, StateFileError
from gss_states.qmath import QuantumState, Role, Subsystem, SystemLayout, random_density_matrix
from gss_states.states import gss_from_spec, random_gss_spec, upsilon1


def config(scenario, tasks, **top):
    return {"schema_version": 1, "scenario": scenario, "tasks": tasks, **top}


def write_json(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def run(cfg):
    return run_scenario(parse_config(cfg))


# --- scenario runs ------------------------------------------------------


def test_upsilon1_verify():
    rep = run(config({"kind": "upsilon1"}, [{"task": "verify", "expect": {"verdict": "NotGSS"}}]))
    r = rep.results[0]
    assert rep.exit_code == 0
    assert r["outcome"] == "NotGSS" and r["expectation"]["met"]
    assert r["details"]["witness"]["chi"] == pytest.approx(1.0, abs=1e-10)


def test_ghz_verify_and_rate():
    rep = run(config({"kind": "ghz", "n": 3, "d": 2},
                     [{"task": "verify", "expect": {"verdict": "GSS"}},
                      {"task": "rate", "expect": {"value": 1.0, "tol": 1e-9}}]))
    assert rep.exit_code == 0
    assert rep.results[1]["value"] == pytest.approx(1.0, abs=1e-10)


def test_werner_negativity():
    rep = run(config({"kind": "example2_werner", "d": 2, "p": 0.25},
                     [{"task": "negativity", "expect": {"value": 1.70044, "tol": 1e-6}}]))
    assert rep.exit_code == 0
    assert rep.results[0]["value"] == pytest.approx(math.log2(3.25), abs=1e-9)
    assert abs(rep.results[0]["value"] - 1.70044) <= 1e-6


def test_attack_reduce_and_certificate_tasks():
    rep = run(config({"kind": "ghz", "n": 4, "d": 2},
                     [{"task": "attack", "coalition": ["A2", "A3"], "target": 1, "basis": "random", "basis_seed": 3},
                      {"task": "reduce", "keep": [1, 2, 3], "expect": {"verdict": "GSS"}},
                      {"task": "reduce", "keep": [1, 3], "mode": "average", "expect": {"verdict": "GSS"}},
                      {"task": "theorem5", "expect": {"status": "verified"}},
                      {"task": "irreducibility", "expect": {"status": "irreducible"}}]))
    assert rep.exit_code == 0, rep.results
    assert rep.results[0]["value"] <= 1e-9
    assert "M" in rep.results[2]["details"]["labels"]


def test_upsilon2_bell_attack():
    rep = run(config({"kind": "upsilon2"},
                     [{"task": "attack", "coalition": ["A3", "A4"], "target": 1, "basis": "bell",
                       "expect": {"value": 1.0, "tol": 1e-9}}]))
    assert rep.exit_code == 0


def test_expectation_mismatch_exits_1():
    rep = run(config({"kind": "ghz", "n": 3}, [{"task": "verify", "expect": {"verdict": "NotGSS"}}]))
    assert rep.exit_code == 1
    assert rep.results[0]["expectation"]["met"] is False


def test_task_error_is_recorded_and_exits_2():
    rep = run(config({"kind": "ghz", "n": 3}, [{"task": "attack", "coalition": ["A1"], "target": 1},
                                               {"task": "verify"}]))
    assert rep.exit_code == 2
    assert rep.results[0]["error"]["type"] == "LayoutError"
    # later tasks still run
    assert rep.results[1]["outcome"] == "GSS"


# --- config validation --------------------------------------------------


@pytest.mark.parametrize("bad, match", [
    ({"schema_version": 2, "scenario": {"kind": "upsilon1"}, "tasks": [{"task": "verify"}]}, "schema_version"),
    (config({"kind": "upsilon1"}, [{"task": "verify"}], extra=1), "unknown key"),
    (config({"kind": "nope"}, [{"task": "verify"}]), "unknown kind"),
    (config({"kind": "ghz"}, [{"task": "verify"}]), "missing required key 'n'"),
    (config({"kind": "ghz", "n": 3, "dd": 2}, [{"task": "verify"}]), "unknown key"),
    (config({"kind": "ghz", "n": 3}, []), "nonempty"),
    (config({"kind": "ghz", "n": 3}, [{"task": "fly"}]), "unknown task"),
    (config({"kind": "ghz", "n": 3}, [{"task": "verify", "expect": {"oops": 1}}]), "expect"),
    (config({"kind": "upsilon1"}, [{"task": "theorem5"}]), "spec"),
    (config({"kind": "ghz", "n": 3}, [{"task": "verify"}], tolerances={"bogus": 1}), "tolerances"),
    (config({"kind": "ghz", "n": True}, [{"task": "verify"}]), "integer"),
    (config({"kind": "ghz", "n": 3}, [{"task": "reduce", "keep": [1]}]), "at least two"),
])
def test_config_rejections(bad, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(bad)


def test_invalid_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "schema_version": 1,\n  "scenario": \n}')
    with pytest.raises(ConfigError, match="line 4, column 1"):
        load_config(p)


def test_main_exit_codes(tmp_path, capsys):
    ok = write_json(tmp_path, config({"kind": "ghz", "n": 3}, [{"task": "verify", "expect": {"verdict": "GSS"}}]))
    assert main(["--config", str(ok)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["schema_version"] == 1 and out["exit_code"] == 0
    bad = write_json(tmp_path, config({"kind": "ghz", "n": 3, "zz": 0}, [{"task": "verify"}]), "bad.json")
    assert main(["--config", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
    assert main(["--config", str(ok), "--tol", "-1"]) == 2


def test_tol_flag_overrides_verdict_threshold(tmp_path, capsys):
    p = write_json(tmp_path, config({"kind": "upsilon1"}, [{"task": "verify"}]))
    # a threshold above one bit accepts the leaky state
    assert main(["--config", str(p), "--tol", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"][0]["outcome"] == "GSS"
    assert out["provenance"]["tolerances"]["verdict"] == 2.0


def test_determinism_modulo_timings(tmp_path):
    cfg = config({"kind": "gss_spec", "n": 3, "d": 2}, [{"task": "verify"}, {"task": "rate"},
                                                         {"task": "reduce", "keep": [1, 2]}], seed=5)
    a, b = run(cfg).to_dict(), run(cfg).to_dict()
    assert a.pop("timings").keys() == b.pop("timings").keys()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    out1, out2 = tmp_path / "o1.json", tmp_path / "o2.json"
    p = write_json(tmp_path, cfg)
    main(["--config", str(p), "--out", str(out1)])
    main(["--config", str(p), "--out", str(out2)])
    r1, r2 = json.loads(out1.read_text()), json.loads(out2.read_text())
    r1.pop("timings"), r2.pop("timings")
    assert r1 == r2


def test_seed_flag_changes_random_scenarios(tmp_path, capsys):
    p = write_json(tmp_path, config({"kind": "gss_spec", "n": 2, "d": 2}, [{"task": "negativity", "player": 1}]))
    main(["--config", str(p), "--seed", "1"])
    v1 = json.loads(capsys.readouterr().out)["results"][0]["value"]
    main(["--config", str(p), "--seed", "2"])
    v2 = json.loads(capsys.readouterr().out)["results"][0]["value"]
    assert v1 != v2


def test_report_json_round_trip():
    rep = run(config({"kind": "ghz", "n": 3}, [{"task": "verify"}]))
    again = RunReport.from_dict(json.loads(rep.to_json()))
    assert again.to_json() == rep.to_json()
    assert set(rep.provenance) >= {"artifact_version", "numpy_version", "seed", "tolerances"}


def test_summary_csv_columns():
    rep = run(config({"kind": "ghz", "n": 3}, [{"task": "verify", "expect": {"verdict": "GSS"}}, {"task": "rate"}]))
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert tuple(rows[0]) == SUMMARY_COLUMNS
    assert rows[1][0] == "verify" and rows[1][4] == "GSS" and rows[1][5] == "true"
    assert float(rows[2][1]) == pytest.approx(1.0)


def test_atomic_out_and_csv_format(tmp_path):
    p = write_json(tmp_path, config({"kind": "ghz", "n": 3}, [{"task": "table_example2", "d_list": [2],
                                                              "p_list": [0.25]}], format="csv"))
    out = tmp_path / "table.csv"
    assert main(["--config", str(p), "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == TABLE_COLUMNS
    assert float(rows[0]["trace_norm"]) == pytest.approx(3.25, abs=1e-9)
    # no temporary files left behind
    assert sorted(x.name for x in tmp_path.iterdir()) == ["cfg.json", "table.csv"]


# --- Example-2 table ----------------------------------------------------


def test_example2_formula_values():
    assert example2_formula(2, 0.25) == pytest.approx(3.25)
    assert example2_formula(2, 0.5) == pytest.approx(4.0)
    assert example2_formula(3, 0.0) == pytest.approx(17 / 9)


def test_table_rows():
    rows = table_example2([2], [0.25, 0.5])
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert rows[0]["trace_norm"] == pytest.approx(3.25, abs=1e-9)
    assert rows[1]["trace_norm"] == pytest.approx(4.0, abs=1e-9)
    assert rows[1]["log_negativity_bits"] == pytest.approx(2.0, abs=1e-9)
    assert all(r["abs_delta"] <= 1e-8 for r in rows)


def test_table_d3_row():
    (row,) = table_example2([3], [0.0])
    assert row["trace_norm"] == pytest.approx(17 / 9, abs=1e-8)
    assert row["log_negativity_bits"] == pytest.approx(math.log2(17 / 9), abs=1e-9)


def test_table_skips_rows_over_the_cap():
    (row,) = table_example2([3], [0.0], max_dim=1000)
    assert row["status"].startswith("skipped") and row["trace_norm"] is None
    assert row["formula"] == pytest.approx(17 / 9)


# --- state files --------------------------------------------------------


@pytest.mark.parametrize("make", [upsilon1, lambda: gss_from_spec(random_gss_spec(2, 2, 2, seed=3))])
def test_state_round_trip(tmp_path, make):
    s = make()
    path = tmp_path / "s.txt"
    export_state(s, path)
    back = import_state(path)
    assert back.layout == s.layout
    assert back.is_pure == s.is_pure
    assert np.array_equal(back.data, s.data)


def test_file_scenario(tmp_path):
    path = tmp_path / "u.txt"
    export_state(upsilon1(), path)
    rep = run(config({"kind": "file", "path": str(path)}, [{"task": "verify", "expect": {"verdict": "NotGSS"}}]))
    assert rep.exit_code == 0


def test_truncated_file(tmp_path):
    path = tmp_path / "s.txt"
    export_state(upsilon1(), path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-5]) + "\n")
    with pytest.raises(StateFileError, match="truncated"):
        import_state(path)


def test_bad_entry_and_header(tmp_path):
    path = tmp_path / "s.txt"
    export_state(upsilon1(), path)
    lines = path.read_text().splitlines()
    lines[10] = "1.0 abc"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(StateFileError, match="line 11"):
        import_state(path)
    path.write_text("something else\n")
    with pytest.raises(StateFileError, match="header"):
        import_state(path)


def test_non_psd_import_names_eigenvalue(tmp_path):
    lay = SystemLayout.of(Subsystem("A1", 1, Role.SECRET, 2), Subsystem("A2", 2, Role.SECRET, 2))
    rho = np.diag([0.6, 0.5, 0.0, -0.1])
    path = tmp_path / "bad.txt"
    export_state(QuantumState(lay, random_density_matrix(4, 1)), path)
    lines = path.read_text().splitlines()
    start = lines.index("data 16") + 1
    lines[start:start + 16] = [f"{z:.17g} 0" for z in rho.reshape(-1)]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(InvalidStateError, match="minimum eigenvalue -1.0+e-01"):
        import_state(path)
    rep = run(config({"kind": "file", "path": str(path)}, [{"task": "verify"}]))
    assert rep.exit_code == 2
    assert "minimum eigenvalue -1.000000e-01" in rep.results[0]["error"]["message"]
    assert import_state(path, validate=False).data[3, 3] == pytest.approx(-0.1)
