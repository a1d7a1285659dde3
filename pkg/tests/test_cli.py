import csv
import json

import pytest

from essim.cli import main

import reference as ref


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_files(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), "--horizon", "10"]) == 0
    rows = _rows(tmp_path / "slots.csv")
    assert len(rows) == 50
    assert list(rows[0]) == ["slot", "node", "mode", "switch", "served", "arrivals", "queue",
                             "battery_j", "e_sleep", "e_active", "e_tx", "e_switch", "e_bcast",
                             "idle_flag"]
    assert rows[0]["e_sleep"] == "3.00000000000e-08"
    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert doc["slots"] == 10 and doc["termination"] == "HorizonReached"


def test_run_reads_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"node_count": 2, "policy": "Distributed"}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--horizon", "4"]) == 0
    rows = _rows(tmp_path / "o" / "slots.csv")
    assert len(rows) == 8


def test_missing_config_fails(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) != 0
    assert "nope.json" in capsys.readouterr().err


def test_invalid_config_fails(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"energy": {"t01_ms": 2.5}}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path), "--horizon", "3"]) == 1
    assert "SwitchingExceedsSlot" in capsys.readouterr().err


def test_sweep_row_counts(tmp_path):
    out = tmp_path / "a"
    assert main(["sweep", "--out", str(out), "--horizon", "20", "--seeds", "2"]) == 0
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 16
    assert [(r["v_param"], r["seed"]) for r in rows[:3]] == [
        ("5.00000000000e+02", "0"), ("5.00000000000e+02", "1"), ("1.00000000000e+03", "0")]
    out = tmp_path / "b"
    assert main(["sweep", "--out", str(out), "--horizon", "20", "--v-list",
                 "400,800,1200,1800,2500", "--policies",
                 "ESS,Benchmark,Periodic,Distributed"]) == 0
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 20
    assert [r["policy"] for r in rows[::5]] == ["ESS", "Benchmark", "Periodic", "Distributed"]


@pytest.mark.parametrize("v_list", ["", "5,3", "a,b"])
def test_sweep_bad_v_list_is_usage_error(tmp_path, v_list):
    with pytest.raises(SystemExit) as e:
        main(["sweep", "--out", str(tmp_path), "--v-list", v_list])
    assert e.value.code == 2


def test_sweep_jobs_do_not_change_output(tmp_path):
    args = ["sweep", "--horizon", "30", "--v-list", "400,2500", "--policies", "ESS,Periodic"]
    main(args + ["--out", str(tmp_path / "serial")])
    main(args + ["--out", str(tmp_path / "par"), "--jobs", "2"])
    assert (tmp_path / "serial" / "sweep.csv").read_bytes() == (tmp_path / "par" / "sweep.csv").read_bytes()


def test_oracle_zero_demand(capsys):
    assert main(["oracle", "--lambda", "0", "--grid-step", "0.1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["h_star_j_per_slot"] == pytest.approx(ref.slot_cost("S", "S"), rel=1e-12)
    assert doc["stability_margin"] == pytest.approx(20.0)


def test_oracle_saturated(capsys, tmp_path):
    assert main(["oracle", "--lambda", "20", "--grid-step", "0.1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert doc["best_params"]["pi_tr"] == [[1.0]]


def test_oracle_infeasible(capsys):
    assert main(["oracle", "--lambda", "21", "--grid-step", "0.1"]) != 0
    assert "InfeasibleRate" in capsys.readouterr().err


def test_verify_v_zero_skips(capsys):
    code = main(["verify", "--v-list", "0", "--horizon", "2000", "--grid-step", "0.1"])
    out = capsys.readouterr().out
    assert code == 0 and "SKIP energy V=0" in out and "PASS backlog V=0" in out


def test_verify_infeasible(capsys):
    assert main(["verify", "--lambda", "30", "--horizon", "10", "--grid-step", "0.1"]) != 0


def test_verify_fail_exits_nonzero(capsys):
    # h* is computed for a target of 0.5 packets/slot while 4 actually arrive,
    # so at huge V the measured energy must exceed the (wrong) bound
    code = main(["verify", "--lambda", "0.5", "--v-list", "1e8", "--horizon", "20000",
                 "--grid-step", "0.1"])
    out = capsys.readouterr().out
    assert code == 1 and "FAIL energy" in out
