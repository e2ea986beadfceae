import csv
import json
import subprocess
import sys

import pytest

from birds.cli import main
from birds.ledger import Chain, validate_chain


def scenario_file(tmp_path, text):
    path = tmp_path / "scenario.txt"
    path.write_text(text)
    return path


def test_run_writes_outputs(tmp_path):
    sc = scenario_file(tmp_path, "uav_count = 6\njob_count = 8\nduration = 300\n")
    out = tmp_path / "out"
    code = main(["run", "--scenario", str(sc), "--consensus", "poa", "--seed", "5",
                 "--out", str(out), "--dump-chain"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["consensus"] == "poa" and summary["seed"] == 5
    chain = Chain.from_json(json.loads((out / "chain.json").read_text()))
    assert validate_chain(chain)
    assert chain.digest() == summary["chain_digest"]
    with (out / "metrics.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 31 and rows[-1]["consensus"] == "poa"


def test_run_without_dump(tmp_path):
    assert main(["run", "--out", str(tmp_path)]) == 0
    assert not (tmp_path / "chain.json").exists()


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--out", "x", "--consensus", "raft"],
    ["sweep", "planes", "--out", "x"],
    ["frobnicate"],
])
def test_bad_arguments_exit_2(argv):
    assert main(argv) == 2


def test_bad_config_exits_2(tmp_path, capsys):
    sc = scenario_file(tmp_path, "uav_count = 3\nwings = 4\n")
    assert main(["run", "--scenario", str(sc), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 2
    assert main(["sweep", "uavs", "--seeds", "0", "--out", str(tmp_path)]) == 2


def test_runtime_error_exits_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--out", str(blocker / "sub")]) == 3


def test_sweep_writes_csv(tmp_path):
    sc = scenario_file(tmp_path, "[sweep]\nuav_counts = 2, 4\n")
    assert main(["sweep", "uavs", "--scenario", str(sc), "--seeds", "2",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep_uavs.csv").read_text().splitlines()
    assert lines[0] == "uav_count,seeds,mean_delay,success_rate"
    assert len(lines) == 3


def test_console_script_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "birds.cli", "sweep", "energy", "--out",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "sweep_energy.csv").exists()
