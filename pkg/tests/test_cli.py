"""End-to-end command-line behavior: run, replay, list, exit codes."""

import csv
import json
import shutil
import subprocess
import sys

import pytest

from distlab.cli import main
from distlab.scenarios import params_hash, parse_trace

FLOOD = {"version": 1, "kind": "floodmin",
         "params": {"n": 3, "f": 1, "k": 1}, "seeds": [0, 1, 2],
         "output": "flood"}
SEMA = {"version": 1, "kind": "mutex.semaphore", "params": {"n": 2},
        "seeds": "exhaustive", "output": "sema"}
QUORUM = {"version": 1, "kind": "quorum",
          "params": {"n": 3, "script": [[[0, "write", 5], [8, "read"]]]},
          "seeds": [0, 1], "output": "reg"}


def write_scenario(tmp_path, doc, name="sc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_results(outdir):
    with open(outdir / "results.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_list_prints_every_kind(capsys):
    assert main(["list"]) == 0
    text = capsys.readouterr().out
    for kind in ("floodmin", "dls", "approx", "clocksync", "mutex.burns",
                 "mutex.semaphore", "mutex.attack", "quorum", "cap.cp",
                 "cap.ap"):
        assert kind in text
    assert "[exhaustive]" in text


def test_run_writes_results_csv(tmp_path, capsys):
    path = write_scenario(tmp_path, FLOOD)
    assert main(["--out", str(tmp_path), "run", path]) == 0
    rows = read_results(tmp_path)
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    assert {r["verdict"] for r in rows} == {"pass"}
    assert {r["kind"] for r in rows} == {"floodmin"}
    assert {r["paramsHash"] for r in rows} == {params_hash(FLOOD["params"])}
    assert all("rounds=2" in r["metrics"] for r in rows)
    assert "3 run(s), 0 failure(s)" in capsys.readouterr().out


def test_run_failure_writes_a_replayable_trace(tmp_path, capsys):
    path = write_scenario(tmp_path, SEMA)
    assert main(["--out", str(tmp_path), "run", path]) == 1
    trace_path = tmp_path / "sema-exhaustive.trace"
    assert trace_path.exists()
    tf = parse_trace(trace_path.read_text())
    assert tf.kind == "mutex.semaphore"
    assert tf.verdict == "fail"
    assert tf.seed is None
    capsys.readouterr()
    assert main(["replay", str(trace_path), path]) == 1
    assert "replay matched" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path, capsys):
    path = write_scenario(tmp_path, SEMA)
    main(["--out", str(tmp_path), "run", path])
    trace_path = tmp_path / "sema-exhaustive.trace"
    trace_path.write_text(trace_path.read_text().replace("p1.move",
                                                         "p1.jump", 1))
    assert main(["replay", str(trace_path), path]) == 2
    assert "error:" in capsys.readouterr().err


def test_run_writes_artifacts_per_seed(tmp_path):
    path = write_scenario(tmp_path, QUORUM)
    assert main(["--out", str(tmp_path), "run", path]) == 0
    for seed in (0, 1):
        art = tmp_path / f"reg-{seed}-history.csv"
        assert art.read_text().startswith("ts,client,kind,phase,value")


def test_parallel_jobs_produce_identical_results(tmp_path):
    doc = {"version": 1, "kind": "dls",
           "params": {"n": 3, "f": 1, "gst": 10, "delta": 1},
           "seeds": list(range(6)), "output": "dls"}
    path = write_scenario(tmp_path, doc)
    seq, par = tmp_path / "seq", tmp_path / "par"
    assert main(["--out", str(seq), "run", path]) == 0
    assert main(["--jobs", "4", "--out", str(par), "run", path]) == 0
    assert (seq / "results.csv").read_text() == \
        (par / "results.csv").read_text()


def test_output_directory_falls_back_to_environment(tmp_path, monkeypatch):
    path = write_scenario(tmp_path, FLOOD)
    outdir = tmp_path / "from-env"
    monkeypatch.setenv("DISTLAB_OUT", str(outdir))
    assert main(["run", path]) == 0
    assert (outdir / "results.csv").exists()


@pytest.mark.parametrize("doc", [
    {"version": 2, "kind": "floodmin", "params": {"n": 3, "f": 1, "k": 1},
     "seeds": [0]},
    {"version": 1, "kind": "nope", "params": {}, "seeds": [0]},
    {"version": 1, "kind": "floodmin", "params": {"n": 3, "f": 1, "k": 1},
     "seeds": [0], "extra": True},
    {"version": 1, "kind": "floodmin", "params": {"n": 3, "f": 1},
     "seeds": [0]},
])
def test_bad_scenarios_exit_2(tmp_path, capsys, doc):
    path = write_scenario(tmp_path, doc)
    assert main(["run", path]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_file_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2
    err = capsys.readouterr().err
    assert "broken.json:1:" in err


def test_console_script_is_installed(tmp_path):
    exe = shutil.which("distlab")
    if exe is None:
        pytest.skip("entry point not on PATH")
    path = write_scenario(tmp_path, FLOOD)
    done = subprocess.run([exe, "--out", str(tmp_path), "run", path],
                          capture_output=True, text=True)
    assert done.returncode == 0
    assert "results.csv" in done.stdout


def test_module_invocation_matches_the_entry_point(tmp_path):
    done = subprocess.run([sys.executable, "-m", "distlab", "list"],
                          capture_output=True, text=True)
    assert done.returncode == 0
    assert "floodmin" in done.stdout
