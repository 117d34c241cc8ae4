from __future__ import annotations

import json
import subprocess
import sys

import pytest

from tdsched import gen_noNE2, gen_sbpt_tight, sample_random
from tdsched.cli import main
from tdsched.generators import matching_examples
from tdsched.io import format_3dm, save_instance


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def no_ne2(tmp_path):
    path = tmp_path / "noNE2.json"
    save_instance(gen_noNE2(), path)
    return path


def generated(capsys, tmp_path, name, *argv):
    path = tmp_path / f"{name}.json"
    code, _, err = run(capsys, "generate", *argv, "--out", path)
    assert code == 0, err
    return path


class TestSimulate:
    def test_both_jobs_on_first_machine(self, capsys, no_ne2):
        rep = report(capsys, "simulate", no_ne2, "--profile", "u:0,v:0")
        completions = [job["completion"]["exact"] for job in rep["results"]["schedule"]["jobs"]]
        assert completions == ["24", "27"]
        assert rep["command"] == "simulate" and len(rep["instance_digest"]) == 64

    def test_profile_file(self, capsys, tmp_path, no_ne2):
        prof = tmp_path / "p.txt"
        prof.write_text("[1, 0]\n")
        rep = report(capsys, "simulate", no_ne2, "--profile-file", prof)
        assert rep["results"]["schedule"]["makespan"]["exact"] == "48"

    def test_single_job_starts_at_zero(self, capsys, tmp_path):
        path = tmp_path / "one.json"
        save_instance(sample_random("any", 1, 2, 3), path)
        rep = report(capsys, "simulate", path, "--profile", "1")
        assert rep["results"]["schedule"]["jobs"][0]["start"]["exact"] == "0"

    def test_malformed_json(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{ not json")
        code, out, err = run(capsys, "simulate", path, "--profile", "0")
        assert code == 1 and out == "" and "line 1" in err

    def test_bad_profile(self, capsys, no_ne2):
        code, _, err = run(capsys, "simulate", no_ne2, "--profile", "u:0")
        assert code == 1 and "v" in err

    def test_reports_are_reproducible(self, capsys, no_ne2):
        first = run(capsys, "simulate", no_ne2, "--profile", "0,1", "--seed", "4")
        second = run(capsys, "simulate", no_ne2, "--profile", "0,1", "--seed", "4")
        assert first == second


class TestSolve:
    def test_exponential_family(self, capsys, tmp_path):
        path = generated(capsys, tmp_path, "exp", "exponential", "--m", 2, "--k", 2, "--a", 1)
        rep = report(capsys, "solve", path, "--algorithm", "ls", "--tie-break", "lowest_index")
        assert rep["results"]["schedule"]["makespan"]["exact"] == "141"
        assert rep["results"]["is_nash"] is True

    def test_symmetric(self, capsys, tmp_path):
        path = generated(capsys, tmp_path, "sym", "random", "--class", "sym", "--n", 5, "--m", 2, "--seed", 7)
        rep = report(capsys, "solve", path, "--algorithm", "symmetric")
        assert rep["results"]["is_nash"] is True and rep["results"]["violation"] is None

    def test_class_mismatch(self, capsys, no_ne2):
        code, out, err = run(capsys, "solve", no_ne2, "--algorithm", "greedy")
        assert code == 2 and out == ""
        assert "delay_averse" in err


class TestAnalyze:
    def test_no_equilibria(self, capsys, tmp_path):
        path = generated(capsys, tmp_path, "ne3", "noNE3")
        rep = report(capsys, "analyze", path, "enumerate")
        assert rep["results"]["ne_count"] == 0

    def test_poa_string(self, capsys, tmp_path):
        path = tmp_path / "sbpt.json"
        save_instance(gen_sbpt_tight(), path)
        rep = report(capsys, "analyze", path, "poa")
        assert rep["results"]["poa"] == "5/3"
        assert rep["results"]["poa_value"]["decimal"] == "1.66666666667"

    def test_brd_from_equilibrium(self, capsys, tmp_path):
        path = tmp_path / "sbpt.json"
        save_instance(gen_sbpt_tight(), path)
        start = report(capsys, "analyze", path, "enumerate")["results"]["ne_profiles"][0]
        rep = report(capsys, "analyze", path, "brd", "--start", json.dumps(start))
        assert rep["results"]["outcome"] == "converged" and rep["results"]["steps"] == 0

    def test_brd_cycle(self, capsys, no_ne2):
        rep = report(capsys, "analyze", no_ne2, "brd")
        assert rep["results"]["outcome"] == "cycle" and rep["results"]["cycle_length"] == 4

    def test_budget(self, capsys, no_ne2):
        code, _, err = run(capsys, "analyze", no_ne2, "enumerate", "--budget", 2)
        assert code == 3 and "budget" in err

    def test_step_budget(self, capsys, no_ne2):
        code, _, _ = run(capsys, "analyze", no_ne2, "brd", "--policy", "seeded_random", "--max-steps", 5)
        assert code == 3


class TestGenerate:
    def test_two_job_game_has_no_equilibrium(self, capsys, tmp_path):
        path = generated(capsys, tmp_path, "ne2", "noNE2")
        assert report(capsys, "analyze", path, "enumerate")["results"]["ne_count"] == 0

    def test_random_is_deterministic(self, capsys, tmp_path):
        a = generated(capsys, tmp_path, "a", "random", "--class", "sym", "--n", 4, "--m", 2, "--seed", 7)
        b = generated(capsys, tmp_path, "b", "random", "--class", "sym", "--n", 4, "--m", 2, "--seed", 7)
        assert a.read_bytes() == b.read_bytes()

    def test_reduction_counts(self, capsys, tmp_path):
        src = tmp_path / "matching.txt"
        src.write_text(format_3dm(matching_examples()[0]))
        doc = json.loads(generated(capsys, tmp_path, "red", "reduce3dm", "--in", src).read_text())
        assert len(doc["machines"]) == 6 and len(doc["jobs"]) == 17

    def test_stdout(self, capsys):
        code, out, _ = run(capsys, "generate", "sbpt_tight")
        assert code == 0 and [j["b"] for j in json.loads(out)["jobs"]] == ["1", "1", "3"]

    @pytest.mark.parametrize(
        "argv",
        [("poa_r", "--m", 2, "--r", "1.2"), ("poa_r", "--m", 2), ("random", "--class", "two", "--n", 3, "--m", 3)],
    )
    def test_infeasible_parameters(self, capsys, argv):
        code, out, err = run(capsys, "generate", *argv)
        assert code == 1 and out == "" and err.startswith("error:")


class TestMechanism:
    def test_sbpt_tight(self, capsys, tmp_path):
        path = tmp_path / "sbpt.json"
        save_instance(gen_sbpt_tight(), path)
        res = report(capsys, "mechanism", path, "--policy", "sbpt")["results"]
        assert res["ratio"]["exact"] == "5/3" and res["bound"]["exact"] == "5/3"
        assert res["within_bound"] is True and res["opt_source"] == "brute_force"

    def test_shrinking_lower_bound(self, capsys, tmp_path):
        path = generated(
            capsys, tmp_path, "sdr", "sdr_lb",
            "--b", 10, "--a", "0.009", "--B", 1111, "--tau", "0.001", "--k", 1016, "--m", 4, "--numeric", "float",
        )
        res = report(capsys, "mechanism", path, "--policy", "sdr")["results"]
        assert res["opt_source"] == "described_witness"
        assert float(res["ratio"]["decimal"]) == pytest.approx(1.99, abs=0.01)
        assert res["within_bound"] is True

    def test_lbdr_random(self, capsys, tmp_path):
        path = generated(capsys, tmp_path, "lb", "random", "--class", "lbdr", "--n", 5, "--m", 3, "--seed", 11)
        res = report(capsys, "mechanism", path, "--policy", "lbdr")["results"]
        assert float(res["bound"]["decimal"]) == pytest.approx(5 / 3)
        assert res["ratio"] is not None

    def test_class_mismatch(self, capsys, no_ne2):
        code, _, err = run(capsys, "mechanism", no_ne2, "--policy", "sdr")
        assert code == 2 and "class mismatch" in err


def test_module_entry_point(tmp_path):
    path = tmp_path / "g.json"
    save_instance(gen_noNE2(), path)
    proc = subprocess.run(
        [sys.executable, "-m", "tdsched", "simulate", str(path), "--profile", "0,0"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["schedule"]["makespan"]["exact"] == "27"
