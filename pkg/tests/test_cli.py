import json
import pathlib
import subprocess
import sys

DATA = pathlib.Path(__file__).parent / "data"
GOLDEN = pathlib.Path(__file__).parent / "golden"


def run_cli(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "symquiv.cli", *argv],
        capture_output=True, text=True)
    return proc


class TestBasicCommands:
    def test_roots_b2(self):
        proc = run_cli("roots", "--datum", str(DATA / "b2.json"))
        assert proc.returncode == 0
        payload = json.loads(proc.stdout)
        assert payload["count"] == 4

    def test_roots_golden(self):
        proc = run_cli("roots", "--datum", str(DATA / "b2.json"))
        assert proc.stdout == (GOLDEN / "roots_b2.json").read_text()

    def test_forms_golden(self):
        proc = run_cli("forms", "--datum", str(DATA / "b2.json"))
        assert proc.stdout == (GOLDEN / "forms_b2.json").read_text()

    def test_byte_identical_repeat_runs(self):
        a = run_cli("fpoly", "--datum", str(DATA / "b2.json"))
        b = run_cli("fpoly", "--datum", str(DATA / "b2.json"))
        assert a.stdout == b.stdout == (GOLDEN / "fpoly_b2.json").read_text()

    def test_homext_csv_golden(self):
        proc = run_cli("homext-table", "--datum", str(DATA / "b2.json"),
                       "--format", "csv")
        assert proc.stdout == (GOLDEN / "homext_b2.csv").read_text()

    def test_omega_override(self):
        proc = run_cli("forms", "--datum", str(DATA / "b2.json"), "--omega", "2,1")
        assert proc.returncode == 0
        payload = json.loads(proc.stdout)
        assert payload["gram_euler"] == [[2, -2], [0, 1]]


class TestExitCodes:
    def test_cluster_match_b2(self):
        proc = run_cli("cluster-match", "--datum", str(DATA / "b2.json"))
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == "4/4 matched"

    def test_non_dynkin_is_usage_error(self, tmp_path):
        path = tmp_path / "affine.json"
        path.write_text('{"C": [[2,-2],[-2,2]], "D": [1,1], "Omega": [[1,2]]}')
        proc = run_cli("coxeter-check", "--datum", str(path))
        assert proc.returncode == 2
        assert "usage error" in proc.stderr

    def test_missing_seed_rejected(self):
        proc = run_cli("serre-check", "--datum", str(DATA / "b2.json"),
                       "--samples", "2")
        assert proc.returncode == 2

    def test_missing_datum(self):
        proc = run_cli("roots")
        assert proc.returncode == 2


class TestDeterministicRandomized:
    def test_pi_check_deterministic(self):
        a = run_cli("pi-check", "--datum", str(DATA / "b2.json"),
                    "--samples", "4", "--seed", "9")
        b = run_cli("pi-check", "--datum", str(DATA / "b2.json"),
                    "--samples", "4", "--seed", "9")
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout

    def test_serre_check_small(self):
        proc = run_cli("serre-check", "--datum", str(DATA / "b2.json"),
                       "--samples", "3", "--seed", "4")
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["ok"] is True


class TestNofilt:
    def test_b2_order_asymmetry(self):
        proc = run_cli("nofilt-check", "--datum", str(DATA / "b2.json"),
                       "--prime-set", "5,7")
        assert proc.returncode == 0
        payload = json.loads(proc.stdout)
        assert payload["ok"] is True
        betas = {tuple(r["beta"]) for r in payload["results"]}
        assert (1, 1) in betas  # the decomposable root beta_1 + beta_4


class TestTranscripts:
    def test_results_dir(self, tmp_path):
        proc = run_cli("fpoly", "--datum", str(DATA / "b2.json"),
                       "--results-dir", str(tmp_path))
        assert proc.returncode == 0
        assert (tmp_path / "transcripts.json").exists()


class TestWorkers:
    def test_workers_flag_matches_serial(self):
        serial = run_cli("fpoly", "--datum", str(DATA / "b2.json"))
        threaded = run_cli("fpoly", "--datum", str(DATA / "b2.json"),
                           "--workers", "4")
        assert serial.stdout == threaded.stdout


class TestVerifyCommand:
    def test_single_criterion(self):
        proc = run_cli("verify", "--criterion", "1")
        assert proc.returncode == 0
        assert "[PASS]" in proc.stdout

    def test_verify_criterion_13(self):
        proc = run_cli("verify", "--criterion", "13")
        assert proc.returncode == 0
