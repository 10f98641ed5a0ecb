import io
import subprocess
import sys

import pytest

from plotalloc.cli import main
from plotalloc.io import parse_instance, parse_lp, parse_rows


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


class TestCommands:
    def test_expected_sw_hub(self):
        code, out = run("expected-sw", "on-ct-rsd", "hub_n8", "--exact")
        assert code == 0
        (row,) = parse_rows(out)
        assert row.expected_sw == 51 and row.seed == "exact"

    def test_expected_sw_sampled(self):
        code, out = run("expected-sw", "on-ct-rsd", "example2", "--samples", "200", "--seed", "1")
        assert code == 0 and "half-width" in out
        assert parse_rows(out.split("#")[0])[0].seed == 1

    def test_check_ft_witness(self):
        code, out = run("check", "ft", "on-ct-rsd", "example2")
        assert code == 1
        assert "7/5 vs 1" in out

    def test_check_holds(self):
        code, out = run("check", "po", "on-ca-rsd", "example2")
        assert (code, out.strip()) == (0, "none")

    def test_run_transcript(self):
        code, out = run("run", "on-ct-rsd", "example1", "--seed", "0")
        assert code == 0
        assert out.count("pick:") == 4 and "allocation:" in out
        assert run("run", "on-ct-rsd", "example1", "--seed", "0")[1] == out

    def test_run_oracle_mechanism(self):
        code, out = run("run", "sd", "example1", "--seed", "2")
        assert code == 0 and "welfare:" in out

    def test_run_with_reports(self, tmp_path):
        rep = tmp_path / "lie.json"
        rep.write_text('{"reports": [2, 0, null]}')
        code, out = run("run", "on-ct-rsd", "example2", "--seed", "0", "--reports", str(rep))
        assert code == 0

    def test_solve(self):
        assert "welfare: 33/10" in run("solve", "--opt", "example2")[1]
        assert "two-approx" in run("solve", "--approx", "example2")[1]

    def test_gen_and_reload(self, tmp_path):
        path = tmp_path / "g.json"
        assert run("gen", "random", "--n", "5", "--pairs", "2", "--values", "generic", "--seed", "3", "-o", str(path))[0] == 0
        inst = parse_instance(path.read_text())
        assert inst.n == 5
        code, out = run("solve", "--opt", str(path))
        assert code == 0

    def test_gen_fixture_params(self, tmp_path):
        path = tmp_path / "p.json"
        assert run("gen", "prop13_star", "--n", "8", "--variant", "I1", "-o", str(path))[0] == 0
        assert parse_instance(path.read_text()).n == 8

    def test_export_mip(self, tmp_path):
        path = tmp_path / "m.lp"
        assert run("export-mip", "example2", "-o", str(path))[0] == 0
        parse_lp(path.read_text())

    def test_experiment_appends(self, tmp_path):
        path = tmp_path / "r.csv"
        assert run("experiment", "hub-scaling", "--samples", "50", "-o", str(path))[0] == 0
        assert run("experiment", "hub-scaling", "--samples", "50", "-o", str(path))[0] == 0
        rows = parse_rows(path.read_text())
        assert len(rows) == 6 and rows[0] == rows[3]


class TestErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ("run", "bogus", "example2"),
            ("solve", "--opt", "/no/such/file"),
            ("check", "ft", "sd", "example2"),
            ("solve", "--opt", "hub_n10"),
            ("frobnicate",),
        ],
    )
    def test_exit_two(self, argv):
        assert run(*argv)[0] == 2

    def test_bad_instance_leaves_no_output(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"plots": {"count": 1},\n "values": [["3/2"]]}')
        out = tmp_path / "m.lp"
        assert run("export-mip", str(bad), "-o", str(out))[0] == 2
        assert not out.exists()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "plotalloc.cli", "check", "ft", "on-ct-rsd", "example2"], capture_output=True, text=True)
    assert proc.returncode == 1 and "witness" in proc.stdout
