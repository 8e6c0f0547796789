"""End-to-end CLI behaviour: exit codes, stdout rows, files written."""

import json
import re
import subprocess
import sys

import pytest

from abconv import catalog_instance, global_tol, max_threads, report_json, run_report
from abconv.cli import main, parse_epi_point, parse_member


def rows(out: str) -> dict:
    """Parse fixed-width key/value rows back into a dict."""
    parsed = {}
    for line in out.splitlines():
        parts = re.split(r"  +", line.rstrip(), maxsplit=1)
        if len(parts) == 2:
            parsed[parts[0]] = parts[1]
    return parsed


class TestMemberParsing:
    def test_full_member(self):
        q = parse_member("a=-1,u=2,3,c=0.5", 2)
        assert q.A[0, 0] == -1.0 and list(q.u) == [2.0, 3.0] and q.c == 0.5

    def test_defaults(self):
        q = parse_member("u=1", 1)
        assert q.A[0, 0] == 0.0 and q.c == 0.0

    def test_semicolon_separator(self):
        q = parse_member("a=0;u=1;2;c=0", 2)
        assert list(q.u) == [1.0, 2.0]

    def test_errors(self):
        from abconv import InstanceParseError

        with pytest.raises(InstanceParseError, match="unknown fields"):
            parse_member("a=0,q=1", 1)
        with pytest.raises(InstanceParseError, match="duplicate"):
            parse_member("a=0,a=1", 1)
        with pytest.raises(InstanceParseError, match="expected key=value"):
            parse_member("17", 1)
        with pytest.raises(InstanceParseError, match="bad number"):
            parse_member("a=zero", 1)
        with pytest.raises(InstanceParseError, match="expected 1 entries"):
            parse_member("u=1,2", 1)
        with pytest.raises(InstanceParseError, match="missing level r"):
            parse_epi_point("a=0,u=1", 1)

    def test_epi_point(self):
        point = parse_epi_point("a=0,u=1,1,c=0,r=1.5", 2)
        assert point.r == 1.5 and list(point.phi.u) == [1.0, 1.0]


class TestReproduce:
    def test_known_instance(self, capsys):
        assert main(["reproduce", "ex4.7"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert "FAIL" not in out
        assert out.rstrip().endswith("5/5 checks passed")

    @pytest.mark.parametrize("name,count", [
        ("ex4.7-reversed", 3), ("ex4.8", 6), ("ex5.6", 7),
        ("ex6.10", 5), ("ex6.11", 5),
    ])
    def test_other_instances(self, name, count, capsys):
        assert main(["reproduce", name]) == 0
        out = capsys.readouterr().out
        assert f"{count}/{count} checks passed" in out

    def test_unknown_name_exit_code(self, capsys):
        assert main(["reproduce", "ex9.9"]) == 4
        err = capsys.readouterr().err
        assert err.startswith("error:") and "ex9.9" in err


class TestGap:
    def test_table_and_json(self, tmp_path, capsys):
        out_file = tmp_path / "report.json"
        assert main(["gap", "ex4.7", "--json", str(out_file)]) == 0
        out = capsys.readouterr().out
        parsed = rows(out)
        assert parsed["instance"] == "ex4.7"
        assert parsed["primal"] == "0.8"
        assert parsed["gap"] == "0"
        assert parsed["weak duality"] == "ok"
        assert out_file.read_text() == report_json(run_report(catalog_instance("ex4.7")))

    def test_json_is_byte_identical_across_runs(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["gap", "ex6.11", "--json", str(a)])
        main(["gap", "ex6.11", "--json", str(b)])
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()
        assert json.loads(a.read_text())["primal"] == -9.25

    def test_instance_file_argument(self, tmp_path, capsys):
        from abconv import save_instance

        path = tmp_path / "inst.json"
        save_instance(catalog_instance("ex6.10"), path)
        assert main(["gap", str(path)]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["primal"] == "-19"
        assert parsed["lp"] == "-19"


class TestConjugate:
    def test_closed_engine(self, capsys):
        assert main(["conjugate", "ex4.7", "--phi", "a=0,u=2,c=0"]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["in input class"] == "True"
        assert parsed["f conjugate"] == "-1"
        assert parsed["f maximizer"] == "(0)"
        assert parsed["composite conjugate"] == "-1"
        assert parsed["engine"] == "closed/closed"

    def test_grid_engine(self, capsys):
        assert main(["conjugate", "ex4.7", "--phi", "a=0,u=2,c=0",
                     "--engine", "grid"]) == 0
        parsed = rows(capsys.readouterr().out)
        assert float(parsed["f conjugate"]) == pytest.approx(-1.0, abs=1e-6)
        assert float(parsed["composite conjugate"]) == pytest.approx(-1.0, abs=1e-6)
        assert parsed["engine"] == "grid/grid"

    def test_member_outside_class(self, capsys):
        assert main(["conjugate", "ex4.7", "--phi", "a=1,u=0,c=0"]) == 0
        assert rows(capsys.readouterr().out)["in input class"] == "False"

    def test_bad_member_exits_2(self, capsys):
        assert main(["conjugate", "ex4.7", "--phi", "a=0,q=1"]) == 2
        assert "unknown fields" in capsys.readouterr().err

    def test_missing_instance_exits_2(self, capsys):
        assert main(["conjugate", "nope.json", "--phi", "u=1"]) == 2
        assert "no such file or catalog name" in capsys.readouterr().err


class TestCertify:
    def write(self, tmp_path, payload):
        path = tmp_path / "cert.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_thm42_certificate(self, tmp_path, capsys):
        cert = self.write(tmp_path, {
            "kind": "thm42", "eps": 1e-3, "x": [-2.0, 3.0],
            "psi": {"a": -1.0, "u": [2.0], "c": 0.0},
        })
        assert main(["certify", "ex4.8", "--cert", cert, "--kind", "thm42"]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["verdict"] == "holds"
        assert parsed["psi_in_family"] == "True"
        assert parsed["conjugate_bound"] == "True"

    def test_kind_mismatch_exits_2(self, tmp_path, capsys):
        cert = self.write(tmp_path, {
            "kind": "thm42", "eps": 1e-3, "x": [-2.0, 3.0],
            "psi": {"a": -1.0, "u": [2.0], "c": 0.0},
        })
        assert main(["certify", "ex4.8", "--cert", cert, "--kind", "thm43"]) == 2
        assert "--kind" in capsys.readouterr().err

    def test_optimality_ladder(self, tmp_path, capsys):
        cert = self.write(tmp_path, {"kind": "thm44", "x": [-0.2]})
        assert main(["certify", "ex4.7", "--cert", cert, "--kind", "thm44"]) == 0
        parsed = rows(capsys.readouterr().out)
        for eps in ("eps=1", "eps=0.01", "eps=0.0001", "eps=1e-06"):
            assert parsed[eps] == "certified"
        assert parsed["value at x"] == "0.8"
        assert parsed["primal value"] == "0.8"
        assert parsed["verdict"] == "holds"

    def test_missing_cert_file_exits_2(self, capsys):
        assert main(["certify", "ex4.7", "--cert", "absent.json",
                     "--kind", "thm42"]) == 2
        assert "no such file" in capsys.readouterr().err


class TestStrong:
    def test_decomposes_epigraph_point(self, capsys):
        assert main(["strong", "ex5.6", "--epi-point", "a=0,u=1,1,c=0,r=1.0"]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["input member"] == "a=0 u=(1, 1) c=0"
        assert parsed["input level"] == "1"
        assert parsed["output member"] == "a=0 u=(0) c=0"
        assert parsed["output level"] == "0"
        assert parsed["input membership"] == "True"
        assert parsed["output membership"] == "True"

    def test_point_outside_epigraph(self, capsys):
        assert main(["strong", "ex5.6", "--epi-point", "a=0,u=1,1,c=0,r=0.05"]) == 0
        assert "outside the composite conjugate epigraph" in capsys.readouterr().out

    def test_missing_level_exits_2(self, capsys):
        assert main(["strong", "ex5.6", "--epi-point", "a=0,u=1,1,c=0"]) == 2
        assert "missing level r" in capsys.readouterr().err


class TestLagrange:
    def test_full_report(self, capsys):
        assert main([
            "lagrange", "ex6.11", "--lsc-probe",
            "--intersection", "a=1,u=1,c=0|a=-1,u=-1,c=0|-0.1",
        ]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["primal"] == "-9.25"
        assert parsed["lagrange dual"] == "-9.25"
        assert parsed["convexified primal"] == "-9.25"
        assert parsed["dual <= convexified"] == "True"
        assert parsed["convexification preserves value"] == "True"
        assert parsed["value function lsc at 0"] == "True"
        assert parsed["intersection property"].startswith("holds at t=")

    def test_intersection_without_witness(self, capsys):
        assert main([
            "lagrange", "ex6.11",
            "--intersection", "a=1,u=1,c=0|a=-1,u=-1,c=0|0.1",
        ]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["intersection property"] == "no dominating combination"

    def test_malformed_intersection_exits_2(self, capsys):
        assert main(["lagrange", "ex6.11", "--intersection", "a=1|a=2"]) == 2
        assert "phi1|phi2|alpha" in capsys.readouterr().err


class TestRandom:
    def test_deterministic_output(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["random", "--seed", "7", "-o", str(a)]) == 0
        assert main(["random", "--seed", "7", "-o", str(b)]) == 0
        out = capsys.readouterr().out
        assert "wrote random-7 (1 -> 1)" in out
        assert a.read_bytes() == b.read_bytes()

    def test_spec_file(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text('{"n": 2, "m": 1}')
        out_file = tmp_path / "inst.json"
        assert main(["random", "--seed", "3", "--spec", str(spec),
                     "-o", str(out_file)]) == 0
        assert "(2 -> 1)" in capsys.readouterr().out
        assert json.loads(out_file.read_text())["n"] == 2

    def test_bad_spec_exits_2(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text('{"n": 0}')
        assert main(["random", "--seed", "1", "--spec", str(spec),
                     "-o", str(tmp_path / "x.json")]) == 2
        capsys.readouterr()
        assert main(["random", "--seed", "1", "--spec", str(tmp_path / "no.json"),
                     "-o", str(tmp_path / "x.json")]) == 2

    def test_generated_instance_is_loadable(self, tmp_path, capsys):
        out_file = tmp_path / "inst.json"
        main(["random", "--seed", "11", "-o", str(out_file)])
        capsys.readouterr()
        assert main(["gap", str(out_file)]) == 0
        parsed = rows(capsys.readouterr().out)
        assert parsed["weak duality"] == "ok"


class TestUsageAndEnvironment:
    def test_argparse_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["conjugate", "ex4.7"])  # --phi is required
        assert exc.value.code == 2
        capsys.readouterr()

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_tol_env_override(self, monkeypatch):
        monkeypatch.delenv("ABCONV_TOL", raising=False)
        assert global_tol() == 1e-9
        monkeypatch.setenv("ABCONV_TOL", "1e-3")
        assert global_tol() == 1e-3
        monkeypatch.setenv("ABCONV_TOL", "")
        assert global_tol() == 1e-9
        monkeypatch.setenv("ABCONV_TOL", "-1")
        with pytest.raises(ValueError):
            global_tol()

    def test_threads_env_override(self, monkeypatch):
        monkeypatch.delenv("ABCONV_THREADS", raising=False)
        assert max_threads() == 1
        monkeypatch.setenv("ABCONV_THREADS", "4")
        assert max_threads() == 4
        monkeypatch.setenv("ABCONV_THREADS", "0")
        assert max_threads() == 1

    def test_console_script_is_installed(self):
        proc = subprocess.run(
            ["abconv", "reproduce", "ex4.7"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        assert "5/5 checks passed" in proc.stdout

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "abconv", "--help"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert "abconv" in proc.stdout
