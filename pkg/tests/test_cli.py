import json
import subprocess
import sys

import pytest

from ia_exposure.cli import COMMANDS, run

EMPLOYMENT = """year,province,cnae,sex,count
2022,28,62,T,100000
2022,28,47,T,300000
2022,08,01,T,5000
2022,08,62,T,20000
2022,28,62,F,40000
2022,28,62,M,60000
2022,28,47,F,160000
2022,28,47,M,140000
2021,28,62,T,90000
2021,28,47,T,290000
2021,08,01,T,6000
2021,08,62,T,19000
"""


@pytest.fixture
def employment(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(EMPLOYMENT, encoding="utf-8")
    return str(path)


def test_verify_zero_config(capsysbinary):
    assert run(["verify"]) == 0
    out = capsysbinary.readouterr().out
    payload = json.loads(out)
    assert [c["claim_id"] for c in payload["claims"]][:3] == ["ratio_consistency", "band_18_22", "madrid_above_21_5"]
    assert run(["verify"]) == 0
    assert capsysbinary.readouterr().out == out


def test_verify_text(capsys):
    assert run(["verify", "--format", "text"]) == 0
    assert "[holds] madrid_above_21_5" in capsys.readouterr().out


def test_compute_happy_path(employment, capsys):
    assert run(["compute", "--level", "province", "--sex", "T", "--year", "2022", "--employment", employment]) == 0
    out, err = capsys.readouterr()
    lines = out.splitlines()
    assert lines[0] == "territory;name;year;sex;employment;ia_employment;ia_share"
    # 28: (100000*0.3 + 300000*0.305) / 400000 = 0.30375
    assert lines[2] == "28;Madrid;2022;T;400000;121500;0.3038"
    assert lines[1].startswith("08;Barcelona;2022;T;25000;")
    assert err == ""


def test_compute_region_and_markdown(employment, capsys):
    assert run(["compute", "--level", "region", "--year", "2022", "--year", "2021",
                "--employment", employment, "--format", "markdown"]) == 0
    out = capsys.readouterr().out
    assert "| 09 | Cataluña | 2021 |" in out and "| 13 | Comunidad de Madrid | 2022 |" in out


def test_compute_missing_factor(employment, tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("cnae,factor\n62,0.3\n47,0.3\n01,0.1\n", encoding="utf-8")
    data = tmp_path / "d.csv"
    data.write_text("year,province,cnae,sex,count\n2022,28,77,T,5\n2022,28,62,T,5\n", encoding="utf-8")
    assert run(["compute", "--year", "2022", "--employment", str(data), "--matrix", str(m)]) == 1
    out, err = capsys.readouterr()
    assert out == "" and "77" in err


def test_bad_data_exit_1_with_line(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("year,province,cnae,sex,count\n2022,28,62,T,1\n2022,28,62,T,-5\n", encoding="utf-8")
    assert run(["compute", "--year", "2022", "--employment", str(data)]) == 1
    assert "line 3" in capsys.readouterr().err


def test_missing_file_exit_1(capsys):
    assert run(["compute", "--year", "2022", "--employment", "/nonexistent.csv"]) == 1


def test_usage_errors_exit_2(capsys):
    assert run(["compute", "--bogus"]) == 2
    assert run(["nope"]) == 2
    assert run([]) == 2
    assert run(["compute", "--year", "2022"]) == 2


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_help_for_every_subcommand(command, capsys):
    assert run([command, "--help"]) == 0
    assert "--" in capsys.readouterr().out


def test_gap(employment, capsys):
    assert run(["gap", "--year", "2022", "--employment", employment]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "province;name;year;share_female;share_male;gap_pp"
    assert lines[1].startswith("28;Madrid;2022;")


def test_stability_fixtures(capsys):
    assert run(["stability"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# spearman=0.97495890550149")
    assert "28;0.215700;0.216800;0.001100" in out


def test_stability_from_employment(employment, capsys):
    assert run(["stability", "--employment", employment, "--level", "national"]) == 0
    assert capsys.readouterr().out.splitlines()[2].startswith("ES;")


def test_scenario(employment, tmp_path, capsys):
    ov = tmp_path / "ov.csv"
    ov.write_text("cnae,factor\n62,0.35\n", encoding="utf-8")
    assert run(["scenario", "--employment", employment, "--year", "2022", "--overrides", str(ov)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "shift;territory;base_share;scenario_share;delta"
    assert lines[1] == "0;08;0.252000;0.292000;0.040000"
    assert run(["scenario", "--employment", employment, "--year", "2022", "--shift-grid=-0.01:0:0.01"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 3 * 2
    assert lines[-1].startswith("0.01;28;") and lines[-1].endswith(";0.010000")


def test_render(tmp_path, capsys):
    out = tmp_path / "map.svg"
    assert run(["render", "--format", "svg", "--output", str(out)]) == 0
    assert out.read_text(encoding="utf-8").count("<path ") == 52
    assert run(["render", "--gap", "--year", "2022"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["features"]) == 52


def test_render_partial_coverage_warns(employment, capsys):
    assert run(["render", "--employment", employment, "--bins", "2", "--strategy", "equal-width"]) == 0
    _, err = capsys.readouterr()
    assert "no data for features" in err


def test_inspect_matrix(tmp_path, capsys):
    assert run(["inspect-matrix"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "cnae,factor,label" and len(text.splitlines()) == 89
    other = tmp_path / "m.csv"
    other.write_text(text.replace("62,0.300,", "62,0.350,"), encoding="utf-8")
    assert run(["inspect-matrix", "--diff", str(other)]) == 0
    assert capsys.readouterr().out == "cnae;factor_a;factor_b;delta\n62;0.300;0.350;+0.050\n"


def test_console_script_byte_identical(tmp_path):
    cmd = [sys.executable, "-m", "ia_exposure.cli", "verify"]
    a = subprocess.run(cmd, capture_output=True, check=True)
    b = subprocess.run(cmd, capture_output=True, check=True)
    assert a.stdout == b.stdout and a.returncode == b.returncode == 0
