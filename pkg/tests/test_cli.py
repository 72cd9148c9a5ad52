import json

import pytest

from fockdistill import cli, figures


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, obj):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return str(path)


def test_help_lists_commands_and_figures(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for word in ("figure", "sweep", "point", "converge", "Exit codes"):
        assert word in out
    with pytest.raises(SystemExit):
        cli.main(["figure", "--help"])
    out = capsys.readouterr().out
    for fid in figures.FIGURES:
        assert fid in out


def test_point_one_photon_subtraction(capsys):
    code, out, _ = run(capsys, "point", "--source", "1msv", "--nbar", "1e-4", "--protocol", "1ps")
    assert code == 0
    fields = dict(line.split(None, 1) for line in out.splitlines() if line and not line.startswith(" "))
    assert float(fields["ln"]) == pytest.approx(1.0, abs=0.01)
    assert "populations (top 8)" in out
    assert len([line for line in out.splitlines() if line.startswith("  |")]) == 8


def test_point_two_msv_initial(capsys):
    code, out, _ = run(capsys, "point", "--source", "2msv", "--nbar", "0.1", "--protocol", "initial")
    assert code == 0
    assert "ln            0.6399" in out


def test_point_runtime_failure_exit_code(capsys):
    code, _, err = run(capsys, "point", "--source", "1msv", "--nbar", "5", "--protocol", "2ps")
    assert code == 1
    assert "TruncationError" in err


def test_point_config_error_exit_code(capsys):
    code, _, err = run(capsys, "point", "--source", "1msv", "--nbar", "0.1", "--protocol", "d2ps")
    assert code == 2
    assert "alpha" in err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["figure", "9z"])
    assert exc.value.code == 2


def test_converge_command(capsys):
    code, out, _ = run(capsys, "converge", "--source", "2msv", "--nbar", "0.1", "--protocol", "2ps")
    assert code == 0
    diff = float(out.split("difference")[1].split()[0])
    assert diff < 1e-4


def test_sweep_minimal_config(tmp_path, capsys):
    path = write_config(tmp_path, {"source": "1msv", "nbar": 0.1, "protocol": "d2ps", "alpha": "optimize"})
    code, out, _ = run(capsys, "sweep", "--config", path)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# fockdistill")
    assert lines[1].startswith("# config-sha256 ")
    header = lines[2].split(",")
    assert "alpha_opt" in header and "ln" in header
    assert len(lines) == 4
    row = dict(zip(header, lines[3].split(",")))
    assert float(row["ln"]) > 1.5
    assert row["status"] == "ok"


def test_sweep_alpha_grid_rows(tmp_path, capsys):
    cfg = {"source": "2msv", "nbar": 0.1, "protocol": "d2ps", "loss": [0.0, 0.45, 0.9],
           "alpha": {"start": 0.0, "stop": 0.8, "count": 5, "log": False}}
    code, out, _ = run(capsys, "sweep", "--config", write_config(tmp_path, cfg), "--no-variances")
    assert code == 0
    body = [line for line in out.splitlines() if not line.startswith("#")][1:]
    assert len(body) == 15
    pairs = [(line.split(",")[4], line.split(",")[5]) for line in body]
    assert pairs[:2] == [("0", "0"), ("0", "0.2")]


def test_sweep_unknown_key(tmp_path, capsys):
    cfg = {"source": "1msv", "nbar": 0.1, "protocol": "d2ps", "alpha": 0.1, "alpha_B": -0.1}
    code, _, err = run(capsys, "sweep", "--config", write_config(tmp_path, cfg))
    assert code == 2
    assert "unknown key" in err and "alpha_B" in err


@pytest.mark.parametrize(
    "cfg, word",
    [
        ({"nbar": 0.1, "protocol": "2ps"}, "source"),
        ({"source": "1msv", "nbar": {"start": 0.1, "stop": 1}, "protocol": "2ps"}, "nbar"),
        ({"source": "1msv", "nbar": 0.1, "protocol": "2ps", "model": {"tap": 2}}, "reflectivity"),
        ({"source": "1msv", "nbar": 0.1, "protocol": "2ps", "model": "noisy"}, "model"),
        ({"source": "1msv", "nbar": 0.1, "protocol": "2ps", "dim": "big"}, "dim"),
        ({"source": "1msv", "nbar": "x", "protocol": "2ps"}, "nbar"),
    ],
)
def test_sweep_config_errors_name_the_key(tmp_path, capsys, cfg, word):
    code, _, err = run(capsys, "sweep", "--config", write_config(tmp_path, cfg))
    assert code == 2
    assert word in err


def test_sweep_invalid_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "sweep", "--config", str(path))
    assert code == 2
    assert "JSON" in err


def test_sweep_json_embeds_resolved_config(tmp_path, capsys):
    cfg = {"source": "2msv", "nbar": [0.01, 0.1], "protocol": "1ps", "model": {"tap": 0.05}}
    out_path = tmp_path / "out.json"
    code, _, _ = run(capsys, "sweep", "--config", write_config(tmp_path, cfg), "--format", "json",
                     "--out", str(out_path))
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["config"]["model"] == {"tap": 0.05}
    assert doc["config"]["loss"] == 0.0 and doc["config"]["dim"] == "auto"
    assert len(doc["rows"]) == 2
    p = doc["rows"][0][doc["columns"].index("p_success")]
    assert 0 < p < 1


def test_sweep_output_is_deterministic(tmp_path, capsys):
    path = write_config(tmp_path, {"source": "1msv", "nbar": [0.01, 0.2], "protocol": "2ps"})
    first = run(capsys, "sweep", "--config", path, "--threads", "1")[1]
    second = run(capsys, "sweep", "--config", path, "--threads", "3")[1]
    assert first == second


def test_failed_points_carry_markers(tmp_path, capsys):
    path = write_config(tmp_path, {"source": "1msv", "nbar": [0.1, 5.0], "protocol": "initial"})
    code, out, err = run(capsys, "sweep", "--config", path)
    assert code == 0
    last = out.splitlines()[-1]
    assert "failed: TruncationError" in last
    assert ",,," in last
    assert "1 of 2 points failed" in err


def test_format_value():
    assert cli.format_value(None) == ""
    assert cli.format_value(0.1) == "0.1"
    assert cli.format_value(1 / 3) == "0.333333333333"
    assert cli.format_value(12) == "12"
    assert cli.format_value(1e-20) == "1e-20"
