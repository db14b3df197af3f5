import csv
import json
import subprocess
import sys

import pytest

from rivalfit.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_example_theoretical_play_exact(capsys):
    code, out, _ = run_cli(capsys, "example", "--alpha", "1", "--beta", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["r1"] == 0.1875
    assert payload["r2"] == 1.8125
    assert payload["total"] == 2


def test_example_table_export(tmp_path, capsys):
    table = tmp_path / "rows.csv"
    code, out, _ = run_cli(capsys, "example", "--alpha", "1", "--beta", "1",
                           "--table", str(table))
    assert code == 0
    rows = list(csv.DictReader(table.open()))
    assert len(rows) == 16
    assert rows[12] == {"pattern": "1100", "e1": "0", "e2": "1", "y": "2", "r1": "2"}


def test_example_maxmin_json(capsys):
    code, out, _ = run_cli(capsys, "example", "--maxmin", "--grid", "0:3:0.25")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"maxmin", "alpha_star", "beta_response", "evaluations", "grid"}
    assert payload["evaluations"] == 13 * 13


def test_example_surface_with_plot(tmp_path, capsys):
    out_csv = tmp_path / "surface.csv"
    fig = tmp_path / "surface.png"
    code, _, _ = run_cli(capsys, "example", "--surface", "--grid", "0:3:0.5",
                         "--out", str(out_csv), "--plot", str(fig))
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 49
    assert fig.read_bytes()[:4] == b"\x89PNG"


def test_reward_symmetric_case(capsys):
    code, out, _ = run_cli(capsys, "reward", "--g1", "0.5", "--g2", "0.5",
                           "--g12", "0.25", "--a", "1,1,1,1", "--order", "60")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["value"] - 0.398942) < 5e-3
    assert payload["order"] == 60


def test_hermite_closed_form(capsys):
    code, out, _ = run_cli(capsys, "hermite", "--order", "2")
    assert code == 0
    assert out.splitlines() == ["index,node,weight", "0,-1,0.5", "1,1,0.5"]


def test_hermite_full_precision_digits(capsys):
    code, out, _ = run_cli(capsys, "hermite", "--order", "7")
    node = out.splitlines()[1].split(",")[1]
    assert len(node.lstrip("-").replace(".", "")) >= 16  # 17 significant digits


def test_mc_seed_recorded_and_env_fallback(capsys, monkeypatch):
    args = ["mc", "--g1", "0.5", "--g2", "0.5", "--g12", "0.25",
            "--a", "1,1,1,1", "--samples", "2000"]
    code, out, _ = run_cli(capsys, *args, "--seed", "5")
    assert code == 0 and json.loads(out)["seed"] == 5
    monkeypatch.setenv("RIVALFIT_SEED", "77")
    code, out, _ = run_cli(capsys, *args)
    assert code == 0 and json.loads(out)["seed"] == 77


def test_mc_determinism_same_flags(capsys):
    args = ["mc", "--g1", "0.3", "--g2", "0.6", "--g12", "0.18",
            "--a", "1.5,2,0.8,1.1", "--samples", "5000", "--seed", "3"]
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second


def test_maxmin_json_fields(capsys):
    code, out, _ = run_cli(capsys, "maxmin", "--g1", "0.2", "--g2", "0.6", "--g12", "0.12",
                           "--coarse", "7", "--refine", "1", "--order", "16")
    assert code == 0
    payload = json.loads(out)
    assert payload["gain"] == pytest.approx(payload["u_star"] / payload["u_theoretical"], rel=1e-6)
    assert len(payload["a1_star"]) == 2 and len(payload["a2_response"]) == 2


def test_sweep_csv_metadata_and_determinism(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["sweep", "--g1", "0.2:0.4:0.2", "--g2", "0.3:0.3:0.1", "--g12", "product",
            "--coarse", "7", "--refine", "1", "--order", "16"]
    assert run_cli(capsys, *args, "--out", str(out1))[0] == 0
    assert run_cli(capsys, *args, "--out", str(out2))[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["cubature_order"] == 16
    assert meta["g12_rule"] == "product"
    assert meta["version"]
    # round trip: every emitted number parses back losslessly at 10 digits
    rows = list(csv.DictReader(out1.open()))
    for row in rows:
        gain = float(row["gain"])
        assert gain == pytest.approx(float(row["u_star"]) / float(row["u_theoretical"]), rel=1e-9)


def test_sweep_auto_plot_name(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code, _, _ = run_cli(capsys, "sweep", "--g1", "0.2:0.2:0.1", "--g2", "0.3:0.3:0.1",
                         "--g12", "product", "--coarse", "7", "--refine", "1",
                         "--order", "16", "--out", str(out), "--plot")
    assert code == 0
    assert (tmp_path / "grid.png").read_bytes()[:4] == b"\x89PNG"


def test_config_file_with_cli_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("g1=0.5\ng2=0.5\ng12=0.25\na=1,1,1,1\norder=40\n")
    code, out, _ = run_cli(capsys, "reward", "--config", str(cfg), "--g2", "0.6")
    assert code == 0
    payload = json.loads(out)
    assert payload["g1"] == 0.5
    assert payload["g2"] == 0.6  # explicit flag wins
    assert payload["order"] == 40


def test_invalid_regime_exits_2(capsys):
    code, _, err = run_cli(capsys, "reward", "--g1", "0.5", "--g2", "0.4",
                           "--g12", "0.45", "--a", "1,1,1,1")
    assert code == 2
    assert "g12" in err


def test_missing_flag_named_in_error(capsys):
    code, _, err = run_cli(capsys, "reward", "--g1", "0.5", "--g2", "0.5", "--g12", "0.25")
    assert code == 2
    assert "--a" in err


def test_bad_order_and_grid_exit_2(capsys):
    code, _, err = run_cli(capsys, "hermite", "--order", "4096")
    assert code == 2
    code, _, err = run_cli(capsys, "example", "--surface", "--grid", "0:3:0")
    assert code == 2


def test_capacity_error_exits_3(capsys, monkeypatch):
    import rivalfit.cli as cli_mod
    from rivalfit.errors import CapacityError

    def boom(args):
        raise CapacityError("state space too large")

    monkeypatch.setitem(cli_mod.__dict__, "_cmd_hermite", boom)
    parser_args = ["hermite", "--order", "4"]
    code = cli_mod.main(parser_args)
    assert code == 3


def test_help_lists_flags_with_defaults():
    for command, expected in [
        ("maxmin", ["--box", "--coarse", "--refine", "--shrink", "--order",
                    "-2:5", "29", "3", "0.25", "60"]),
        ("mc", ["--samples", "--seed", "--parallel", "1000000", "10000"]),
        ("sweep", ["--g12", "--plot", "--parallel"]),
    ]:
        result = subprocess.run(
            [sys.executable, "-m", "rivalfit.cli", command, "--help"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        for token in expected:
            assert token in result.stdout, (command, token)


def test_console_entry_point():
    result = subprocess.run(
        [sys.executable, "-m", "rivalfit.cli", "example", "--alpha", "2.1", "--beta", "1"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert json.loads(result.stdout)["r1"] == 0.6875


def test_no_stray_outputs(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    run_cli(capsys, "example", "--alpha", "1", "--beta", "1")
    assert list(tmp_path.iterdir()) == []
