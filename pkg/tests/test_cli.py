import json

from contrastlab import cli

SERIES_TOML = """\
campaign = "series"
output_dir = "ignored"

[geometry]
kind = "annulus"
r_sigma = 1.0
r_outer = 2.0
levels = 1

[physics]
bc = "neumann"
rho = [100.0]

[data]
f = "zero"
g = "cos_theta"

[series]
K_max = 30
tol = 1e-12
"""


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0


def test_unknown_flag_exits_2():
    assert cli.main(["solve", "--definitely-not-a-flag"]) == 2


def test_unknown_subcommand_exits_2():
    assert cli.main(["bogus"]) == 2


def test_mesh_command(tmp_path, capsys):
    code = cli.main(["mesh", "--kind", "annulus", "--levels", "1",
                     "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "mesh.txt").exists()
    info = json.loads(capsys.readouterr().out)
    assert info["nodes"] > 0


def test_solve_incompatible_exits_2(tmp_path, capsys):
    code = cli.main(["solve", "--levels", "1", "--bc", "neumann",
                     "--g", "one", "--out", str(tmp_path)])
    assert code == 2


def test_solve_and_outputs(tmp_path, capsys):
    code = cli.main(["solve", "--levels", "1", "--bc", "neumann",
                     "--g", "cos_theta", "--out", str(tmp_path),
                     "--format", "json"])
    assert code == 0
    assert (tmp_path / "solution.txt").exists()
    assert (tmp_path / "norms.json").exists()


def test_series_command(tmp_path, capsys):
    code = cli.main(["series", "--levels", "1", "--rho", "100",
                     "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "converged"
    assert (tmp_path / "series.csv").exists()
    assert (tmp_path / "remainder.csv").exists()


def test_campaign_and_verify(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "series.toml"
    cfg.write_text(SERIES_TOML)
    out = tmp_path / "run1"
    code = cli.main(["campaign", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert (out / "manifest.json").exists()
    assert cli.main(["verify", "--artifact", str(out)]) == 0
    # outputs stay inside --out
    written = {p.name for p in tmp_path.iterdir()}
    assert written == {"series.toml", "run1"}


def test_campaign_missing_config_exits_2(tmp_path):
    assert cli.main(["campaign", "--config",
                     str(tmp_path / "none.toml")]) == 2


def test_verify_failed_predicate_exits_4(tmp_path):
    cfg = tmp_path / "series.toml"
    cfg.write_text(SERIES_TOML)
    out = tmp_path / "run"
    assert cli.main(["campaign", "--config", str(cfg),
                     "--out", str(out)]) == 0
    # sabotage a stored series table: blow up the last cumulative ratio band
    series_csv = next(out.glob("series_rho*.csv"))
    lines = series_csv.read_text().splitlines()
    parts = lines[-1].split(",")
    parts[5] = "25.0"
    lines[-1] = ",".join(parts)
    series_csv.write_text("\n".join(lines) + "\n")
    assert cli.main(["verify", "--artifact", str(out)]) == 4


def test_oracle_command(tmp_path, capsys):
    code = cli.main(["oracle", "--problem", "transmission", "--mode", "1",
                     "--rho", "1000", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "profile.csv").exists()


def test_jobs_env_fallback(tmp_path, monkeypatch):
    cfg = tmp_path / "series.toml"
    cfg.write_text(SERIES_TOML)
    monkeypatch.setenv("CONTRASTLAB_JOBS", "2")
    assert cli.main(["campaign", "--config", str(cfg),
                     "--out", str(tmp_path / "r")]) == 0
