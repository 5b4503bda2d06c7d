import hashlib
import json

import pytest

from contrastlab import experiments
from contrastlab.errors import ConfigError, IntegrityError

SERIES_CFG = {
    "campaign": "series",
    "geometry": {"kind": "annulus", "r_sigma": 1.0, "r_outer": 2.0,
                 "levels": 1},
    "physics": {"bc": "neumann", "rho": [100.0, 1000.0]},
    "data": {"f": "zero", "g": "cos_theta"},
    "series": {"K_max": 40, "tol": 1e-12},
}

LIMIT_CFG = {
    "campaign": "limit_rate",
    "geometry": {"kind": "annulus", "r_sigma": 1.0, "r_outer": 2.0,
                 "levels": 1},
    "physics": {"bc": "neumann"},
    "data": {"g": "cos_theta"},
    "windows": {"0": [1e2, 1e3, 1e4], "1": [1e2, 1e3, 1e4]},
}


def _dir_hashes(path):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(path.glob("*.csv"))}


class TestSeriesCampaign:
    def test_pass_and_verify(self, tmp_path):
        res = experiments.run_campaign(SERIES_CFG, tmp_path / "run")
        assert res.passed
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["schema"] == "contrastlab-manifest-v1"
        assert manifest["pass"] is True
        assert manifest["files"]
        report = experiments.verify_manifest(tmp_path / "run")
        assert report.passed
        assert not report.hash_mismatches

    def test_deterministic_reruns(self, tmp_path):
        experiments.run_campaign(SERIES_CFG, tmp_path / "a")
        experiments.run_campaign(SERIES_CFG, tmp_path / "b")
        assert _dir_hashes(tmp_path / "a") == _dir_hashes(tmp_path / "b")


class TestLimitRateCampaign:
    def test_slopes_recorded(self, tmp_path):
        res = experiments.run_campaign(LIMIT_CFG, tmp_path / "run")
        assert res.passed
        assert abs(res.parameters["slope_K0"] + 1.0) <= 0.1

    def test_perturbed_value_fails_slope(self, tmp_path):
        experiments.run_campaign(LIMIT_CFG, tmp_path / "run")
        csv = tmp_path / "run" / "remainder.csv"
        lines = csv.read_text().splitlines()
        parts = lines[1].split(",")
        parts[2] = f"{float(parts[2]) * 10:.17g}"
        lines[1] = ",".join(parts)
        csv.write_text("\n".join(lines) + "\n")
        report = experiments.verify_manifest(tmp_path / "run")
        assert not report.passed
        assert "remainder.csv" in report.hash_mismatches

    def test_truncated_file_is_integrity_error(self, tmp_path):
        experiments.run_campaign(LIMIT_CFG, tmp_path / "run")
        (tmp_path / "run" / "remainder.csv").write_text("K,rho\n1,2,3\n")
        with pytest.raises(IntegrityError):
            experiments.verify_manifest(tmp_path / "run")

    def test_missing_file_is_integrity_error(self, tmp_path):
        experiments.run_campaign(LIMIT_CFG, tmp_path / "run")
        (tmp_path / "run" / "remainder.csv").unlink()
        with pytest.raises(IntegrityError):
            experiments.verify_manifest(tmp_path / "run")


class TestCheckerboardCampaign:
    def test_growth(self, tmp_path):
        cfg = {
            "campaign": "checkerboard",
            "geometry": {"half_width": 1.0, "r_sigma": 1.0, "r_outer": 2.0},
            "physics": {"rho": 1e4, "bc": "dirichlet"},
            "levels": [0, 1, 2, 3],
        }
        res = experiments.run_campaign(cfg, tmp_path / "run")
        flux = res.parameters["checkerboard_flux"]
        assert all(b > a for a, b in zip(flux, flux[1:]))
        report = experiments.verify_manifest(tmp_path / "run")
        assert report.predicate_results[
            "checkerboard_strictly_increasing"]["pass"]


class TestConfigErrors:
    def test_unknown_campaign(self, tmp_path):
        with pytest.raises(ConfigError):
            experiments.run_campaign({"campaign": "nope"}, tmp_path)

    def test_empty_sweep_list(self, tmp_path):
        cfg = dict(SERIES_CFG, physics={"bc": "neumann", "rho": []})
        with pytest.raises(ConfigError):
            experiments.run_campaign(cfg, tmp_path / "run")

    def test_missing_geometry(self, tmp_path):
        with pytest.raises(ConfigError):
            experiments.run_campaign({"campaign": "series"}, tmp_path)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            experiments.resolve_data("nonsense", "g", None)


def test_uniformity_campaign(tmp_path):
    cfg = {
        "campaign": "uniformity",
        "geometry": {"kind": "annulus", "r_sigma": 1.0, "r_outer": 2.0,
                     "levels": 1},
        "physics": {"bc": ["neumann"], "rho": [10.0, 1e3, 1e6],
                    "arg_rho_degrees": [0, 90]},
        "data": {"g": "cos_theta"},
    }
    res = experiments.run_campaign(cfg, tmp_path / "run")
    assert res.passed
    report = experiments.verify_manifest(tmp_path / "run")
    assert report.passed


def test_maxwell_campaign_runs(tmp_path):
    cfg = {
        "campaign": "maxwell_uniform",
        "geometry": {"kind": "annulus", "r_sigma": 1.0, "r_outer": 2.0,
                     "levels": 1},
        "physics": {"sigma": [1e2, 1e4, 1e6], "omega": 1.0},
        "data": {"j": "ring_bump"},
    }
    res = experiments.run_campaign(cfg, tmp_path / "run")
    names = {p.name for p in res.predicates}
    assert {"ratio_maxmin", "energy_identities"} <= names
    by_name = {p.name: p for p in res.predicates}
    assert by_name["ratio_maxmin"].passed()
    assert by_name["energy_identities"].passed()
    report = experiments.verify_manifest(tmp_path / "run")
    assert report.predicate_results["ratio_maxmin"]["pass"]


def test_symmetric_campaign(tmp_path):
    cfg = {
        "campaign": "symmetric",
        "geometry": {"kind": "annulus", "r_sigma": 1.0, "r_outer": 2.0,
                     "levels": 1},
        "physics": {"bc": "neumann", "rho": [0.01],
                    "rho_sweep": [0.1, 0.01, 0.001]},
        "data": {"g": "cos_theta"},
    }
    res = experiments.run_campaign(cfg, tmp_path / "run")
    assert res.passed
    assert experiments.verify_manifest(tmp_path / "run").passed


def test_modified_campaign(tmp_path):
    cfg = {
        "campaign": "modified",
        "geometry": {"kind": "annulus", "r_sigma": 1.0, "r_outer": 2.0,
                     "levels": 1},
        "physics": {"bc": "neumann", "rho": [100.0]},
        "data": {},
    }
    res = experiments.run_campaign(cfg, tmp_path / "run")
    assert res.passed
    assert experiments.verify_manifest(tmp_path / "run").passed


def test_skin_campaign(tmp_path):
    cfg = {
        "campaign": "skin",
        "geometry": {"kind": "annulus_graded", "r_sigma": 1.0,
                     "r_outer": 2.0, "h_sigma": 4e-3, "h_coarse": 0.08,
                     "growth": 1.3, "h_arc": 0.08},
        "physics": {"omega": 1.0, "delta": [0.2, 0.1, 0.05]},
        "orders": [0, 1],
        "data": {"j": "ring_bump"},
    }
    res = experiments.run_campaign(cfg, tmp_path / "run")
    assert res.passed
    assert experiments.verify_manifest(tmp_path / "run").passed


def test_square_polygon_geometry_config(tmp_path):
    cfg = {
        "campaign": "uniformity",
        "geometry": {"kind": "square_polygon", "half_width": 2.0,
                     "polygon": [[-0.5, -0.5], [0.5, -0.5],
                                 [0.5, 0.5], [-0.5, 0.5]],
                     "h_target": 0.2},
        "physics": {"bc": "neumann", "rho": [10.0, 1e3],
                    "arg_rho_degrees": [0]},
        "data": {"g": "cos_theta"},
    }
    res = experiments.run_campaign(cfg, tmp_path / "run")
    assert res.passed
