import json
import os

import numpy as np
import pytest

from irmlab import cli
from irmlab.cli import (
    ConfigError,
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_USAGE,
    emit_svg,
    list_presets,
    load_config,
    parse_config,
    run,
)

ALL_SCENARIOS = [
    "goe-baseline", "gw", "band", "sparse", "block", "heavy", "lift2",
    "wishart", "counterexample-blockdiag", "diagrams-exact", "nbpath-exact",
    "mixing-audit",
]


class TestConfig:
    def test_presets_cover_all_scenarios(self):
        presets = list_presets()
        assert len(presets) >= 11
        for name in ALL_SCENARIOS:
            assert name in presets

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "nope"})

    def test_unknown_key_is_error(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "gw", "bogus": 1})

    def test_unknown_param_is_error(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "gw", "params": {"zz": 3}})

    def test_empty_config_exit_64(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("")
        assert cli.main(["run", "--config", str(path)]) == EXIT_USAGE

    def test_range_checks(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "mixing-audit", "params": {"delta": 0.5}})
        with pytest.raises(ConfigError):
            parse_config({"scenario": "lift2", "params": {"d": 3}})

    def test_toml_or_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"scenario": "mixing-audit"}))
        cfg = load_config(str(p))
        assert cfg["scenario"] == "mixing-audit"


class TestScenarios:
    def test_mixing_audit_uniform(self, tmp_path):
        cfg = parse_config({"scenario": "mixing-audit", "seed": 0,
                            "out": str(tmp_path),
                            "params": {"preset": "uniform", "N": 16,
                                       "t": 1, "gamma": 1.0, "delta": 0.05,
                                       "horizon": 32}})
        assert run(cfg) == EXIT_PASS
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["payload"]["mixing_report"]["b1_pass"]

    def test_mixing_audit_blockdiag_fails(self, tmp_path):
        cfg = parse_config({"scenario": "mixing-audit", "seed": 0,
                            "out": str(tmp_path),
                            "params": {"preset": "blockdiag", "N": 16,
                                       "t": 2, "gamma": 2.0, "delta": 0.05,
                                       "horizon": 32}})
        assert run(cfg) == EXIT_FAIL

    def test_diagrams_exact_small(self, tmp_path):
        cfg = parse_config({"scenario": "diagrams-exact", "seed": 1,
                            "out": str(tmp_path),
                            "params": {"N": 2, "max_m": 4}})
        assert run(cfg) == EXIT_PASS
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["payload"]["all_pass"]

    def test_nbpath_exact_small(self, tmp_path):
        cfg = parse_config({"scenario": "nbpath-exact", "seed": 1,
                            "out": str(tmp_path),
                            "params": {"N": 4, "n": 5, "seeds": 3,
                                       "wishart_M": 2, "wishart_N": 3,
                                       "wishart_n": 2}})
        assert run(cfg) == EXIT_PASS

    def test_lift2(self, tmp_path):
        cfg = parse_config({"scenario": "lift2", "seed": 3, "out": str(tmp_path),
                            "params": {"N": 16, "d": 4, "trials": 5}})
        assert run(cfg) == EXIT_PASS

    def test_goe_baseline_small(self, tmp_path):
        cfg = parse_config({"scenario": "goe-baseline", "seed": 4,
                            "out": str(tmp_path),
                            "params": {"N": 40, "replicas": 120}})
        code = run(cfg)
        assert code == EXIT_PASS
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["payload"]["status"] == "no rejection (as expected)"

    def test_counterexample_small(self, tmp_path):
        cfg = parse_config({"scenario": "counterexample-blockdiag", "seed": 5,
                            "out": str(tmp_path),
                            "params": {"N": 80, "replicas": 600}})
        assert run(cfg) == EXIT_PASS
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["payload"]["status"] == "rejection expected and observed"


class TestDeterminism:
    def _run_twice(self, tmp_path, threads_a="1", threads_b="4"):
        outs = []
        for sub, threads in (("a", threads_a), ("b", threads_b)):
            out = tmp_path / sub
            code = cli.main(["--threads", threads, "run", "--config",
                             str(tmp_path / "cfg.json"), "--out", str(out)])
            assert code == EXIT_PASS
            outs.append((out / "report.json").read_bytes())
        return outs

    def test_byte_identical_reports(self, tmp_path):
        (tmp_path / "cfg.json").write_text(json.dumps(
            {"scenario": "mixing-audit", "seed": 7,
             "params": {"preset": "band", "N": 32, "t": 32, "gamma": 2.0,
                        "delta": 0.05, "horizon": 160}}))
        a, b = self._run_twice(tmp_path)
        assert a == b

    def test_statistical_scenario_determinism(self, tmp_path):
        (tmp_path / "cfg.json").write_text(json.dumps(
            {"scenario": "goe-baseline", "seed": 5,
             "params": {"N": 30, "replicas": 100}}))
        a, b = self._run_twice(tmp_path)
        assert a == b


class TestSvg:
    def test_deterministic_bytes(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = {"test": rng.standard_normal(100),
                   "baseline": rng.standard_normal(100)}
        p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
        emit_svg(samples, 20, str(p1))
        emit_svg(samples, 20, str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_bytes().startswith(b"<svg")

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_svg({"x": np.array([])}, 10, str(tmp_path / "x.svg"))
        assert not (tmp_path / "x.svg").exists()


class TestCliEntry:
    def test_presets_command(self, capsys):
        assert cli.main(["presets"]) == EXIT_PASS
        out = capsys.readouterr().out
        doc = json.loads(out)
        assert "band" in doc

    def test_cheb_orthogonality(self, capsys):
        assert cli.main(["cheb", "verify", "--suite", "orthogonality",
                         "--max", "20"]) == EXIT_PASS

    def test_cheb_product(self):
        assert cli.main(["cheb", "verify", "--suite", "product"]) == EXIT_PASS

    def test_cheb_wishart_poly(self):
        assert cli.main(["cheb", "verify", "--suite", "wishart-poly",
                         "--max", "8"]) == EXIT_PASS

    def test_diagrams_command(self, capsys):
        assert cli.main(["diagrams", "verify", "--s", "1", "--n", "4",
                         "--N", "3", "--beta", "1"]) == EXIT_PASS

    def test_nbpath_command(self):
        assert cli.main(["nbpath", "verify", "--model", "wigner", "--n", "5",
                         "--N", "4", "--seeds", "3"]) == EXIT_PASS

    def test_mixing_command(self, capsys):
        code = cli.main(["mixing", "check", "--profile-preset", "uniform",
                         "--N", "16", "--t", "1", "--gamma", "1.0",
                         "--delta", "0.05", "--horizon", "32"])
        assert code == EXIT_PASS

    @pytest.mark.parametrize("preset", ["sparse", "regular", "gw"])
    def test_mixing_presets(self, preset, capsys):
        code = cli.main(["mixing", "check", "--profile-preset", preset,
                         "--N", "16", "--t", "8", "--gamma", "3.0",
                         "--delta", "0.09", "--horizon", "64", "--seed", "3"])
        assert code in (EXIT_PASS, EXIT_FAIL, 3)

    def test_mixing_bipartite_preset(self, capsys):
        code = cli.main(["mixing", "check", "--profile-preset", "wishart",
                         "--N", "8", "--t", "10", "--gamma", "2.0",
                         "--delta", "0.09", "--horizon", "120"])
        assert code == EXIT_PASS
        out = json.loads(capsys.readouterr().out)
        assert out["bipartite"] is True

    def test_sample_command(self, tmp_path):
        spec = {"beta": 1, "entry_law": "gaussian", "model": "wigner",
                "profile": {"kind": "square", "n_rows": 8, "n_cols": 8,
                            "storage": "dense",
                            "data": (np.full((8, 8), 1 / 8)).tolist(),
                            "metadata": {}},
                "seed": 0}
        spath = tmp_path / "spec.json"
        spath.write_text(json.dumps(spec))
        out = tmp_path / "draws"
        assert cli.main(["sample", "--spec", str(spath), "--replicas", "2",
                         "--seed", "1", "--out", str(out), "--eigs-only"]) == EXIT_PASS
        assert sorted(os.listdir(out)) == ["eigs_00000.csv", "eigs_00001.csv"]

    def test_edge_compare_command(self, tmp_path):
        spec = {"beta": 1, "entry_law": "gaussian", "model": "wigner",
                "profile": {"kind": "square", "n_rows": 30, "n_cols": 30,
                            "storage": "dense",
                            "data": (np.full((30, 30), 1 / 30)).tolist(),
                            "metadata": {}},
                "seed": 0}
        for name in ("t.json", "b.json"):
            (tmp_path / name).write_text(json.dumps(spec))
        out = tmp_path / "rep.json"
        code = cli.main(["edge", "compare", "--test", str(tmp_path / "t.json"),
                         "--baseline", str(tmp_path / "b.json"),
                         "--k", "1", "--replicas", "100", "--seed", "2",
                         "--out", str(out),
                         "--svg", str(tmp_path / "h.svg")])
        assert code == EXIT_PASS
        assert out.exists() and (tmp_path / "h.svg").exists()
