"""Tests for configuration resolution."""

import pytest

from triples.config import (
    DEFAULTS,
    get_grid,
    get_oracle_settings,
    get_seed,
    get_tolerance,
    get_workers,
    load_config,
)
from triples.errors import SpecFormatError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("TRIPLE_LAB_SEED", "TRIPLE_LAB_WORKERS", "TRIPLE_LAB_TOLERANCE"):
        monkeypatch.delenv(name, raising=False)


class TestLoadConfig:

    def test_no_config_file(self, tmp_path):
        cfg = load_config(str(tmp_path))
        assert cfg == DEFAULTS

    def test_defaults_not_mutated(self, tmp_path):
        (tmp_path / "config.toml").write_text("[grid]\nre_count = 9\n")
        load_config(str(tmp_path))
        assert DEFAULTS["grid"]["re_count"] == 5

    def test_with_toml(self, tmp_path):
        (tmp_path / "config.toml").write_text("seed = 12\n[tolerances]\ninvariance = 1e-5\n")
        cfg = load_config(str(tmp_path))
        assert cfg["seed"] == 12
        assert cfg["tolerances"]["invariance"] == 1e-5
        # untouched keys keep their defaults
        assert cfg["tolerances"]["oracle"] == 1e-8

    def test_caching(self, tmp_path):
        """Second call returns cached result."""
        (tmp_path / "config.toml").write_text("seed = 42\n")
        cfg1 = load_config(str(tmp_path))
        cfg2 = load_config(str(tmp_path))
        assert cfg1 is cfg2


class TestGetSeed:

    def test_default(self, tmp_path):
        assert get_seed(str(tmp_path)) == 0

    def test_from_toml(self, tmp_path):
        (tmp_path / "config.toml").write_text("seed = 42\n")
        assert get_seed(str(tmp_path)) == 42

    def test_env_wins_over_toml(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRIPLE_LAB_SEED", "7")
        (tmp_path / "config.toml").write_text("seed = 42\n")
        assert get_seed(str(tmp_path)) == 7

    def test_cli_wins_over_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRIPLE_LAB_SEED", "7")
        assert get_seed(str(tmp_path), 3) == 3


class TestGetWorkers:

    def test_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRIPLE_LAB_WORKERS", "4")
        assert get_workers(str(tmp_path)) == 4

    def test_at_least_one(self, tmp_path):
        assert get_workers(str(tmp_path), 0) == 1


class TestEnvironmentOverrides:

    @pytest.mark.parametrize("name, value", [
        ("TRIPLE_LAB_SEED", "seven"),
        ("TRIPLE_LAB_WORKERS", "2.5"),
        ("TRIPLE_LAB_TOLERANCE", "tight"),
    ])
    def test_malformed_value_names_the_variable(self, tmp_path, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        with pytest.raises(SpecFormatError, match=name):
            load_config(str(tmp_path))

    def test_malformed_workers_fail_the_run(self, tmp_path, monkeypatch):
        from triples.runner import EXIT_ERROR, RunConfig, run

        monkeypatch.setenv("TRIPLE_LAB_WORKERS", "many")
        result = run(RunConfig(command="oracle", root=str(tmp_path), n=10, output=str(tmp_path / "r.json")))
        assert result.exit_code == EXIT_ERROR


class TestGetTolerance:

    def test_default(self, tmp_path):
        assert get_tolerance(str(tmp_path), "bounded") == 1e-4

    def test_env_overrides_every_check(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRIPLE_LAB_TOLERANCE", "0.01")
        assert get_tolerance(str(tmp_path), "identity") == 0.01
        assert get_tolerance(str(tmp_path), "rank_one") == 0.01

    def test_cli_wins(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRIPLE_LAB_TOLERANCE", "0.01")
        assert get_tolerance(str(tmp_path), "identity", 1e-3) == 1e-3

    def test_unknown_name(self, tmp_path):
        with pytest.raises(KeyError, match="Unknown tolerance"):
            get_tolerance(str(tmp_path), "nope")


class TestTables:

    def test_grid_is_a_copy(self, tmp_path):
        grid = get_grid(str(tmp_path))
        grid["re_count"] = 100
        assert get_grid(str(tmp_path))["re_count"] == 5

    def test_oracle_settings(self, tmp_path):
        (tmp_path / "config.toml").write_text("[oracle]\nn = 500\n")
        settings = get_oracle_settings(str(tmp_path))
        assert settings["n"] == 500
        assert settings["quantile_cut"] == 1e-4

    def test_corpus_config(self, corpus_dir):
        assert get_workers(corpus_dir) == 2
