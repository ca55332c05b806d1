"""Tests for the runner: RunConfig, grid evaluation and report output."""

import csv
import json
import math
import os

import pytest

from triples.errors import SpecFormatError
from triples.runner import (
    CSV_COLUMNS,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_RESIDUAL,
    RunConfig,
    evaluate_grid,
    run,
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("TRIPLE_LAB_SEED", "TRIPLE_LAB_WORKERS", "TRIPLE_LAB_TOLERANCE"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def measures(corpus_dir):
    return os.path.join(corpus_dir, "measures")


@pytest.fixture
def triples_dir(corpus_dir):
    return os.path.join(corpus_dir, "triples")


def _config(tmp_path, command, **kwargs):
    kwargs.setdefault("root", str(tmp_path))
    kwargs.setdefault("output", str(tmp_path / "report.json"))
    return RunConfig(command=command, **kwargs)


class TestRunConfig:

    def test_unknown_command(self):
        with pytest.raises(SpecFormatError, match="unknown command"):
            RunConfig(command="integrate")

    def test_unknown_format(self):
        with pytest.raises(SpecFormatError, match="format"):
            RunConfig(command="weyl", format="xml")

    def test_tolerance_must_be_positive(self):
        with pytest.raises(SpecFormatError, match="tolerance"):
            RunConfig(command="weyl", tolerance=0.0)

    def test_echo(self):
        echo = RunConfig(command="charfn", kappa=0.3 + 0.4j, points=(2j,)).echo()
        assert echo["kappa"] == [0.3, 0.4]
        assert echo["points"] == [[0.0, 2.0]]
        assert "timestamp" not in echo
        json.dumps(echo)


class TestEvaluateGrid:

    def test_rows_in_grid_order(self):
        points = (1j, 2j, 3j)
        rows, failures = evaluate_grid({"z": lambda z: z, "double": lambda z: 2 * z}, points, workers=3)
        assert [r["quantity"] for r in rows] == ["z"] * 3 + ["double"] * 3
        assert [r["im_val"] for r in rows] == [1.0, 2.0, 3.0, 2.0, 4.0, 6.0]
        assert failures == []

    def test_failures_become_nan(self, caplog):
        def fn(z):
            if z == 2j:
                raise ZeroDivisionError("pole")
            return z

        rows, failures = evaluate_grid({"f": fn}, (1j, 2j))
        assert math.isnan(rows[1]["re_val"])
        assert failures == [{"quantity": "f", "re_z": 0.0, "im_z": 2.0, "error": "pole"}]
        assert "failed" in caplog.text


class TestCommands:

    def test_weyl_lebesgue_is_i(self, tmp_path, measures):
        result = run(_config(tmp_path, "weyl", measure=f"{measures}/lebesgue.json", points=(1j, 1 + 2j)))
        assert result.exit_code == EXIT_OK
        for row in result.rows:
            assert complex(row["re_val"], row["im_val"]) == pytest.approx(1j, abs=1e-8)

    def test_charfn_is_kappa(self, tmp_path, triples_dir):
        result = run(_config(tmp_path, "charfn", triple=f"{triples_dir}/lebesgue.json", points=(2j,)))
        assert result.exit_code == EXIT_OK
        row = next(r for r in result.rows if r["quantity"] == "S")
        assert complex(row["re_val"], row["im_val"]) == pytest.approx(0.2 + 0.4j, abs=1e-8)
        assert result.report["results"]["kappa"] == [0.2, 0.4]

    def test_classify(self, tmp_path, measures):
        result = run(_config(tmp_path, "classify", measure=f"{measures}/atom_only.json", real_points=(0.0, 1.0)))
        table = result.report["results"]["classification"]
        assert table[0] == {"s": 0.0, "class": "quasi-regular", "has_atom": True}
        assert table[1]["class"] == "quasi-regular"
        assert not table[1]["has_atom"]

    def test_classify_lebesgue_is_core(self, tmp_path, measures):
        result = run(_config(tmp_path, "classify", measure=f"{measures}/lebesgue.json", real_points=(0.0,)))
        assert result.report["results"]["classification"][0]["class"] == "core"

    def test_transform_bounded_case(self, tmp_path, triples_dir):
        result = run(_config(tmp_path, "transform", triple=f"{triples_dir}/half_line_tail.json", map="0,-1,1,0"))
        assert result.exit_code == EXIT_OK
        assert result.report["results"]["branch"] == "ii"
        assert result.report["results"]["omega"] == 0.0

    def test_transform_unbounded_case(self, tmp_path, triples_dir):
        result = run(_config(tmp_path, "transform", triple=f"{triples_dir}/nu05.yaml", map="2,1,0,1", points=(1j,)))
        results = result.report["results"]
        assert results["branch"] == "i"
        assert results["omega"] is None
        assert len(results["provenance"]) == 1

    def test_verify_invariance_passes(self, tmp_path, triples_dir):
        result = run(_config(tmp_path, "verify-invariance", triple=f"{triples_dir}/nu05.yaml", map="0,-1,1,0"))
        assert result.exit_code == EXIT_OK
        assert result.report["pass"] is True
        assert result.report["residuals"]["invariance"] < 1e-10

    def test_homogeneous_residual_failure(self, tmp_path):
        result = run(_config(tmp_path, "homogeneous", nu=(0.5,), points=(1 + 1j,), tolerance=1e-300))
        assert result.exit_code == EXIT_RESIDUAL
        assert result.report["pass"] is False

    def test_homogeneous_passes(self, tmp_path):
        result = run(_config(tmp_path, "homogeneous", nu=(0.25,), points=(1 + 1j, -1 + 2j)))
        assert result.exit_code == EXIT_OK
        assert set(result.report["residuals"]) == {"mn_inversion", "quadrature", "cayley"}

    def test_oracle_random_models(self, tmp_path):
        result = run(_config(tmp_path, "oracle", n=20, seed=5, points=(1j, 2 + 1j)))
        assert result.exit_code == EXIT_OK
        assert result.report["results"] == {"models": 10, "n": 20}
        assert "rank_one_inverse" in result.report["residuals"]

    def test_oracle_inverse_characteristic_gates_the_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setattr("triples.runner.check_inverse_characteristic", lambda d, grid: 1.0)
        result = run(_config(tmp_path, "oracle", n=20, seed=5, points=(1j, 2 + 1j)))
        assert result.exit_code == EXIT_RESIDUAL
        assert result.report["pass"] is False
        assert result.report["residuals"]["inverse_characteristic"] == 1.0

    def test_extension_type_table(self, tmp_path):
        result = run(_config(tmp_path, "extension-type"))
        table = result.report["results"]["extension_types"]
        assert [(row["friedrichs"], row["krein"]) for row in table] == [(False, True), (True, True), (True, False)]

    def test_extension_type_inverse_chain(self, tmp_path):
        result = run(_config(tmp_path, "extension-type", nu=(0.5,), inverse_chain=True))
        assert result.exit_code == EXIT_OK
        assert len(result.report["results"]["inverse_chain"]) == 1


class TestErrors:

    def test_missing_file(self, tmp_path):
        result = run(_config(tmp_path, "charfn", triple=str(tmp_path / "missing.json")))
        assert result.exit_code == EXIT_ERROR
        assert not (tmp_path / "report.json").exists()

    def test_missing_map(self, tmp_path, triples_dir):
        result = run(_config(tmp_path, "transform", triple=f"{triples_dir}/nu05.yaml"))
        assert result.exit_code == EXIT_ERROR

    def test_bad_map(self, tmp_path, triples_dir):
        result = run(_config(tmp_path, "transform", triple=f"{triples_dir}/nu05.yaml", map="1,0,0,-1"))
        assert result.exit_code == EXIT_ERROR

    def test_charfn_needs_triple(self, tmp_path, measures):
        result = run(_config(tmp_path, "charfn", measure=f"{measures}/lebesgue.json"))
        assert result.exit_code == EXIT_ERROR


class TestOutput:

    def test_json_report_keys(self, tmp_path, measures):
        run(_config(tmp_path, "weyl", measure=f"{measures}/lebesgue.json", points=(1j,)))
        report = json.loads((tmp_path / "report.json").read_text())
        assert {"command", "config_echo", "results", "residuals", "pass", "failures", "version", "grid",
                "timestamp"} <= set(report)

    def test_no_timestamp_is_deterministic(self, tmp_path, triples_dir):
        texts = []
        for _ in range(2):
            config = _config(tmp_path, "charfn", triple=f"{triples_dir}/nu05.yaml", points=(2j, 1 + 1j),
                             output=str(tmp_path / "out.json"), timestamp=False)
            run(config)
            texts.append((tmp_path / "out.json").read_text())
        assert texts[0] == texts[1]
        assert "timestamp" not in json.loads(texts[0])

    def test_csv(self, tmp_path, triples_dir):
        out = tmp_path / "grid.csv"
        run(_config(tmp_path, "charfn", triple=f"{triples_dir}/nu05.yaml", points=(2j, 1 + 1j),
                    format="csv", output=str(out)))
        with open(out, newline="") as f:
            reader = csv.DictReader(f)
            assert tuple(reader.fieldnames) == CSV_COLUMNS
            rows = list(reader)
        assert len(rows) == 8
        assert {r["quantity"] for r in rows} == {"M", "s", "S", "S_hat"}
        assert not (tmp_path / "grid.csv.failures.csv").exists()

    def test_atomic_write_leaves_no_temp_files(self, tmp_path, measures):
        run(_config(tmp_path, "weyl", measure=f"{measures}/lebesgue.json", points=(1j,)))
        assert [p.name for p in tmp_path.iterdir()] == ["report.json"]

    def test_stdout(self, tmp_path, measures, capsys):
        config = RunConfig(command="weyl", measure=f"{measures}/lebesgue.json", points=(1j,),
                           root=str(tmp_path), timestamp=False)
        run(config)
        assert json.loads(capsys.readouterr().out)["command"] == "weyl"
