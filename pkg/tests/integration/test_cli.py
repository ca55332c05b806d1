"""Integration tests for triple_lab.py — argument parsing through to the written report."""

import argparse
import json
import logging
import os

import pytest

import triple_lab
from triple_lab import main, parse_complex, parse_grid, parse_kappa_arg
from triples.errors import SpecFormatError
from triples.grid import GridSpec
from triples.log import logger


@pytest.fixture(autouse=True)
def detach_handlers(monkeypatch):
    """main() attaches fresh handlers on every call; drop them afterwards."""
    for name in ("TRIPLE_LAB_SEED", "TRIPLE_LAB_WORKERS", "TRIPLE_LAB_TOLERANCE"):
        monkeypatch.delenv(name, raising=False)
    yield
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def triples_dir(corpus_dir):
    return os.path.join(corpus_dir, "triples")


class TestParseComplex:

    @pytest.mark.parametrize("text, value", [
        ("i", 1j),
        ("-i", -1j),
        ("2i", 2j),
        ("1+0.5i", 1 + 0.5j),
        ("1+i", 1 + 1j),
        ("-1-2j", -1 - 2j),
        ("3", 3 + 0j),
    ])
    def test_forms(self, text, value):
        assert parse_complex(text) == value

    def test_garbage(self):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_complex("abc")

    def test_kappa_outside_disc(self):
        with pytest.raises(SpecFormatError):
            parse_kappa_arg("1.5")


class TestParseGrid:

    def test_default(self):
        assert parse_grid("default") is None

    def test_six_values(self):
        assert parse_grid("-1,1,0.5,5,3,2") == GridSpec(-1.0, 1.0, 0.5, 5.0, 3, 2)

    def test_wrong_count(self):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_grid("1,2")

    def test_invalid_grid(self):
        with pytest.raises(argparse.ArgumentTypeError, match="bad grid"):
            parse_grid("-1,1,0,5,3,2")


class TestMain:

    def test_verify_invariance_inversion(self, tmp_path, corpus_dir, triples_dir):
        out = tmp_path / "report.json"
        code = main([
            "verify-invariance", "--triple", f"{triples_dir}/nu05.yaml", "--map", "0,-1,1,0",
            "--grid", "default", "--root", corpus_dir, "-o", str(out), "-q",
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["pass"] is True
        assert report["results"]["branch"] == "i"
        assert report["residuals"]["invariance"] < 1e-6

    def test_charfn_echoes_kappa(self, tmp_path, triples_dir):
        out = tmp_path / "report.json"
        code = main(["charfn", "--triple", f"{triples_dir}/lebesgue.json", "--z", "i",
                     "--root", str(tmp_path), "-o", str(out), "-q"])
        assert code == 0
        report = json.loads(out.read_text())
        s_row = next(r for r in report["grid"] if r["quantity"] == "S")
        assert complex(s_row["re_val"], s_row["im_val"]) == pytest.approx(0.2 + 0.4j, abs=1e-8)

    def test_malformed_measure(self, tmp_path, caplog):
        bad = tmp_path / "bad.json"
        bad.write_text('{"atoms": [{"pos": 0.0}]}')
        code = main(["weyl", "--measure", str(bad), "--root", str(tmp_path), "--z", "i"])
        assert code == 1
        assert "'mass'" in caplog.text

    def test_bad_kappa_flag(self, tmp_path):
        assert main(["homogeneous", "--kappa", "2", "--root", str(tmp_path)]) == 1

    def test_residual_exit_code(self, tmp_path):
        code = main(["homogeneous", "--nu", "0.5", "--z", "1+i", "--tolerance", "1e-300",
                     "--root", str(tmp_path), "-o", str(tmp_path / "r.json"), "-q"])
        assert code == 2

    def test_csv_output(self, tmp_path, triples_dir):
        out = tmp_path / "grid.csv"
        code = main(["charfn", "--triple", f"{triples_dir}/nu05.yaml", "--z", "i", "--z", "1+2i",
                     "--format", "csv", "--root", str(tmp_path), "-o", str(out), "-q"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "quantity,re_z,im_z,re_val,im_val,abs_val"
        assert len(lines) == 1 + 4 * 2

    def test_log_file_is_plain_text(self, tmp_path, triples_dir):
        log_file = tmp_path / "run.log"
        main(["charfn", "--triple", f"{triples_dir}/nu05.yaml", "--z", "i", "--root", str(tmp_path),
              "-o", str(tmp_path / "r.json"), "--log-file", str(log_file), "-q"])
        text = log_file.read_text()
        assert "Wrote" in text
        assert "[green]" not in text

    def test_no_timestamp(self, tmp_path, triples_dir):
        out = tmp_path / "r.json"
        main(["charfn", "--triple", f"{triples_dir}/nu05.yaml", "--z", "2i", "--root", str(tmp_path),
              "-o", str(out), "--no-timestamp", "-q"])
        assert "timestamp" not in json.loads(out.read_text())

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert triple_lab.__version__ in capsys.readouterr().out

    def test_verbose_and_quiet_conflict(self):
        with pytest.raises(SystemExit) as exc:
            main(["weyl", "-v", "-q"])
        assert exc.value.code == 2
