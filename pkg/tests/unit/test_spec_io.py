"""Tests for measure and triple spec files."""

import json
import math

import pytest

from triples.errors import SpecFormatError
from triples.herglotz import ClosedForm, MeasureBacked, weyl_m
from triples.measure import weighted_total
from triples.spec_io import (
    load_measure,
    load_spec,
    load_triple,
    parse_kappa,
    parse_measure,
    parse_triple,
)


def _write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


class TestLoadSpec:

    def test_json(self, tmp_path):
        path = _write_json(tmp_path / "m.json", {"kind": "lebesgue"})
        assert load_spec(path) == {"kind": "lebesgue"}

    def test_yaml(self, tmp_path):
        (tmp_path / "m.yaml").write_text("kind: homogeneous\nnu: 0.5\n")
        assert load_spec(str(tmp_path / "m.yaml")) == {"kind": "homogeneous", "nu": 0.5}

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecFormatError, match="not found"):
            load_spec(str(tmp_path / "nope.json"))

    def test_malformed_json(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(SpecFormatError, match="not valid JSON"):
            load_spec(str(tmp_path / "bad.json"))

    def test_top_level_must_be_mapping(self, tmp_path):
        path = _write_json(tmp_path / "list.json", [1, 2])
        with pytest.raises(SpecFormatError, match="mapping"):
            load_spec(path)


class TestParseMeasure:

    def test_lebesgue_is_normalized(self):
        assert weighted_total(parse_measure({"kind": "lebesgue"})) == pytest.approx(1.0, abs=1e-10)

    def test_normalize_false(self):
        m = parse_measure({"kind": "lebesgue", "normalize": False})
        assert weighted_total(m) == pytest.approx(math.pi)

    def test_homogeneous(self):
        m = parse_measure({"kind": "homogeneous", "nu": -0.25})
        assert weighted_total(m) == pytest.approx(1.0, abs=1e-10)

    def test_atoms(self):
        m = parse_measure({"atoms": [{"pos": 0.0, "mass": 1.0}]})
        assert m.has_atom_at(0.0)

    def test_power_piece_with_infinite_bound(self):
        m = parse_measure({"pieces": [{"support": [1, "inf"], "power": {"c": 2.0, "nu": 0.0, "anchor": 1}}]})
        (piece,) = m.pieces
        assert piece.upper == math.inf
        assert piece.form.side == "right"

    def test_power_keys(self):
        m = parse_measure({"pieces": [{"support": [0, 1], "power": {"c": 3.0, "nu": 0.5, "anchor": 0}}],
                           "normalize": False})
        (piece,) = m.pieces
        assert (piece.form.coefficient, piece.form.exponent, piece.form.anchor) == (3.0, 0.5, 0.0)

    def test_power_piece_split_at_anchor(self):
        m = parse_measure({"pieces": [
            {"support": [-1, 1], "power": {"nu": 0.5, "anchor": 0, "side": "both"}},
        ]})
        assert [p.form.side for p in m.pieces] == ["left", "right"]

    def test_tabulated_piece(self):
        m = parse_measure({"pieces": [
            {"support": [-1, 1], "tabulated": {"grid": [-1, 0, 1], "values": [0, 1, 0]}},
        ], "normalize": False})
        assert weighted_total(m) == pytest.approx(math.pi / 2 - math.log(2), rel=1e-10)

    def test_long_key_aliases(self):
        short = parse_measure({
            "atoms": [{"pos": 2.0, "mass": 0.5}],
            "pieces": [{"support": [1, "inf"], "power": {"c": 1.5, "nu": 0.25, "anchor": 1}}],
            "normalize": False,
        })
        long = parse_measure({
            "atoms": [{"position": 2.0, "mass": 0.5}],
            "pieces": [{"lower": 1, "upper": "inf",
                        "power": {"coefficient": 1.5, "exponent": 0.25, "anchor": 1}}],
            "normalize": False,
        })
        assert short == long

    def test_bad_support(self):
        with pytest.raises(SpecFormatError, match="pair"):
            parse_measure({"pieces": [{"support": [0], "power": {}}]})

    def test_empty_support(self):
        with pytest.raises(SpecFormatError, match="empty"):
            parse_measure({"pieces": [{"support": [2, 1], "power": {}}]})

    def test_missing_support(self):
        with pytest.raises(SpecFormatError, match="'support'"):
            parse_measure({"pieces": [{"power": {}}]})

    def test_missing_key(self):
        with pytest.raises(SpecFormatError, match="'pos'"):
            parse_measure({"atoms": [{"mass": 1.0}]})

    def test_empty(self):
        with pytest.raises(SpecFormatError, match="neither atoms nor pieces"):
            parse_measure({})

    def test_unknown_kind(self):
        with pytest.raises(SpecFormatError, match="unknown measure kind"):
            parse_measure({"kind": "cantor"})

    def test_non_numeric(self):
        with pytest.raises(SpecFormatError):
            parse_measure({"atoms": [{"pos": "zero", "mass": 1.0}]})

    def test_infinite_weighted_mass(self):
        with pytest.raises(SpecFormatError, match="invalid measure"):
            parse_measure({"pieces": [{"support": [0, "inf"], "power": {"nu": 1.5}}]})

    def test_invalid_structure_is_spec_error(self):
        with pytest.raises(SpecFormatError):
            parse_measure({"atoms": [{"pos": 0.0, "mass": -1.0}]})


class TestSpecFileFormat:

    def test_measure_file(self, tmp_path):
        path = _write_json(tmp_path / "m.json", {
            "atoms": [{"pos": 0.0, "mass": 0.5}],
            "pieces": [{"support": [1, "inf"], "power": {"c": 2 / math.pi, "nu": 0.0, "anchor": 1}}],
            "normalize": True,
        })
        m = load_measure(path)
        assert m.has_atom_at(0.0)
        assert weighted_total(m) == pytest.approx(1.0, abs=1e-10)

    def test_triple_file(self, tmp_path):
        path = _write_json(tmp_path / "t.json", {
            "pieces": [{"support": ["-inf", "inf"], "power": {"c": 1.0, "nu": 0.0, "anchor": 0, "side": "both"}}],
            "kappa": {"re": 0.1, "im": -0.2},
        })
        t = load_triple(path)
        assert t.kappa.kappa == 0.1 - 0.2j
        assert weyl_m(t.weyl, 1j) == pytest.approx(1j, abs=1e-8)


class TestParseKappa:

    def test_mapping(self):
        assert parse_kappa({"re": 0.3, "im": 0.4}) == 0.3 + 0.4j

    def test_number(self):
        assert parse_kappa(0.5) == 0.5

    def test_outside_disc(self):
        with pytest.raises(SpecFormatError, match="κ"):
            parse_kappa({"re": 0.6, "im": 0.8})


class TestParseTriple:

    def test_homogeneous_uses_closed_form(self):
        t = parse_triple({"kind": "homogeneous", "nu": 0.5, "kappa": 0.0})
        assert isinstance(t.weyl.backing, ClosedForm)

    def test_homogeneous_quadrature_on_request(self):
        t = parse_triple({"kind": "homogeneous", "nu": 0.5, "closed_form": False})
        assert isinstance(t.weyl.backing, MeasureBacked)

    def test_kappa_defaults_to_zero(self):
        assert parse_triple({"kind": "lebesgue"}).kappa.kappa == 0

    def test_bad_nu(self):
        with pytest.raises(SpecFormatError, match="invalid triple"):
            parse_triple({"kind": "homogeneous", "nu": 1.5})


class TestCorpus:

    @pytest.mark.parametrize("name", [
        "atom_only.json", "lebesgue.json", "half_line_tail.json",
        "nu05.yaml", "nu_m05.yaml", "nu025.yaml", "nu_m025.yaml",
    ])
    def test_measures_load_normalized(self, corpus_dir, name):
        m = load_measure(f"{corpus_dir}/measures/{name}")
        assert weighted_total(m) == pytest.approx(1.0, abs=1e-9)

    def test_half_line_triple(self, corpus_dir):
        t = load_triple(f"{corpus_dir}/triples/half_line_tail.json")
        assert t.kappa.kappa == 0.3

    def test_error_names_the_file(self, tmp_path):
        path = _write_json(tmp_path / "bad.json", {"kind": "cantor"})
        with pytest.raises(SpecFormatError, match="bad.json"):
            load_measure(path)
