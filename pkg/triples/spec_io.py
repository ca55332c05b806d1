"""
Measure and triple specification files (JSON or YAML).

A measure spec is either a named family

    {"kind": "lebesgue"}
    {"kind": "homogeneous", "nu": 0.5, "side": "positive"}

or an explicit list of atoms and density pieces

    {
      "atoms":  [{"pos": 0.0, "mass": 1.0}],
      "pieces": [
        {"support": [1, "inf"], "power": {"c": 1.0, "nu": 0.0, "anchor": 1}},
        {"support": [-1, 1], "tabulated": {"grid": [-1, 0, 1], "values": [0, 1, 0]}}
      ],
      "normalize": true
    }

Bounds accept "inf"/"-inf" strings (YAML's .inf works as well). The long
spellings "position", "lower"/"upper", "coefficient" and "exponent" are read
as aliases. A power piece may carry "side"; side "both" is split at its
anchor. A triple spec is a measure spec plus "kappa", given as
{"re": .., "im": ..} or a plain real number.
"""

import json
import math
import os

import yaml

from triples.errors import MeasureError, SpecFormatError
from triples.homogeneous import HomogeneousModel
from triples.log import logger
from triples.measure import (
    Atom,
    DensityPiece,
    PowerLaw,
    RealMeasure,
    Tabulated,
    lebesgue,
    normalize,
)
from triples.transform import ModelTriple


_INFINITIES = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf, "infinity": math.inf, "-infinity": -math.inf}


def load_spec(path):
    """Read a JSON or YAML file into a dict."""
    if not os.path.exists(path):
        raise SpecFormatError(f"spec file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    try:
        with open(path, "r", encoding="utf-8") as f:
            if ext in (".yaml", ".yml"):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise SpecFormatError(f"{path}: not valid {'YAML' if ext in ('.yaml', '.yml') else 'JSON'}: {e}") from None
    if not isinstance(data, dict):
        raise SpecFormatError(f"{path}: top level must be a mapping")
    logger.debug("Loaded spec %s (%s)", path, ", ".join(sorted(data)))
    return data


def _number(value, what):
    if isinstance(value, str):
        key = value.strip().lower()
        if key in _INFINITIES:
            return _INFINITIES[key]
        try:
            return float(key)
        except ValueError:
            raise SpecFormatError(f"{what} must be a number or 'inf'/'-inf', got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFormatError(f"{what} must be a number, got {value!r}")
    return float(value)


def _require(table, key, what):
    if not isinstance(table, dict) or key not in table:
        raise SpecFormatError(f"{what} is missing required key {key!r}")
    return table[key]


def _get(table, key, alias, default=None):
    if key in table:
        return table[key]
    return table.get(alias, default)


def _parse_atom(entry, index):
    what = f"atoms[{index}]"
    if isinstance(entry, dict) and "pos" not in entry and "position" in entry:
        position = entry["position"]
    else:
        position = _require(entry, "pos", what)
    return Atom(_number(position, f"{what}.pos"),
                _number(_require(entry, "mass", what), f"{what}.mass"))


def _parse_support(entry, what):
    if not isinstance(entry, dict):
        raise SpecFormatError(f"{what} must be a mapping")
    if "support" in entry:
        support = entry["support"]
        if not isinstance(support, (list, tuple)) or len(support) != 2:
            raise SpecFormatError(f"{what}.support must be a pair [lower, upper], got {support!r}")
        return _number(support[0], f"{what}.support[0]"), _number(support[1], f"{what}.support[1]")
    if "lower" in entry or "upper" in entry:
        return (_number(_require(entry, "lower", what), f"{what}.lower"),
                _number(_require(entry, "upper", what), f"{what}.upper"))
    raise SpecFormatError(f"{what} is missing required key 'support'")


def _parse_piece(entry, index):
    what = f"pieces[{index}]"
    lower, upper = _parse_support(entry, what)
    if not lower < upper:
        raise SpecFormatError(f"{what}: support [{lower}, {upper}] is empty")
    if "power" in entry:
        table = entry["power"]
        if not isinstance(table, dict):
            raise SpecFormatError(f"{what}.power must be a mapping")
        coefficient = _number(_get(table, "c", "coefficient", 1.0), f"{what}.power.c")
        exponent = _number(_get(table, "nu", "exponent", 0.0), f"{what}.power.nu")
        default_anchor = lower if math.isfinite(lower) else upper
        anchor = _number(table.get("anchor", default_anchor), f"{what}.power.anchor")
        side = table.get("side", "right" if anchor <= lower else "left" if anchor >= upper else "both")
        if side == "both":
            if not lower < anchor < upper:
                raise SpecFormatError(f"{what}: side 'both' needs the anchor inside ({lower}, {upper})")
            return [
                DensityPiece(lower, anchor, PowerLaw(coefficient, exponent, anchor, "left")),
                DensityPiece(anchor, upper, PowerLaw(coefficient, exponent, anchor, "right")),
            ]
        return [DensityPiece(lower, upper, PowerLaw(coefficient, exponent, anchor, side))]
    if "tabulated" in entry:
        table = entry["tabulated"]
        grid = [_number(x, f"{what}.tabulated.grid") for x in _require(table, "grid", f"{what}.tabulated")]
        values = [_number(v, f"{what}.tabulated.values") for v in _require(table, "values", f"{what}.tabulated")]
        return [DensityPiece(lower, upper, Tabulated(tuple(grid), tuple(values)))]
    raise SpecFormatError(f"{what} needs a 'power' or 'tabulated' density")


def parse_measure(data):
    """RealMeasure from a spec mapping, normalized unless "normalize": false."""
    try:
        kind = data.get("kind", "explicit")
        if kind == "lebesgue":
            m = lebesgue(_number(data.get("density", 1.0), "density"))
        elif kind == "homogeneous":
            return HomogeneousModel(_number(_require(data, "nu", "homogeneous spec"), "nu"),
                                    data.get("side", "positive")).normalized_measure()
        elif kind == "explicit":
            atoms = [_parse_atom(a, i) for i, a in enumerate(data.get("atoms", []))]
            pieces = []
            for i, p in enumerate(data.get("pieces", [])):
                pieces.extend(_parse_piece(p, i))
            if not atoms and not pieces:
                raise SpecFormatError("measure spec has neither atoms nor pieces")
            m = RealMeasure(tuple(atoms), tuple(pieces), _number(data.get("scale", 1.0), "scale"))
        else:
            raise SpecFormatError(f"unknown measure kind {kind!r}")
        m.validate()
    except (MeasureError, ValueError) as e:
        if isinstance(e, SpecFormatError):
            raise
        raise SpecFormatError(f"invalid measure: {e}") from None
    if data.get("normalize", True):
        m = normalize(m)
    return m


def parse_kappa(value):
    if isinstance(value, dict):
        re_part = _number(value.get("re", 0.0), "kappa.re")
        im_part = _number(value.get("im", 0.0), "kappa.im")
        kappa = complex(re_part, im_part)
    else:
        kappa = complex(_number(value, "kappa"))
    if not abs(kappa) < 1:
        raise SpecFormatError(f"kappa must satisfy |κ| < 1, got {kappa}")
    return kappa


def parse_triple(data):
    """ModelTriple from a spec mapping; homogeneous specs use the closed-form M."""
    kappa = parse_kappa(data.get("kappa", 0.0))
    try:
        if data.get("kind") == "homogeneous":
            h = HomogeneousModel(_number(_require(data, "nu", "homogeneous spec"), "nu"), data.get("side", "positive"))
            return h.triple(kappa, closed_form=data.get("closed_form", True))
        return ModelTriple(parse_measure(data), kappa)
    except SpecFormatError:
        raise
    except ValueError as e:
        raise SpecFormatError(f"invalid triple: {e}") from None


def load_measure(path):
    data = load_spec(path)
    try:
        return parse_measure(data)
    except SpecFormatError as e:
        raise SpecFormatError(f"{path}: {e}") from None


def load_triple(path):
    data = load_spec(path)
    try:
        return parse_triple(data)
    except SpecFormatError as e:
        raise SpecFormatError(f"{path}: {e}") from None
