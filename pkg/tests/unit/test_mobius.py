"""Tests for triples/mobius.py — SL₂(ℝ) maps, group laws and decomposition."""

import math

import pytest

from triples.errors import SpecFormatError
from triples.mobius import (
    INFINITY,
    MobiusMap,
    affine,
    apply,
    compose,
    decompose,
    identity,
    inversion,
    invert,
    isclose,
    is_infinite,
    preimage_infinity,
    translation,
)


class TestMobiusMap:

    def test_normalized_to_determinant_one(self):
        f = MobiusMap(2.0, 0.0, 0.0, 2.0)
        assert f.determinant == pytest.approx(1.0)
        assert f.is_identity(tol=1e-15)

    def test_sign_convention(self):
        f = MobiusMap(-1.0, 0.0, 0.0, -1.0)
        assert (f.a, f.d) == (1.0, 1.0)

    def test_rejects_nonpositive_determinant(self):
        with pytest.raises(ValueError):
            MobiusMap(1.0, 0.0, 0.0, -1.0)
        with pytest.raises(ValueError):
            MobiusMap(1.0, 2.0, 2.0, 4.0)

    def test_affine_slope_and_shift(self):
        f = affine(2.0, 1.0)
        assert f.is_affine
        assert f.slope == pytest.approx(2.0)
        assert f.shift == pytest.approx(1.0)
        assert f(1j) == pytest.approx(1 + 2j)

    def test_slope_of_non_affine_map(self):
        with pytest.raises(ValueError):
            inversion().slope

    def test_affine_needs_positive_slope(self):
        with pytest.raises(ValueError):
            affine(-1.0)

    def test_as_text_round_trips_through_parse(self):
        f = MobiusMap(1.0, 2.0, 3.0, 7.0)
        assert isclose(MobiusMap.parse(f.as_text()), f, tol=1e-15)


class TestParse:

    def test_parse_inversion(self):
        assert MobiusMap.parse("0,-1,1,0").is_inversion()

    def test_parse_with_spaces(self):
        assert MobiusMap.parse(" 1, 3, 0, 1 ").shift == pytest.approx(3.0)

    def test_wrong_arity(self):
        with pytest.raises(SpecFormatError):
            MobiusMap.parse("1,2,3")

    def test_not_numbers(self):
        with pytest.raises(SpecFormatError):
            MobiusMap.parse("a,b,c,d")

    def test_negative_determinant(self):
        with pytest.raises(SpecFormatError, match="determinant"):
            MobiusMap.parse("0,1,1,0")


class TestApply:

    def test_inversion(self):
        assert apply(inversion(), 2j) == pytest.approx(0.5j)

    def test_pole_maps_to_infinity(self):
        assert is_infinite(apply(inversion(), 0.0))

    def test_infinity_maps_to_a_over_c(self):
        f = MobiusMap(2.0, 1.0, 1.0, 1.0)
        assert apply(f, INFINITY) == pytest.approx(2.0)
        assert is_infinite(apply(affine(3.0), INFINITY))

    def test_preserves_upper_half_plane(self):
        f = MobiusMap(1.0, -2.0, 3.0, 0.5)
        for z in (1j, -4 + 0.01j, 10 + 3j):
            assert f(z).imag > 0


class TestGroupLaws:

    def test_compose_matches_sequential_application(self):
        f = MobiusMap(1.0, 2.0, -1.0, 3.0)
        g = MobiusMap(2.0, -1.0, 1.0, 1.0)
        z = 0.3 + 0.7j
        assert compose(f, g)(z) == pytest.approx(f(g(z)))

    def test_inverse(self):
        f = MobiusMap(1.0, 2.0, -1.0, 3.0)
        assert compose(f, invert(f)).is_identity(tol=1e-12)
        assert compose(invert(f), f).is_identity(tol=1e-12)

    def test_inversion_is_an_involution_up_to_sign(self):
        assert compose(inversion(), inversion()).is_identity(tol=1e-15)

    def test_associativity(self):
        f, g, h = MobiusMap(1, 2, -1, 3), translation(-2.0), inversion()
        assert isclose(compose(compose(f, g), h), compose(f, compose(g, h)), tol=1e-12)


class TestDecompose:

    def test_affine_map(self):
        dec = decompose(affine(2.0, 1.0))
        assert not dec.uses_inversion
        assert dec.g.is_identity()

    def test_general_map(self):
        f = MobiusMap(1.0, 2.0, 3.0, 7.0)
        dec = decompose(f)
        assert dec.uses_inversion
        assert dec.h.is_affine
        assert isclose(dec.recompose(), f, tol=1e-12)

    def test_g_moves_the_pole_to_zero(self):
        f = MobiusMap(2.0, 1.0, 1.0, 3.0)
        dec = decompose(f)
        omega = preimage_infinity(f)
        assert dec.g(omega) == pytest.approx(0.0, abs=1e-15)

    def test_inversion_decomposes_trivially(self):
        dec = decompose(inversion())
        assert dec.g.is_identity(tol=1e-15)
        assert dec.h.is_identity(tol=1e-15)


class TestPreimageInfinity:

    def test_affine(self):
        assert math.isinf(preimage_infinity(affine(2.0, 1.0)))

    def test_general(self):
        assert preimage_infinity(MobiusMap(1.0, 0.0, 2.0, 1.0)) == pytest.approx(-0.5)
