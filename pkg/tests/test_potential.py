import numpy as np
import pytest

from semiglobal.errors import InvalidPotential, RootFindingFailed
from semiglobal.potential import (PotentialSpec, morse, parse_potential, polynomial, real_extrema,
                                  turning_points)


@pytest.mark.parametrize("text, coeffs", [
    ("harmonic:2", (0.0, 0.0, 2.0)),
    ("linear:1.5", (0.0, -1.5)),
    ("invharmonic:1", (0.0, 0.0, -0.5)),
    ("doublewell:1,2", (0.0, 0.0, -2.0, 0.0, 1.0)),
    ("poly:1,0,3", (1.0, 0.0, 3.0)),
    ("free:", (0.0,)),
])
def test_presets_expand_to_polynomials(text, coeffs):
    spec = parse_potential(text)
    assert spec.kind == "polynomial"
    assert spec.coefficients == coeffs
    assert spec.label == text


@pytest.mark.parametrize("text", ["harmonic", "harmonic:", "linear:1,2", "poly:", "poly:1,0",
                                  "bogus:1", "morse:1,-1,0", "poly:1,x"])
def test_malformed_potentials_are_rejected(text):
    with pytest.raises(InvalidPotential):
        parse_potential(text)


def test_value_and_derivatives_of_polynomial():
    spec = polynomial([1.0, -2.0, 0.5, 0.25])
    z = np.array([0.3, -1.2 + 0.4j])
    assert np.allclose(spec.value(z), 1 - 2 * z + 0.5 * z**2 + 0.25 * z**3)
    assert np.allclose(spec.derivative(z), -2 + z + 0.75 * z**2)
    assert np.allclose(spec.second_derivative(z), 1 + 1.5 * z)


def test_constant_potential_has_zero_derivatives():
    spec = parse_potential("free:")
    assert spec.derivative(1.3) == 0 and spec.second_derivative(1.3) == 0
    assert turning_points(spec, 0.5) == []
    with pytest.raises(RootFindingFailed):
        turning_points(spec, 0.0)


def test_morse_derivative_matches_finite_difference():
    spec = morse(2.0, 1.3, 0.4)
    h = 1e-5
    for z in (0.1, 1.7 + 0.2j):
        fd = (spec.value(z + h) - spec.value(z - h)) / (2 * h)
        assert abs(spec.derivative(z) - fd) < 1e-8


def test_harmonic_turning_points():
    tps = turning_points(parse_potential("harmonic:1"), 2.0)
    assert [t.multiplicity for t in tps] == [1, 1]
    assert np.allclose([t.location for t in tps], [-2.0, 2.0], atol=1e-12)


def test_double_well_roots_match_companion_matrix():
    # oracle: numpy's companion-matrix roots of q^4 - 2 q^2 - 1/2
    oracle = np.sort_complex(np.roots([1.0, 0.0, -2.0, 0.0, -0.5]))
    got = np.sort_complex(np.array([t.location for t in turning_points(parse_potential("doublewell:1,2"), 0.5)]))
    assert np.allclose(got, oracle, atol=1e-10)
    # conjugate pairs are exact mirror images
    assert got[1] == np.conj(got[2])


def test_double_root_is_reported_once_with_multiplicity_two():
    tps = turning_points(parse_potential("invharmonic:1"), 0.0)
    assert len(tps) == 1
    assert tps[0].multiplicity == 2
    assert abs(tps[0].location) < 1e-12


def test_morse_roots_in_principal_strip():
    spec = morse(1.0, 1.0, 0.0)
    tps = turning_points(spec, 0.5)
    for t in tps:
        assert abs(spec.value(t.location) - 0.5) < 1e-12
    # closed form: q = -log(1 -+ sqrt(E/D))/a
    expect = sorted([-np.log(1 - np.sqrt(0.5)), -np.log(1 + np.sqrt(0.5))])
    assert np.allclose(sorted(t.location.real for t in tps), expect)


def test_real_extrema_of_double_well():
    ext = real_extrema(parse_potential("doublewell:1,2"), (-3, 3))
    kinds = [(round(q, 9), k) for q, _, k in ext]
    assert kinds == [(-1.0, "min"), (0.0, "max"), (1.0, "min")]


def test_spec_rejects_nonpolynomial_kind():
    with pytest.raises(InvalidPotential):
        PotentialSpec("gaussian")
