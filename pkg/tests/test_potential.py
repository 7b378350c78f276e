import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_spec.potential import (ConfigError, PotentialSpec, combine, evaluate, integral, norm_lp,
                                  polar_factorize, polar_split)

finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=8, max_size=8), finite, st.floats(0.1, 2.0))
def test_json_round_trip_is_bit_exact(vals, center, width):
    amp = np.array(vals[:4]).reshape(2, 2) + 1j * np.array(vals[4:]).reshape(2, 2)
    spec = PotentialSpec.gaussian(amp, center, width) + PotentialSpec.constant(amp.T, -1.0, 2.0)
    again = PotentialSpec.from_json(spec.to_json())
    assert again == spec
    x = np.linspace(-3, 3, 17)
    assert np.array_equal(evaluate(again, x), evaluate(spec, x))


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=8, max_size=8))
def test_polar_split_reproduces_matrix(vals):
    v = np.array(vals[:4]).reshape(2, 2) + 1j * np.array(vals[4:]).reshape(2, 2)
    a, b = polar_split(v)
    assert np.allclose(b @ a, v, atol=1e-12 * max(1, np.abs(v).max()))
    assert np.allclose(a, a.conj().T, atol=1e-12 * max(1, np.abs(v).max()))


def test_polar_split_nilpotent_and_zero():
    v = np.array([[0, 1], [0, 0]], dtype=complex)
    a, b = polar_split(v)
    assert np.allclose(b @ a, v)
    a0, b0 = polar_split(np.zeros((2, 2)))
    assert not a0.any() and not b0.any()


def test_gaussian_norm_and_integral():
    spec = PotentialSpec.gaussian(np.eye(2), 0.0, 1.0)
    assert np.isclose(norm_lp(spec, 1), np.sqrt(np.pi), rtol=1e-10)
    assert np.allclose(integral(spec), np.sqrt(np.pi) * np.eye(2), rtol=1e-10)


def test_piecewise_norms():
    spec = PotentialSpec.piecewise([0, 1, 3], [np.diag([-1, 0]), np.diag([0, 0.5j])])
    assert np.isclose(norm_lp(spec, 1), 2.0)
    assert np.isclose(norm_lp(spec, 2), np.sqrt(1 + 0.5))


def test_combine_and_scaled_are_linear():
    p = PotentialSpec.constant(np.eye(2))
    q = PotentialSpec.gaussian([[0, 1], [1, 0]], 0.5, 0.3)
    s = combine([p, q], [2.0, -1j])
    x = np.linspace(-1, 2, 11)
    assert np.allclose(evaluate(s, x), 2 * evaluate(p, x) - 1j * evaluate(q, x))
    assert np.allclose(evaluate(p.scaled(3), x), 3 * evaluate(p, x))


def test_product_with_transverse_profile():
    prof = PotentialSpec.indicator(0, 1)
    spec = PotentialSpec.product(np.eye(4), prof, transverse=([-1.0, 0.0, 1.0], [1.0, 2.0]))
    assert spec.has_transverse_profile
    with pytest.raises(ValueError):
        evaluate(spec, 0.5)
    assert np.allclose(evaluate(spec, np.array([0.5]), np.array([0.5]))[0], 2 * np.eye(4))
    assert np.allclose(spec.transverse_breakpoints(2.0), [-2, -1, 0, 1, 2])


def test_polar_factors_callable():
    spec = PotentialSpec.gaussian([[1, 2j], [0, -1]], 0, 1)
    pf = polar_factorize(spec)
    x = np.linspace(-1, 1, 5)
    assert np.allclose(pf.B(x) @ pf.A(x), evaluate(spec, x))


@pytest.mark.parametrize("bad", [
    {"dimension": 3, "kind": "zero", "support": [0, 1]},
    {"dimension": 2, "kind": "nope", "support": [0, 1]},
    {"dimension": 2, "kind": "zero", "support": [1, 0]},
    {"dimension": 2, "kind": "piecewise", "support": [0, 1], "entries": {"breaks": [0, 1]}},
    {"dimension": 2, "kind": "gaussian", "support": [0, 1],
     "entries": {"amplitude": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "center": 0, "width": -1}},
])
def test_invalid_specs_raise_config_error(bad):
    with pytest.raises(ConfigError):
        PotentialSpec.from_dict(bad)


def test_to_json_is_plain_json():
    spec = PotentialSpec.constant([[1j, 0], [0, 0]])
    assert json.loads(spec.to_json())["kind"] == "piecewise"
