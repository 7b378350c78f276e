import numpy as np
import pytest

from dirac_spec.bs_core import BirmanSchwinger
from dirac_spec.dwe import (DWEParams, compose_prediction, dwe_norms, dwe_weak_prediction,
                            dwe_weak_prediction_exact_reduction, integral_a1, inverse_map, map_spectrum,
                            norm_factor, reduction_matrix, symbol_residual, to_dirac, transform_T)
from dirac_spec.potential import ConfigError, PotentialSpec, norm_lp
from dirac_spec.weak_coupling import search_box

A1 = PotentialSpec.gaussian([[1.0]], 0.0, 0.5)
P = DWEParams(0.7, 2.3, A1)


def test_validation():
    with pytest.raises(ConfigError):
        DWEParams(1.0, 0.5, A1)
    with pytest.raises(ConfigError):
        DWEParams(0.5, 1.0, PotentialSpec.constant(np.eye(2)))
    assert DWEParams.from_dict(P.to_dict()) == P


@pytest.mark.parametrize("xi", [-3.0, 0.0, 1.7])
def test_reduction_identity(xi):
    assert symbol_residual(0.7, 2.3, 0.4, xi) < 1e-13
    assert np.isclose(symbol_residual(0.7, 2.3, 0.4, xi, drop_shift=True), 0.4, rtol=1e-12)


def test_transform_invertible_and_map_roundtrip():
    assert abs(np.linalg.det(transform_T(0.7, 2.3))) > 1e-3
    z = 0.3 - 1.2j
    assert np.isclose(inverse_map(map_spectrum(z, 0.7), 0.7), z)


def test_norm_factor_is_operator_norm_without_shift():
    p = reduction_matrix(0.7, 2.3, drop_shift=True)
    assert np.isclose(np.linalg.norm(p, 2), norm_factor(0.7, 2.3))
    closed, exact = dwe_norms(P), dwe_norms(P, exact=True)
    assert np.isclose(closed[0], norm_factor(0.7, 2.3) * norm_lp(A1, 1))
    assert exact[0] > closed[0]


def test_weak_prediction_algebra():
    s = float(np.real(integral_a1(P)))
    zp, zm = dwe_weak_prediction(0.3, P, s)
    assert zm == zp.conjugate()
    assert abs(compose_prediction(0.3, P.a0, P.mu, P.a0 / P.mu * s) - zp) < 1e-14
    ze, _ = dwe_weak_prediction_exact_reduction(0.3, P, s)
    assert abs(ze - compose_prediction(0.3, P.a0, P.mu, (P.a0 / P.mu - 1j) * s)) < 1e-14
    with pytest.raises(ValueError):
        dwe_weak_prediction(0.3, P, -1.0)


def test_bs_pipeline_gives_conjugate_pair():
    mu, spec = to_dirac(P)
    bs = BirmanSchwinger(spec, mu)
    eps = 0.6
    pred, _ = dwe_weak_prediction_exact_reduction(eps, P)
    zg = complex(inverse_map(pred, P.a0))
    sp = bs.find_eigenvalues(search_box(zg, eps, norm_lp(spec, 1), mu, "-"), eps, tol=1e-11)
    # the box is wide enough to also hold the mirror image -conj(z)
    assert sp.count == 2
    z = sorted(sp.values, key=lambda w: w.real)
    assert abs(z[1] + z[0].conjugate()) < 1e-9
    lam = map_spectrum(z[0], P.a0)
    assert abs(map_spectrum(z[1], P.a0) - lam.conjugate()) < 1e-9
    assert abs(lam - (-0.88594414 + 1.37086398j)) < 1e-7
