import numpy as np
import pytest

from dirac_spec.bs_core import BirmanSchwinger
from dirac_spec.contour import Rect
from dirac_spec.dwe import DWEParams, map_spectrum, to_dirac
from dirac_spec.oracle import (OracleConfig, dirac_eigvals, direct_spectrum_1d, direct_spectrum_dwe,
                               direct_spectrum_waveguide, dwe_distance, dwe_matrix, waveguide_eigvals)
from dirac_spec.potential import PotentialSpec
from dirac_spec.waveguide import WaveguideGeometry

GAUSS = PotentialSpec.gaussian([[-1.2, 0.3], [0.3, -0.4]], 0.0, 0.5)


def test_free_spectra_have_no_gap_states():
    cfg = OracleConfig(L=20, K=128)
    e = dirac_eigvals(1.0, PotentialSpec.zero(), 0.0, cfg)
    assert np.all(np.abs(e.imag) < 1e-12) and np.all(np.abs(e.real) >= 1 - 1e-12)
    e = np.linalg.eigvals(dwe_matrix(0.7, 2.3, PotentialSpec.zero(1), 0.0, cfg))
    assert np.all(dwe_distance(e, 0.7, np.sqrt(2.3 - 0.49)) < 1e-10)
    g = WaveguideGeometry(1.0, np.pi / 2, 2)
    e = waveguide_eigvals(PotentialSpec.zero(4), g, 0.0, OracleConfig(L=20, K=64))
    assert np.all(np.abs(e.imag) < 1e-12) and np.all(np.abs(e.real) >= g.E0 - 1e-12)


def test_line_oracle_matches_birman_schwinger():
    eps = 0.8
    cfg = OracleConfig(L=40, K=512, target=Rect(-0.999, 0.999, -1, 1))
    ora = direct_spectrum_1d(1.0, GAUSS, eps, cfg)
    bs = BirmanSchwinger(GAUSS, 1.0, 64).find_eigenvalues(Rect(-0.999, 0.999, -1, 1), eps, tol=1e-12)
    assert ora.count == bs.count >= 1
    assert np.abs(np.sort_complex(ora.values) - np.sort_complex(bs.values)).max() < 1e-8


def test_real_potential_spectrum_is_conjugation_invariant():
    V = PotentialSpec.gaussian([[-2.0, 0.5], [0.5, 1.0]], 0.0, 0.6)
    e = dirac_eigvals(1.0, V, 1.0, OracleConfig(L=20, K=128))
    for z in e:
        assert np.min(np.abs(e - z.conjugate())) < 1e-8


def test_dwe_oracle_matches_dirac_reduction():
    p = DWEParams(0.7, 2.3, PotentialSpec.gaussian([[1.0]], 0.0, 0.5))
    cfg = OracleConfig(L=30, K=256, target=Rect(-1.5, -0.2, -2, 2))
    ora = direct_spectrum_dwe(p, 0.6, cfg)
    mu, spec = to_dirac(p)
    bs = BirmanSchwinger(spec, mu, 64).find_eigenvalues(Rect(-2.0, 2.0, -1, -1e-3), 0.6, tol=1e-12)
    lam = np.sort_complex(map_spectrum(bs.values, p.a0))
    assert np.abs(np.sort_complex(ora.values) - lam).max() < 1e-7
    for z in ora.values:
        assert np.min(np.abs(ora.values - z.conjugate())) < 1e-9


@pytest.mark.slow
def test_waveguide_oracle_matches_birman_schwinger():
    from dirac_spec.waveguide import WaveguideBS
    g = WaveguideGeometry(0.5, np.pi / 2, 1)
    V = PotentialSpec.gaussian(np.diag([-1.6, -0.4, -0.8, -1.2]), 0.0, 0.5)
    box = Rect(0.0, g.E0 - 1e-4, -0.3, 0.3)
    ora = direct_spectrum_waveguide(V, g, 1.0, OracleConfig(L=20, K=96, target=box, stability_tol=1e-4))
    bs = WaveguideBS(V, g, 48).find_eigenvalues(box, 1.0, tol=1e-10)
    assert bs.count == 1 and ora.count == 1
    assert abs(ora.values[0] - bs.values[0]) < 1e-4
