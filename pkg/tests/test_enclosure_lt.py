import numpy as np
import pytest

from dirac_spec.contour import Rect
from dirac_spec.enclosure_lt import (CALIBRATED, RHO0, a_m, count_bound, eigenvalue_free_height, enclosure,
                                     hs_factor_sup, in_K, lt_massive, lt_massless, massive_weights,
                                     resolvent_cover, rho0)
from dirac_spec.free_resolvent import uniformize


def test_enclosure_degenerate_and_invalid():
    d = enclosure(1.0, 0.0)
    assert d.valid and np.isclose(d.radius, 0.0) and np.isclose(d.x0, 1.0)
    assert not enclosure(1.0, 1.0).valid
    assert enclosure(1.0, 1.5).contains(100j)
    with pytest.raises(ValueError):
        enclosure(0.0, 0.5)


def test_enclosure_closed_form():
    v1 = 0.6
    s = v1 * v1
    t = (s * s - 2 * s + 2) / (4 * (1 - s))
    d = enclosure(2.0, v1)
    assert np.isclose(d.x0, np.sqrt(t + 0.5)) and np.isclose(d.r0, np.sqrt(t - 0.5))
    assert d.contains(d.center_plus + 0.99 * d.radius) and not d.contains(0.0)


def test_rho0_root():
    r = rho0()
    assert 0.375 <= r <= 0.385
    assert abs(r * np.exp(0.5 * (r + 1) ** 2) - 1) < 1e-10
    assert RHO0 == r


def test_a_m_branch_switch_at_rho0():
    below = np.nextafter(RHO0, 0)
    assert a_m(1.0, below, 1.0)[1] == "min"
    assert a_m(1.0, RHO0, 1.0)[1] == "l2"
    val, _ = a_m(1.0, 0.1, 1.0)
    assert np.isclose(val, min(1 / (1 - 0.1 * np.exp(0.5 * 1.1**2)), 2.0**3 / RHO0**2))


def test_lt_reports():
    eigs = [0.5 + 0.2j, -0.3 - 0.1j]
    r = lt_massless(eigs, 2.0, 1.5, C=1.0)
    assert np.isclose(r.lhs, sum(abs(z.imag) / (abs(z) + 1) ** 2 for z in eigs))
    assert r.holds and r.rhs == (1 + 1.5**4) * 4
    r2 = lt_massive(eigs, 1.0, 1.0, 0.5, 0.5, C_tau=1.0)
    assert np.isclose(r2.lhs, massive_weights(np.array(eigs), 1.0, 1.0).sum())
    assert lt_massless([], 1.0, 1.0).lhs == 0.0
    assert CALIBRATED["C"] > 0 and CALIBRATED["C_tau"] > 0


def test_count_bound_and_membership():
    assert in_K(0.5j, 1.0, 0.1, 0.1, 2.0)
    assert not in_K(1.05, 1.0, 0.01, 0.1, 2.0)
    cb = count_bound(1.0, 0.1, 0.1, 2.0, 0.5, 0.5, C_tau=1.0, eigs=[0.5j, 3j])
    assert cb.observed_count == 1 and cb.holds
    with pytest.raises(ValueError):
        count_bound(1.0, 0.1, 0.0, 2.0, 0.5, 0.5)


def test_hs_factor_sup_is_a_supremum():
    m, y = 1.0, 0.3
    x = np.linspace(-5, 5, 20001)
    vals = []
    for xx in x:
        a2 = abs(uniformize(xx + 1j * y, m).zeta) ** 2
        vals.append(0.25 * (2 + a2 + 1 / a2))
    assert max(vals) <= hs_factor_sup(m, y) * (1 + 1e-12)
    assert max(vals) >= hs_factor_sup(m, y) * (1 - 1e-4)


def test_eigenvalue_free_height_monotone():
    assert eigenvalue_free_height(1.0, 2.0) > eigenvalue_free_height(1.0, 1.0)


def test_resolvent_cover_shapes():
    rects = resolvent_cover(1.0, 1e-3, 4.0, 2.0)
    assert len(rects) == 3 and all(isinstance(r, Rect) for r in rects)
    assert len(resolvent_cover(0.0, 1e-3, 4.0, 2.0)) == 2
