import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boltzspec.analysis import (check_spreading, consistency_sweep, cross_path_oracle,
                                eigenvalues, fit_relaxation, gap_trend, gaussian_field,
                                linear_decay_check, mollified_indicator, mu0, spectral_gap)
from boltzspec.collision import CollisionOperator
from boltzspec.kernels import KernelSpec
from boltzspec.modes import beta_fast_direct
from boltzspec.spectral_core import TorusGrid

from conftest import SQRT2PI

SPEC = KernelSpec(R=SQRT2PI)


@pytest.fixture(scope="module")
def spectrum8():
    return eigenvalues(SPEC, 8)


def test_eigenvalue_structure(spectrum8):
    s = spectrum8
    scale = abs(s.a_inf)
    assert abs(s.at((0, 0))) <= 1e-12 * scale
    assert s.a.max() <= 1e-12 * scale
    assert s.cross_defect <= 1e-9
    assert s.imag_defect <= 1e-12


def test_a_inf_is_minus_beta00(spectrum8):
    b00 = beta_fast_direct((0, 0), (0, 0), SPEC)
    assert spectrum8.a_inf == pytest.approx(-b00.real, rel=1e-10)


def test_gap_at_unit_mode(spectrum8):
    lam, k = spectral_gap(spectrum8)
    assert lam > 0
    assert max(abs(c) for c in k) == 1
    assert lam == pytest.approx(spectrum8.lambda_N)


def test_eigenvalues_even_in_k(spectrum8):
    a = spectrum8.a
    assert np.allclose(a, a[::-1, ::-1], atol=1e-10 * abs(spectrum8.a_inf))


def test_classical_eigenvalues_cross_identity():
    s = eigenvalues(KernelSpec(R=SQRT2PI, gamma=0.5), 4, method="classical")
    assert s.cross_defect <= 1e-9
    assert s.a.max() <= 1e-12 * abs(s.a_inf)
    assert s.lambda_N > 0


def test_gap_trend_positive():
    trend = gap_trend(SPEC, [2, 4])
    assert [N for N, _ in trend] == [2, 4]
    assert all(lam > 0 for _, lam in trend)


@pytest.mark.parametrize("k", [(1, 0), (2, -1), (3, 2)])
def test_linear_decay_matches_eigenvalue(spectrum8, k):
    op = CollisionOperator.fast(SPEC, 8, 64)
    obs, pred, rel = linear_decay_check(op, k, spectrum=spectrum8)
    assert rel < 1e-6


def test_mu0_closed_form():
    m0, mu = mu0(math.sqrt(2), 1.0)
    assert abs(m0 - (math.sqrt(3) + 1) / 2) < 1e-12
    assert mu == pytest.approx((1 + m0) / 2)
    with pytest.raises(ValueError):
        mu0(2.5, 1.0)


@given(st.floats(1.0, 2.0))
def test_mu0_between_one_and_sqrt2(ratio):
    m0, mu = mu0(ratio * math.sqrt(2), math.sqrt(2))  # L = sqrt(2), R in [sqrt2, 2 sqrt2]
    assert 1.0 < m0 <= math.sqrt(2) + 1e-12
    assert 1.0 < mu < m0


def test_mollified_indicator_profile():
    fn = mollified_indicator(0.5, 0.1)
    pts = np.array([[0.0, 0.0], [0.39, 0.0], [0.0, 0.61], [1.0, 1.0]])
    v = fn(pts)
    assert v[0] == 1.0 and v[1] == 1.0
    assert v[2] == 0.0 and v[3] == 0.0


def test_spreading_passes_at_larger_radius():
    spec = KernelSpec(R=math.sqrt(2), L=1.0)
    rep = check_spreading(0.6, spec)
    assert rep.passed and not rep.skipped
    assert rep.radius_first > rep.mu * rep.r
    assert "PASS" in rep.text()


def test_spreading_skips_full_torus():
    rep = check_spreading(1.5, KernelSpec(R=math.sqrt(2), L=1.0))
    assert rep.skipped and rep.passed


def test_fit_relaxation_recovers_rate():
    t = np.linspace(0, 3, 60)
    rows = [{"t": x, "l2_to_eq": 2.0 * math.exp(-1.7 * x)} for x in t]
    rate, r2 = fit_relaxation(rows)
    assert rate == pytest.approx(1.7, rel=1e-10)
    assert r2 == pytest.approx(1.0)


def test_fit_relaxation_rejects_growth():
    rows = [{"t": x, "l2_to_eq": math.exp(x)} for x in np.linspace(0, 1, 20)]
    with pytest.raises(ValueError, match="decay"):
        fit_relaxation(rows)


def test_cross_path_oracle_small():
    f = gaussian_field(TorusGrid(2, 3, math.pi), 0.3, center=(0.2, -0.1))
    rep = cross_path_oracle(SPEC, f, M=96)
    assert rep.passed
    assert rep.max_deviation < 1e-9


def test_consistency_slopes_steepen_as_p_drops():
    res = consistency_sweep(SPEC, [2, 4, 8], N_ref=16, ps=(0, 1), temperature=0.3, M=32)
    assert res.slopes[0] < res.slopes[1] < 0
    assert len(res.rows()) == 3
