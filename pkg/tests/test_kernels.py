import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boltzspec.kernels import DealiasingWarning, KernelSpec, eval_B, eval_B_class, eval_B_fast


def test_dealiasing_condition_enforced():
    with pytest.raises(ValueError, match="dealiasing"):
        KernelSpec(R=math.pi, L=math.pi)


def test_allow_aliasing_downgrades_to_warning():
    with pytest.warns(DealiasingWarning):
        KernelSpec(R=0.6 * math.pi, L=math.pi, allow_aliasing=True)


def test_boundary_value_accepted():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        KernelSpec(R=math.sqrt(2) * math.pi, L=math.pi)


@given(st.floats(0, 1), st.floats(0.1, 5), st.floats(0, 20))
def test_vhs_kernel(gamma, C, u):
    spec = KernelSpec(gamma=gamma, C_gamma=C)
    assert eval_B(u, 0.3, spec) == pytest.approx(C * u ** gamma)


def test_separability_flags():
    assert KernelSpec(d=2, gamma=0.0).fast_separable
    assert KernelSpec(d=3, gamma=1.0).fast_separable
    assert not KernelSpec(d=2, gamma=0.5).fast_separable
    assert not KernelSpec(angular=lambda c: 1 + c * c).fast_separable


@given(st.floats(0.1, 6), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_classical_kernel_d2_is_twice_B(gn, a, b):
    spec = KernelSpec(gamma=0.5, C_gamma=1.3)
    g = gn * np.array([math.cos(a), math.sin(a)])
    w = np.array([math.cos(b), math.sin(b)])
    assert eval_B_class(g, w, spec) == pytest.approx(2 * 1.3 * gn ** 0.5)


def test_classical_kernel_d3_angular_factor():
    spec = KernelSpec(d=3, gamma=0.0, R=2 * math.pi)
    g = np.array([0.0, 0.0, 2.0])
    w = np.array([1.0, 0.0, 0.0])  # g_hat . omega = 0
    assert eval_B_class(g, w, spec) == pytest.approx(4.0)


def test_classical_kernel_rejects_non_unit_omega():
    with pytest.raises(ValueError):
        eval_B_class(np.array([1.0, 0.0]), np.array([2.0, 0.0]), KernelSpec())


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_fast_kernel_constant_for_maxwell_d2(y1, y2, t):
    y = np.array([y1, y2])
    z = t * np.array([-y2, y1])
    assert eval_B_fast(y, z, KernelSpec(C_gamma=0.7)) == pytest.approx(1.4)


def test_fast_kernel_hard_spheres_d3_constant():
    spec = KernelSpec(d=3, gamma=1.0, C_gamma=2.0, R=2 * math.pi)
    y = np.array([[1.0, 0.0, 0.0], [0.0, 0.3, 0.0]])
    z = np.array([[0.0, 2.0, 0.0], [0.0, 0.0, -1.5]])
    assert np.allclose(eval_B_fast(y, z, spec), 8.0)
