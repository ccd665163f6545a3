import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boltzspec.collision import (CollisionOperator, physical_to_field, q_full, q_gain, q_loss,
                                 q_physical_direct)
from boltzspec.errors import BudgetExceeded, UnsupportedKernel
from boltzspec.kernels import KernelSpec
from boltzspec.modes import precompute_table
from boltzspec.spectral_core import SpectralField, TorusGrid, convolve_arrays, flat_wavevectors

from conftest import SQRT2PI, random_field

SPEC = KernelSpec(R=SQRT2PI)


@pytest.fixture(scope="module")
def ops():
    N = 4
    table = precompute_table(SPEC, N, "fast-direct")
    return {
        "direct": CollisionOperator.from_table(table),
        "fast": CollisionOperator.fast(SPEC, N, 128),
        "classical": CollisionOperator.from_table(precompute_table(SPEC, N, "classical")),
    }


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_gain_matches_naive_double_sum(ops):
    op = ops["classical"]
    f = random_field(4, seed=11)
    N = 4
    ks = flat_wavevectors(N, 2)
    v = f.coeffs.reshape(-1)
    G = np.zeros((4 * N + 1,) * 2, complex)
    for i, l in enumerate(ks):
        for j, m in enumerate(ks):
            G[tuple(l + m + 2 * N)] += op.table.beta[i, j] * v[i] * v[j]
    assert _rel(op.gain(f).coeffs, G[N:3 * N + 1, N:3 * N + 1]) < 1e-13


def test_loss_is_convolution_with_diagonal(ops):
    op = ops["classical"]
    f = random_field(4, seed=12)
    expect = convolve_arrays(f.coeffs, op.loss_diag * f.coeffs, 4)
    assert _rel(op.loss(f).coeffs, expect) < 1e-13


@pytest.mark.parametrize("part", ["gain", "loss", "full"])
def test_fast_path_matches_fast_direct_table(ops, part):
    f = random_field(4, seed=13)
    a = getattr(ops["fast"], part)(f).coeffs
    b = getattr(ops["direct"], part)(f).coeffs
    assert _rel(a, b) < 1e-9


def test_physical_oracle_matches_spectral_gain(ops):
    f = random_field(4, seed=14)
    phys = physical_to_field(q_physical_direct(f, SPEC, gain_only=True), f.grid)
    assert _rel(phys.coeffs, ops["direct"].gain(f).coeffs) < 1e-9


def test_physical_oracle_full_operator(ops):
    f = random_field(4, seed=15)
    phys = physical_to_field(q_physical_direct(f, SPEC), f.grid)
    assert _rel(phys.coeffs, ops["direct"].full(f).coeffs) < 1e-9


@given(st.integers(0, 10_000), st.sampled_from(["classical", "fast"]))
def test_mass_mode_of_Q_vanishes(ops, seed, path):
    f = random_field(4, seed=seed)
    q = ops[path].full(f)
    assert abs(q.mass_mode) <= 1e-12 * np.abs(ops[path].gain(f).coeffs).max()


@given(st.floats(0.01, 10), st.sampled_from(["classical", "fast"]))
def test_constants_are_equilibria(ops, c, path):
    f = SpectralField.constant(TorusGrid(2, 4, math.pi), c)
    q = ops[path].full(f)
    scale = ops[path].beta00 * c * c
    assert np.max(np.abs(q.coeffs)) <= 1e-12 * scale


@given(st.integers(0, 10_000))
def test_outputs_are_hermitian(ops, seed):
    f = random_field(4, seed=seed)
    for op in ops.values():
        assert op.full(f).is_hermitian(1e-12)


def test_module_level_wrappers(ops):
    f = random_field(4, seed=16)
    op = ops["fast"]
    assert np.allclose(q_full(op, f).coeffs, (q_gain(op, f) - q_loss(op, f)).coeffs, atol=1e-10)


def test_fast_path_rejects_non_separable():
    with pytest.raises(UnsupportedKernel):
        CollisionOperator.fast(KernelSpec(gamma=0.5, R=SQRT2PI), 4)


def test_operator_checks_grid():
    op = CollisionOperator.fast(SPEC, 4, 16)
    with pytest.raises(ValueError):
        op.full(random_field(5))


def test_physical_oracle_budget():
    f = random_field(4)
    with pytest.raises(BudgetExceeded):
        q_physical_direct(f, SPEC, budget=1e3)


def test_physical_oracle_callable_needs_grid():
    with pytest.raises(ValueError, match="n_phys"):
        q_physical_direct(lambda v: np.ones(v.shape[:-1]), SPEC)


def test_physical_oracle_of_constant_callable():
    vals = q_physical_direct(lambda v: np.ones(v.shape[:-1]), SPEC, n_phys=8)
    assert np.max(np.abs(vals)) < 1e-10


def test_fast_timing_shape_N32():
    op = CollisionOperator.fast(SPEC, 32, 64)
    f = random_field(32, seed=1, decay=0.01)
    q = op.full(f)
    assert q.coeffs.shape == (65, 65)
    assert q.is_hermitian(1e-12)
