import json
from itertools import product
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multiphase.errors import CapacityError, DimensionError, NormalizationError
from multiphase.fock import (
    ProbeState,
    SparseVector,
    apply_phases,
    derivative_state,
    enumerate_configs,
    inner_product,
    sector_dim,
)
from multiphase.povm import upsilon_coefficients
from multiphase.probes import make_noon_state, make_optimal_state

from conftest import random_probe


def brute_force_configs(n, d):
    return sorted(c for c in product(range(n + 1), repeat=d + 1) if sum(c) == n)


def test_enumerate_small_cases():
    assert enumerate_configs(1, 1) == [(0, 1), (1, 0)]
    assert enumerate_configs(0, 3) == [(0, 0, 0, 0)]


def test_enumerate_count_n16_d4():
    expected = factorial(20) // (factorial(16) * factorial(4))
    assert expected == 4845
    assert len(enumerate_configs(16, 4)) == expected


@pytest.mark.parametrize("n", range(0, 9))
@pytest.mark.parametrize("d", range(1, 9))
def test_enumerate_count_matches_binomial(n, d):
    expected = factorial(n + d) // (factorial(n) * factorial(d))
    assert sector_dim(n, d) == expected
    if expected <= 20000:
        configs = enumerate_configs(n, d)
        assert len(configs) == expected
        assert len(set(configs)) == expected
        assert all(sum(c) == n for c in configs)
        assert configs == sorted(configs)


@pytest.mark.parametrize("n,d", [(3, 2), (4, 3), (2, 4)])
def test_enumerate_matches_brute_force(n, d):
    assert enumerate_configs(n, d) == brute_force_configs(n, d)


def test_capacity_guard():
    with pytest.raises(CapacityError):
        enumerate_configs(40, 10)


def test_state_renormalizes_small_errors_and_rejects_large():
    psi = ProbeState(np.array([[1, 0], [0, 1]]), np.array([1.0, 1.0 + 1e-8]) / np.sqrt(2))
    assert abs(psi.norm() - 1) < 1e-12
    with pytest.raises(NormalizationError):
        ProbeState(np.array([[1, 0], [0, 1]]), np.array([1.0, 1.0]))


def test_state_rejects_mixed_photon_numbers():
    with pytest.raises(DimensionError):
        ProbeState(np.array([[1, 0], [0, 2]]), np.array([1.0, 1.0]) / np.sqrt(2))


def test_duplicate_configs_are_merged():
    half = 0.5 * np.sqrt(0.5)
    psi = ProbeState.from_terms([((0, 1), half), ((1, 0), np.sqrt(0.5)), ((0, 1), half)])
    assert psi.terms[(0, 1)] == pytest.approx(np.sqrt(0.5))
    assert len(psi) == 2


def test_apply_phases_identity():
    noon = make_noon_state(5)
    assert np.allclose(apply_phases(noon, [0.0]).amplitudes, noon.amplitudes)


def test_apply_phases_noon_half_pi():
    noon = make_noon_state(2)
    out = apply_phases(noon, [np.pi / 2]).terms
    assert out[(0, 2)] == pytest.approx(-1 / np.sqrt(2))
    assert out[(2, 0)] == pytest.approx(1 / np.sqrt(2))


def test_apply_phases_norm_optimal_state():
    psi = make_optimal_state(2, 2)
    out = apply_phases(psi, [0.3, 0.7])
    assert abs(np.sum(np.abs(out.amplitudes) ** 2) - 1) < 1e-12


def test_apply_phases_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_phases(make_optimal_state(3, 2), [0.1, 0.2])


@given(
    st.integers(1, 4),
    st.integers(1, 4),
    st.integers(0, 2**32 - 1),
)
def test_apply_phases_group_action_and_norm(n, d, seed):
    rng = np.random.default_rng(seed)
    psi = random_probe(rng, n, d)
    t1, t2 = rng.uniform(-10, 10, d), rng.uniform(-10, 10, d)
    lhs = apply_phases(apply_phases(psi, t1), t2)
    rhs = apply_phases(psi, t1 + t2)
    assert np.max(np.abs(lhs.amplitudes - rhs.amplitudes)) < 1e-12
    assert abs(lhs.norm() - 1) < 1e-12
    assert np.array_equal(lhs.configs, psi.configs)


def test_inner_product_examples():
    noon = make_noon_state(2)
    ref = ProbeState(np.array([[2, 0]]), np.array([1.0]))
    assert inner_product(noon, noon) == pytest.approx(1.0)
    assert inner_product(noon, ref) == pytest.approx(1 / np.sqrt(2))
    rows = upsilon_coefficients(3)
    u1 = ProbeState(2 * np.eye(4, dtype=int)[:2], rows[0, :2])
    u2 = ProbeState(2 * np.eye(4, dtype=int)[:3], rows[1, :3])
    assert abs(inner_product(u1, u2)) < 1e-15


def test_inner_product_is_conjugate_linear():
    rng = np.random.default_rng(7)
    a, b = random_probe(rng, 3, 2), random_probe(rng, 3, 2)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))
    assert abs(inner_product(a, b)) <= 1 + 1e-12


def test_inner_product_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner_product(make_noon_state(2), make_noon_state(3))


def test_derivative_state_examples():
    ref_only = ProbeState(np.array([[3, 0, 0]]), np.array([1.0]))
    assert np.all(derivative_state(ref_only, [0.4, 0.1], 2).amplitudes == 0)
    dn = derivative_state(make_noon_state(2), [0.0], 1).terms
    assert dn[(0, 2)] == pytest.approx(2j / np.sqrt(2))
    assert dn[(2, 0)] == 0
    with pytest.raises(DimensionError):
        derivative_state(make_noon_state(2), [0.0], 2)


def test_derivative_matches_finite_difference_and_is_norm_preserving():
    rng = np.random.default_rng(3)
    psi = make_optimal_state(3, 4)
    theta = rng.uniform(0, 2 * np.pi, 3)
    h = 1e-5
    for l in range(1, 4):
        step = np.zeros(3)
        step[l - 1] = h
        fd = (apply_phases(psi, theta + step).amplitudes - apply_phases(psi, theta - step).amplitudes) / (2 * h)
        dpsi = derivative_state(psi, theta, l)
        assert np.max(np.abs(fd - dpsi.amplitudes)) < 1e-8
        assert abs(inner_product(dpsi, apply_phases(psi, theta)).real) < 1e-10


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_derivative_overlap_is_imaginary(n, d, seed):
    rng = np.random.default_rng(seed)
    psi = random_probe(rng, n, d)
    theta = rng.uniform(-5, 5, d)
    evolved = apply_phases(psi, theta)
    for l in range(1, d + 1):
        assert abs(inner_product(derivative_state(psi, theta, l), evolved).real) < 1e-10


def test_json_round_trip():
    psi = random_probe(np.random.default_rng(1), 3, 3)
    again = ProbeState.from_json(psi.to_json())
    assert again == psi
    data = json.loads(psi.to_json())
    assert set(data) == {"d", "N", "terms"}
    assert set(data["terms"][0]) == {"occ", "re", "im"}


def test_to_dense_places_amplitudes_lexicographically():
    psi = make_noon_state(2)
    assert np.allclose(psi.to_dense(), [1 / np.sqrt(2), 0, 1 / np.sqrt(2)])


def test_sparse_vector_is_read_only():
    v = SparseVector(np.array([[1, 0]]), np.array([2.0]))
    with pytest.raises(ValueError):
        v.amplitudes[0] = 1.0
