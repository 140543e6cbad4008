from itertools import permutations
from math import factorial, sqrt

import numpy as np
import pytest
from scipy.stats import unitary_group

from multiphase.errors import CapacityError, DimensionError
from multiphase.fock import config_index, enumerate_configs
from multiphase.probes import (
    MultiportUnitary,
    all_occupations,
    make_balanced_state,
    make_hb_state,
    make_noon_state,
    make_optimal_state,
    multiport_amplitude_permanent,
    multiport_output,
    optimal_alpha,
    permanent,
    transform_dense,
)


def brute_permanent(a):
    a = np.asarray(a)
    n = a.shape[0]
    return sum(np.prod([a[i, s[i]] for i in range(n)]) for s in permutations(range(n)))


def test_permanent_small_cases():
    assert permanent([[3 + 1j]]) == 3 + 1j
    a, b, c, d = 2.0, -1.5, 0.5j, 4.0
    assert permanent([[a, b], [c, d]]) == pytest.approx(a * d + b * c)
    assert permanent(np.ones((3, 3))) == pytest.approx(brute_permanent(np.ones((3, 3))))
    assert brute_permanent(np.ones((3, 3))) == 6


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_permanent_matches_permutation_sum(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert permanent(a) == pytest.approx(brute_permanent(a), rel=1e-12, abs=1e-12)


def test_permanent_exact_for_integer_matrix():
    a = np.arange(1, 17).reshape(4, 4)
    assert permanent(a) == brute_permanent(a)


def test_permanent_dimension_guard():
    with pytest.raises(CapacityError):
        permanent(np.eye(17))


@pytest.mark.parametrize("m", range(1, 9))
def test_qft_unitary(m):
    u = MultiportUnitary.qft(m).matrix
    assert np.max(np.abs(u.conj().T @ u - np.eye(m))) < 1e-12
    w = np.exp(2j * np.pi / m)
    assert u[1, 1] == pytest.approx(w / np.sqrt(m)) if m > 1 else True


def test_rejects_non_unitary():
    with pytest.raises(ValueError):
        MultiportUnitary(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_hong_ou_mandel():
    out = multiport_output(MultiportUnitary.qft(2), (1, 1)).terms
    assert (1, 1) not in out
    assert abs(out[(2, 0)]) == pytest.approx(1 / sqrt(2))
    assert abs(out[(0, 2)]) == pytest.approx(1 / sqrt(2))
    u = MultiportUnitary.qft(2)
    assert abs(multiport_amplitude_permanent(u, (1, 1), (1, 1))) < 1e-15
    assert abs(multiport_amplitude_permanent(u, (1, 1), (2, 0))) == pytest.approx(1 / sqrt(2))


def test_identity_multiport():
    out = multiport_output(MultiportUnitary.identity(3), (2, 1, 0))
    assert out.terms == {(2, 1, 0): pytest.approx(1.0)}


def test_qft3_single_photons_on_each_mode():
    u = MultiportUnitary.qft(3)
    # permutation-sum oracle: prod_i U[i, s(i)] summed over the 3! permutations
    expected = brute_permanent(u.matrix)
    assert expected == pytest.approx(-1 / sqrt(3))
    amp = transform_dense(u, (1, 1, 1))[config_index(3, 2)[(1, 1, 1)]]
    assert amp == pytest.approx(expected)
    # suppressed outcomes: mode-index sum not divisible by 3
    dense = transform_dense(u, (1, 1, 1))
    for cfg, i in config_index(3, 2).items():
        if (cfg[1] + 2 * cfg[2]) % 3:
            assert abs(dense[i]) < 1e-14


@pytest.mark.parametrize("m", [2, 3, 4])
def test_expansion_matches_permanent_random_unitary(m):
    u = MultiportUnitary(unitary_group.rvs(m, random_state=m))
    for n in range(1, 5):
        index = config_index(n, m - 1)
        for inp in all_occupations(n, m):
            dense = transform_dense(u, inp)
            for out in all_occupations(n, m):
                ref = multiport_amplitude_permanent(u, inp, out)
                assert abs(dense[index[out]] - ref) < 1e-10


def test_transform_dimension_mismatch():
    with pytest.raises(DimensionError):
        transform_dense(MultiportUnitary.qft(3), (1, 1))


def test_hb_1_1_is_hom_state():
    hb = make_hb_state(1, 1)
    assert hb.terms[(0, 2)] == pytest.approx(1 / sqrt(2))
    assert hb.terms[(2, 0)] == pytest.approx(-1 / sqrt(2))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hb_norm_and_photon_number(n, d):
    hb = make_hb_state(n, d)
    assert hb.n_photons == n * (d + 1)
    assert abs(np.sum(np.abs(hb.amplitudes) ** 2) - 1) < 1e-10


def test_hb_global_phase_convention():
    hb = make_hb_state(1, 2)
    first = hb.amplitudes[0]
    assert abs(first.imag) < 1e-15 and first.real > 0


def test_optimal_alpha_values():
    assert optimal_alpha(1) == pytest.approx(1 / sqrt(2))
    assert optimal_alpha(3) == pytest.approx(0.4597008433809831, abs=1e-15)
    assert optimal_alpha(4) == pytest.approx(1 / sqrt(6))


def test_optimal_state_reduces_to_noon():
    for n in (1, 2, 5):
        assert make_optimal_state(1, n, 1 / sqrt(2)) == make_noon_state(n, 1, 1)


def test_optimal_state_structure():
    psi = make_optimal_state(3, 4)
    alpha = optimal_alpha(3)
    beta = sqrt(1 - 3 * alpha**2)
    assert psi.terms == pytest.approx(
        {(0, 0, 0, 4): alpha, (0, 0, 4, 0): alpha, (0, 4, 0, 0): alpha, (4, 0, 0, 0): beta}
    )
    w = make_balanced_state(3, 2)
    assert np.allclose(w.amplitudes, 0.5)
    with pytest.raises(ValueError):
        make_optimal_state(3, 2, 0.7)


def test_noon_state_embedding():
    psi = make_noon_state(3, 2, 3)
    assert psi.terms == pytest.approx({(3, 0, 0, 0): 1 / sqrt(2), (0, 0, 3, 0): 1 / sqrt(2)})
    assert psi.norm() == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        make_noon_state(3, 4, 3)


def test_multiport_output_prunes_interference_zeros():
    out = multiport_output(MultiportUnitary.qft(2), (2, 2))
    # the (odd, odd) outputs vanish for two-by-two photons on a balanced splitter
    assert all(c[0] % 2 == 0 for c in out.terms)


def test_all_occupations_matches_enumeration():
    assert sorted(all_occupations(3, 3)) == enumerate_configs(3, 2)
