import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import linalg

from golden import R1_PRINTED, R2_PRINTED
from mcswitch.exceptions import InfeasibleModelError, ParameterDomainError
from mcswitch.mcvar import (
    build_regime_corr,
    cross_lag_correlations,
    extract_subprocess_corr,
    h_matrix,
    psi_coefficients,
)
from mcswitch.reparam import corr_from_free
from mcswitch.serialcorr import is_positive_definite, pacf_to_acf


def example_acfs(regime):
    if regime == 0:
        return [pacf_to_acf([0.8, 0, 0]), pacf_to_acf([0.6, 0.5, 0])]
    return [pacf_to_acf([0.7, 0, 0]), pacf_to_acf([0.4, 0.8, 0])]


def contemp2(r):
    return np.array([[1.0, r], [r, 1.0]])


def random_inputs(rng, d, k):
    pacfs = rng.uniform(-0.6, 0.6, size=(d, k))
    C = corr_from_free(rng.uniform(-0.5, 0.5, size=d * (d - 1) // 2), d)
    return [pacf_to_acf(p) for p in pacfs], C


def orthogonality_oracle(acf_i, acf_j, rho0):
    """Cross-lag correlations from their defining conditions, solved densely.

    The backward residual of each component (its value minus the projection
    on its own next k values) is uncorrelated with the other component at
    each of the next k times. With c(m) = corr(Z_i,a, Z_j,a-m) unknown for
    m in -k..k, m != 0, these 2k conditions are linear in c.
    """
    k = acf_i.size - 1
    psi_i, psi_j = psi_coefficients(acf_i), psi_coefficients(acf_j)
    lags = [m for m in range(-k, k + 1) if m != 0]
    col = {m: n for n, m in enumerate(lags)}
    A, b = [], []

    def add(terms):
        row, rhs = np.zeros(2 * k), 0.0
        for lag, coef in terms:
            if lag == 0:
                rhs -= coef * rho0
            else:
                row[col[lag]] += coef
        A.append(row)
        b.append(rhs)

    for s in range(1, k + 1):
        # corr(Z_i,t - sum_m psi_i,m Z_i,t+m, Z_j,t+s) = 0
        add([(-s, 1.0)] + [(m - s, -psi_i[m - 1]) for m in range(1, k + 1)])
        # corr(Z_i,t+s, Z_j,t - sum_m psi_j,m Z_j,t+m) = 0
        add([(s, 1.0)] + [(s - m, -psi_j[m - 1]) for m in range(1, k + 1)])
    return linalg.solve(np.array(A), np.array(b))


def test_psi_examples():
    assert_allclose(psi_coefficients([1, 0.8]), [0.8])
    assert_allclose(psi_coefficients([1, 0.6, 0.68]), [0.3, 0.5], atol=1e-12)
    assert_allclose(psi_coefficients([1, 0, 0, 0]), np.zeros(3))
    with pytest.raises(ParameterDomainError):
        psi_coefficients([1, 0.9, -0.9])


def test_h_matrix_structure():
    assert_allclose(h_matrix([0.8]), [[-1, 0.8, 0]])
    H = h_matrix([0.1, 0.2, 0.3])
    assert H.shape == (3, 7)
    for r in range(1, 3):
        assert_allclose(H[r, r:], H[0, :7 - r])
        assert_allclose(H[r, :r], 0)
    assert_allclose(h_matrix(np.zeros(2)), [[-1, 0, 0, 0, 0], [0, -1, 0, 0, 0]])


def test_cross_lags_of_the_bivariate_example():
    acf_i, acf_j = example_acfs(0)
    H_i, H_j = h_matrix(psi_coefficients(acf_i)), h_matrix(psi_coefficients(acf_j))
    rho = cross_lag_correlations(H_i, H_j, 0.7)
    k = 3
    # index k - 1 is lag -1, index k is lag +1
    assert_allclose(rho[k], 0.49, atol=0.005)
    assert_allclose(rho[k - 1], 0.56, atol=0.005)
    assert_allclose(rho[k + 1], 0.50, atol=0.005)
    assert_allclose(cross_lag_correlations(H_i, H_j, 0.0), 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_cross_lags_match_orthogonality_oracle(seed):
    rng = np.random.default_rng(seed)
    acfs, _ = random_inputs(rng, 2, 3)
    rho0 = rng.uniform(-0.8, 0.8)
    H = [h_matrix(psi_coefficients(a)) for a in acfs]
    assert_allclose(cross_lag_correlations(H[0], H[1], rho0), orthogonality_oracle(acfs[0], acfs[1], rho0),
                    atol=1e-10)


def test_cross_lags_exchange_symmetry():
    rng = np.random.default_rng(2)
    acfs, _ = random_inputs(rng, 2, 4)
    H = [h_matrix(psi_coefficients(a)) for a in acfs]
    ij = cross_lag_correlations(H[0], H[1], 0.4)
    ji = cross_lag_correlations(H[1], H[0], 0.4)
    assert_allclose(ji, ij[::-1], atol=1e-12)


@pytest.mark.parametrize("regime,printed", [(0, R1_PRINTED), (1, R2_PRINTED)])
def test_regime_corr_matches_printed_example(regime, printed):
    R = build_regime_corr(example_acfs(regime), contemp2([0.7, 0.2][regime]))
    assert_allclose(R, printed, atol=0.005 + 1e-12)
    assert is_positive_definite(R)


def test_regime_corr_structure():
    rng = np.random.default_rng(4)
    d, k = 3, 3
    acfs, C = random_inputs(rng, d, k)
    R = build_regime_corr(acfs, C)
    assert_allclose(R, R.T)
    for i in range(d):
        assert_allclose(R[i::d, i::d], linalg.toeplitz(acfs[i]), atol=1e-14)
    for r in range(k + 1):
        assert_allclose(R[r * d:(r + 1) * d, r * d:(r + 1) * d], C, atol=1e-14)
    # block Toeplitz: block (r, c) depends on r - c only
    for r in range(k):
        for c in range(k):
            assert_allclose(R[(r + 1) * d:(r + 2) * d, (c + 1) * d:(c + 2) * d],
                            R[r * d:(r + 1) * d, c * d:(c + 1) * d], atol=1e-12)


def test_identity_inputs_give_identity():
    acfs = [np.array([1.0, 0, 0])] * 3
    assert_allclose(build_regime_corr(acfs, np.eye(3)), np.eye(9))


def test_infeasible_combination_is_reported():
    # strong opposite serial dependence with strong contemporaneous correlation
    acfs = [pacf_to_acf([0.95]), pacf_to_acf([-0.95])]
    with pytest.raises(InfeasibleModelError):
        build_regime_corr(acfs, contemp2(0.9))
    R = build_regime_corr(acfs, contemp2(0.9), check=False)
    assert not is_positive_definite(R)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(2, 4), k=st.integers(1, 3), data=st.data())
def test_margin_closure(seed, d, k, data):
    rng = np.random.default_rng(seed)
    acfs, C = random_inputs(rng, d, k)
    idx = data.draw(st.lists(st.integers(0, d - 1), min_size=1, max_size=d, unique=True))
    R = build_regime_corr(acfs, C, check=False)
    sub = build_regime_corr([acfs[i] for i in idx], C[np.ix_(idx, idx)], check=False)
    assert_allclose(extract_subprocess_corr(R, d, idx), sub, atol=1e-10)


def test_extract_examples():
    R = build_regime_corr(example_acfs(0), contemp2(0.7))
    assert_allclose(extract_subprocess_corr(R, 2, [0, 1]), R)
    assert_allclose(extract_subprocess_corr(R, 2, [0]), linalg.toeplitz([1, 0.8, 0.64, 0.512]))
    with pytest.raises(ParameterDomainError):
        extract_subprocess_corr(R, 2, [])
    with pytest.raises(ParameterDomainError):
        extract_subprocess_corr(R, 2, [2])


def test_implied_var_coefficients_of_regime_two():
    # regress Y_t on (Y_t-1, Y_t-2, Y_t-3) inside regime 2
    R = build_regime_corr(example_acfs(1), contemp2(0.2))
    s12, s22 = R[:2, 2:], R[2:, 2:]
    B = linalg.solve(s22, s12.T).T
    lag1, lag2, lag3 = B[:, :2], B[:, 2:4], B[:, 4:]
    assert_allclose(lag1, [[0.71, -0.05], [0.15, 0.07]], atol=0.01)
    assert_allclose(lag2, [[-0.02, 0.10], [-0.18, 0.82]], atol=0.01)
    assert_allclose(lag3, 0.0, atol=1e-10)
    assert_allclose(R[:2, :2] - B @ s12.T, [[0.50, 0.04], [0.04, 0.29]], atol=0.01)
