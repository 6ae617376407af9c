import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import linalg

from mcswitch.exceptions import ParameterDomainError, ShapeError
from mcswitch.serialcorr import (
    acf_to_pacf,
    ar_coefficients,
    is_positive_definite,
    pacf_to_acf,
    toeplitz_corr,
)

pacf_strategy = st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=6)


def test_ar1_autocorrelations_are_powers():
    assert_allclose(pacf_to_acf([0.8, 0.0, 0.0]), [1, 0.8, 0.64, 0.512])
    assert_allclose(pacf_to_acf([0.7, 0.0, 0.0]), [1, 0.7, 0.49, 0.343])


def test_ar2_autocorrelations():
    # Yule-Walker for AR(2) with coefficients (0.3, 0.5): rho1 = 0.3 / (1 - 0.5)
    assert_allclose(pacf_to_acf([0.6, 0.5, 0.0]), [1, 0.6, 0.68, 0.504])
    assert_allclose(pacf_to_acf([0.4, 0.8, 0.0]), [1, 0.4, 0.832, 0.38656])


def test_pacf_matches_regression_oracle():
    # partial autocorrelation at lag m = last coefficient of the order-m regression
    acf = pacf_to_acf([0.5, -0.3, 0.2, 0.1])
    for m in range(1, 5):
        coefs = linalg.solve(toeplitz_corr(acf[:m]), acf[1:m + 1])
        assert_allclose(acf_to_pacf(acf)[m - 1], coefs[-1], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(pacf=pacf_strategy)
def test_round_trip_and_positive_definite(pacf):
    acf = pacf_to_acf(pacf)
    assert is_positive_definite(toeplitz_corr(acf), tol=0.0)
    assert_allclose(acf_to_pacf(acf), pacf, atol=1e-8)
    assert_allclose(acf_to_pacf(toeplitz_corr(acf)), pacf, atol=1e-8)


def test_ar_coefficients():
    phi, var = ar_coefficients([1, 0.6, 0.68])
    assert_allclose(phi, [0.3, 0.5])
    assert_allclose(var, 0.48)
    phi, var = ar_coefficients([1.0])
    assert phi.size == 0 and var == 1.0


def test_domain_errors():
    with pytest.raises(ParameterDomainError):
        pacf_to_acf([1.0])
    with pytest.raises(ParameterDomainError):
        acf_to_pacf([1.0, 0.9, -0.9])
    with pytest.raises(ParameterDomainError):
        acf_to_pacf([0.5, 0.1])
    with pytest.raises(ShapeError):
        acf_to_pacf(np.array([[1, 0.5], [0.2, 1]]))


def test_positive_definite_checks():
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ShapeError):
        is_positive_definite(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        is_positive_definite(np.array([[1.0, 0.2], [0.3, 1.0]]))
