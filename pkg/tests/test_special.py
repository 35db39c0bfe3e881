"""
Test using the following command from the repository root:

    python -m pytest tests
"""
import cmath
import math

import mpmath
import numpy as np
import pytest

from stablenv.special import (
    DomainCapExceeded,
    NonConvergence,
    NumericalDomainError,
    SeriesConfig,
    extended_digits,
    log_gamma,
    log_regularized_upper_gamma,
    mittag_leffler,
    mittag_leffler_jet,
    mittag_leffler_partial_sums,
    regularized_upper_gamma,
)

COSH_ARGUMENTS = (0.0, 0.25, 1.0, 4.0, 100.0)


@pytest.mark.parametrize("z", COSH_ARGUMENTS)
def test_mittag_leffler_index_two_is_cosh(z):
    assert mittag_leffler(2.0, z) == pytest.approx(math.cosh(math.sqrt(z)), rel=1e-13)


@pytest.mark.parametrize("z", (0.5, 3.0, 20.0))
def test_mittag_leffler_index_one_is_exp(z):
    for order in (0, 1, 2):
        assert mittag_leffler(1.0, z, order) == pytest.approx(math.exp(z), rel=1e-13)


def test_mittag_leffler_at_zero():
    a = 1.5
    assert mittag_leffler(a, 0.0) == 1.0
    assert mittag_leffler(a, 0.0, 1) == pytest.approx(1.0 / math.gamma(1.0 + a), rel=1e-14)
    assert mittag_leffler(a, 0.0, 2) == pytest.approx(2.0 / math.gamma(1.0 + 2.0 * a), rel=1e-14)


def test_mittag_leffler_derivative_of_cosh():
    # d/dz cosh(sqrt(z)) = sinh(sqrt(z)) / (2 sqrt(z))
    z = 2.0
    expected = math.sinh(math.sqrt(z)) / (2.0 * math.sqrt(z))
    assert mittag_leffler(2.0, z, 1) == pytest.approx(expected, rel=1e-13)


def test_mittag_leffler_negative_real_argument():
    assert mittag_leffler(2.0, -1.0) == pytest.approx(math.cos(1.0), rel=1e-13)
    assert mittag_leffler(1.0, -2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_mittag_leffler_complex_argument():
    value = mittag_leffler(1.0, 1j)
    assert isinstance(value, complex)
    assert abs(value - cmath.exp(1j)) < 1e-13


def test_complex_with_zero_imaginary_part_is_real():
    assert mittag_leffler(2.0, complex(4.0, 0.0)) == pytest.approx(math.cosh(2.0), rel=1e-13)


def test_partial_sums_increase_for_positive_arguments():
    partials = mittag_leffler_partial_sums(1.7, 5.0)
    assert np.all(np.diff(partials) > 0)
    assert partials[-1] == pytest.approx(mittag_leffler(1.7, 5.0), rel=1e-15)


def test_domain_caps():
    with pytest.raises(DomainCapExceeded):
        mittag_leffler(1.5, 2e4)
    with pytest.raises(DomainCapExceeded):
        mittag_leffler(1.5, -50.0)
    with pytest.raises(DomainCapExceeded):
        mittag_leffler(1.5, 40j)
    # DomainCapExceeded is a NumericalDomainError
    with pytest.raises(NumericalDomainError):
        mittag_leffler(1.5, 1e5)


def test_non_convergence():
    cfg = SeriesConfig(max_terms=10)
    with pytest.raises(NonConvergence):
        mittag_leffler(1.2, 50.0, 0, cfg)


def test_invalid_arguments():
    with pytest.raises(NumericalDomainError):
        mittag_leffler(0.0, 1.0)
    with pytest.raises(ValueError):
        mittag_leffler(1.5, 1.0, 3)
    with pytest.raises(ValueError):
        SeriesConfig(rel_tolerance=0.0)
    with pytest.raises(ValueError):
        SeriesConfig(max_terms=5)


def test_gamma_helpers():
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-14)
    for x in (0.1, 1.0, 3.5):
        assert regularized_upper_gamma(1.0, x) == pytest.approx(math.exp(-x), rel=1e-13)
        assert log_regularized_upper_gamma(1.5, x) == pytest.approx(math.log(regularized_upper_gamma(1.5, x)), rel=1e-13)
    assert regularized_upper_gamma(1.5, 0.0) == 1.0
    with pytest.raises(NumericalDomainError):
        log_gamma(0.0)
    with pytest.raises(NumericalDomainError):
        regularized_upper_gamma(1.5, -1.0)


def test_worked_values():
    assert mittag_leffler(2.0, 4.0, 1) == pytest.approx(math.sinh(2.0) / 4.0, rel=1e-13)
    assert mittag_leffler(1.7, 0.0) == 1.0
    assert log_gamma(1.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)


@pytest.mark.parametrize("a", (1.3, 1.7, 2.0))
@pytest.mark.parametrize("z", (0.1, 0.5, 1.0, 3.0, 10.0))
def test_termwise_derivatives_match_finite_differences(a, z):
    eps = 1e-6 * z
    for order in (1, 2):
        numeric = (mittag_leffler(a, z + eps, order - 1) - mittag_leffler(a, z - eps, order - 1)) / (2.0 * eps)
        assert mittag_leffler(a, z, order) == pytest.approx(numeric, rel=1e-6)


@pytest.mark.parametrize("a", (1.3, 1.7, 2.0))
@pytest.mark.parametrize("z", (0.0, 0.5, 5.0, 40.0))
def test_jet_matches_double_precision_series(a, z):
    jet = mittag_leffler_jet(a, z)
    for order, value in enumerate(jet):
        assert float(value) == pytest.approx(mittag_leffler(a, z, order), rel=1e-13)


def test_jet_keeps_the_log_concavity_gap():
    # for cosh(sqrt z): E E'' - E'^2 = (1 - sinh(s) cosh(s) / s) / (4 z), s = sqrt z
    z = 200.0
    e0, e1, e2 = mittag_leffler_jet(2.0, z)
    with mpmath.workdps(extended_digits(2.0, z)):
        root = mpmath.sqrt(z)
        expected = (1 - mpmath.sinh(root) * mpmath.cosh(root) / root) / (4 * z)
        gap = e0 * e2 - e1 * e1
        assert abs(gap / expected - 1) < mpmath.mpf(10) ** -20
    assert extended_digits(2.0, z) > extended_digits(2.0, 1.0)


def test_jet_domain():
    with pytest.raises(NumericalDomainError):
        mittag_leffler_jet(1.5, -1.0)
    with pytest.raises(DomainCapExceeded):
        mittag_leffler_jet(1.5, 2e4)


def test_log_upper_gamma_in_the_far_tail():
    a, x = 1.5, 1000.0
    # log Gamma(a, x) ~ (a-1) log x - x
    expected = (a - 1.0) * math.log(x) - x - log_gamma(a) + math.log1p((a - 1.0) / x)
    assert log_regularized_upper_gamma(a, x) == pytest.approx(expected, rel=1e-9)
    assert regularized_upper_gamma(a, x) == 0.0
