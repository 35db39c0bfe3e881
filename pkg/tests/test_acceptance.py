import unittest
from types import SimpleNamespace

import numpy as np
import pytest

from stablenv.acceptance import (
    CHECKS,
    FAILED,
    KS_QUANTILE_99,
    RENEWAL_DISCRETISATION_BUDGET,
    PASSED,
    SKIPPED,
    AcceptanceContext,
    Check,
    check_bias_endpoints,
    check_fluctuation_algebra,
    check_kesten_reduction,
    check_mean_identities,
    check_scale_laplace,
    _renewal_against_bias,
    execution_order,
    results_document,
    run_checks,
    suite_passed,
)
from stablenv.montecarlo import Comparison

CONTEXT = AcceptanceContext(fast=True, seed=1)


def passing(context):
    return True, {}


def failing(context):
    return False, {"reason": "expected"}


def raising(context):
    raise ArithmeticError("overflow")


class ExecutionOrderTestCase(unittest.TestCase):

    def test_prerequisites_come_first(self):
        order = execution_order(CHECKS)
        self.assertEqual(len(order), len(CHECKS))
        for check in CHECKS:
            for requirement in check.requires:
                self.assertLess(order.index(requirement), order.index(check.name))

    def test_order_is_stable(self):
        self.assertEqual(execution_order(CHECKS), execution_order(tuple(reversed(CHECKS))))


def test_failed_prerequisite_skips_dependents():
    checks = (
        Check("first", set(), failing, True),
        Check("second", {"first"}, passing, True),
        Check("third", {"second"}, passing, True),
        Check("independent", set(), passing, False),
    )
    results = {result.name: result for result in run_checks(CONTEXT, checks)}
    assert results["first"].status == FAILED
    assert results["second"].status == SKIPPED
    assert results["third"].status == SKIPPED
    assert results["third"].detail == {"failed_prerequisites": ["second"]}
    assert results["independent"].status == PASSED
    assert not suite_passed(list(results.values()))


def test_errors_become_failures():
    results = run_checks(CONTEXT, (Check("broken", set(), raising, True),))
    assert results[0].status == FAILED
    assert "ArithmeticError" in results[0].detail["error"]


def test_non_blocking_failure_does_not_fail_suite():
    results = run_checks(CONTEXT, (Check("blocking", set(), passing, True), Check("report_only", set(), failing, False)))
    assert suite_passed(results)
    document = results_document(results)
    assert document["passed"] is True
    assert [check["status"] for check in document["checks"]] == [PASSED, FAILED]


def test_only_restricts_without_adding_prerequisites():
    checks = (Check("first", set(), failing, True), Check("second", {"first"}, passing, True))
    results = run_checks(CONTEXT, checks, only={"second"})
    assert [(result.name, result.status) for result in results] == [("second", PASSED)]


def test_analytic_checks_pass():
    for check in (check_bias_endpoints, check_kesten_reduction, check_mean_identities, check_fluctuation_algebra, check_scale_laplace):
        passed, detail = check(CONTEXT)
        assert passed, (check.__name__, detail)


def test_ks_bound_uses_the_kolmogorov_quantile():
    assert KS_QUANTILE_99 == pytest.approx(1.6276, abs=1e-4)


@pytest.mark.parametrize("gap, expected", [(0.5 * RENEWAL_DISCRETISATION_BUDGET, True), (2.0 * RENEWAL_DISCRETISATION_BUDGET, False)])
def test_renewal_parity_allows_the_discretisation_budget(gap, expected):
    lengths = np.ones(4)
    report = SimpleNamespace(comparisons={"renewal_odd_fraction_vs_bias": Comparison(0.5, 0.5 + gap, 0.0, 0.0)})
    sample = SimpleNamespace(up_lengths=lengths, down_lengths=lengths)
    assert _renewal_against_bias(report, sample, None) is expected
