"""Acceptance suite: one test per criterion, each printing its pass/fail line.

The same checks back the CLI ``verify`` command; here every criterion is
asserted individually at its fixed tolerance.
"""

import pytest

from marangoni import acceptance as acc


def _run(check):
    result = check()
    mark = "PASS" if result.passed else "FAIL"
    print(f"\n[{mark}] {result.name} ({result.seconds:.2f}s): {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_critical_monotonic_values():
    _run(acc.check_critical_monotonic)


def test_critical_oscillatory_values():
    _run(acc.check_critical_oscillatory)


def test_beta_of_g_curve():
    _run(acc.check_beta_curve)


def test_k0_sign_change_on_curve():
    _run(acc.check_k0_sign_change)


def test_coefficient_residual_oracle():
    _run(acc.check_residual_oracle)


def test_mm_below_48():
    _run(acc.check_mm_below_48)


def test_reduced_stability_tables():
    _run(acc.check_stability_tables)


def test_heteroclinic_suite():
    _run(acc.check_heteroclinics)


@pytest.mark.slow
def test_simulator_conservation_and_rates():
    _run(acc.check_simulator)


def test_spatial_spectral_gap():
    _run(acc.check_spectral_gap)
