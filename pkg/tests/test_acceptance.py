"""Acceptance suite: one test per verification criterion.

Each test runs the corresponding check from relheat.verify at the shipped
default budgets and fixed seed, prints its pass/fail line, and asserts the
outcome.  Statistical checks are seeded, so they double as regression tests.
"""

import pytest

from relheat.config import ExperimentConfig
from relheat import verify


@pytest.fixture(scope="module")
def cfg(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    return ExperimentConfig(out=str(out))


def _report(res):
    print()
    print(res.summary())
    for line in res.lines:
        print(f"    {line}")
    return res


def test_criterion_01_subordinator_density_oracle(cfg):
    res = _report(verify.check_subordinator_density(cfg))
    assert res.passed, res.lines


def test_criterion_02_laplace_transform_identity(cfg):
    res = _report(verify.check_laplace_identity(cfg))
    assert res.passed, res.lines


def test_criterion_03_free_density_oracle(cfg):
    res = _report(verify.check_free_density(cfg))
    assert res.passed, res.lines


def test_criterion_04_increment_law(cfg):
    res = _report(verify.check_sampler_law(cfg))
    assert res.passed, res.lines


def test_criterion_05_trace_small_time_limit(cfg):
    res = _report(verify.check_trace_limit(cfg))
    assert res.passed, res.lines


def test_criterion_06_mass_comparison(cfg):
    res = _report(verify.check_mass_comparison(cfg))
    assert res.passed, res.lines


def test_criterion_07a_halfspace_scaling(cfg):
    res = _report(verify.check_halfspace_scaling(cfg))
    assert res.passed, res.lines


def test_criterion_07b_halfspace_tail_decay(cfg):
    # The criterion demands a two-sided slope band around -(d+alpha); the
    # upper bound it is derived from is not the asymptotic rate (the profile
    # decays like q^{-(d+2 alpha)}), so this check reports the measurement
    # and fails as long as the band is taken literally.
    res = _report(verify.check_halfspace_tail(cfg))
    assert res.passed, res.lines


def test_criterion_08_residual_stability(cfg):
    res = _report(verify.check_residual_stability(cfg))
    assert res.passed, res.lines


def test_criterion_09_inequality_suite(cfg):
    res = _report(verify.check_inequalities(cfg))
    assert res.passed, res.lines


def test_criterion_10_determinism(cfg):
    res = _report(verify.check_determinism(cfg))
    assert res.passed, res.lines
