import math

import numpy as np
import pytest
from scipy.integrate import quad

from relheat.errors import ParameterError, StaleTableError
from relheat.kernels import (
    build_table,
    c1_const,
    c1_of_t,
    density_upper_bound,
    fast_theta,
    free_density,
    table_eval,
)
from relheat.specfun import ProcessParams, stable_subordinator_density


def cauchy_kernel(r, d, t=1.0):
    return math.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2) * t / (t * t + r * r) ** ((d + 1) / 2)


class TestTraceCoefficient:
    def test_closed_forms(self):
        assert c1_const(ProcessParams(1.0, 0.0, 2)) == pytest.approx(1 / (2 * math.pi), rel=1e-12)
        assert c1_const(ProcessParams(1.0, 0.0, 3)) == pytest.approx(1 / math.pi**2, rel=1e-12)
        # omega_2 Gamma(4) / ((2 pi)^2 * 0.5) = 2 pi * 6 / (2 pi^2) = 6/pi
        assert c1_const(ProcessParams(0.5, 0.0, 2)) == pytest.approx(6 / math.pi, rel=1e-12)

    def test_subordination_route(self):
        # C1 = (4 pi)^{-d/2} int z^{-d/2} theta_beta(1, z) dz
        params = ProcessParams(1.0, 0.0, 2)
        integral, _ = quad(
            lambda z: z**-1.0 * stable_subordinator_density(z, 0.5), 0, np.inf, limit=300
        )
        assert (4 * math.pi) ** -1.0 * integral == pytest.approx(c1_const(params), rel=1e-6)

    def test_damped_coefficient_limits(self):
        params = ProcessParams(1.0, 1.0, 2)
        c1 = c1_const(params)
        assert c1_of_t(0.0, params) == c1
        assert c1_of_t(5.0, params.with_mass(0.0)) == c1
        values = [c1_of_t(t, params) for t in (0.01, 0.1, 1.0)]
        assert values[0] > values[1] > values[2]
        assert all(v <= c1 for v in values)

    def test_small_time_recovery(self):
        params = ProcessParams(1.0, 1.0, 2)
        c1 = c1_const(params)
        assert abs(c1_of_t(1e-3, params) - c1) < 0.01 * c1


class TestFreeDensity:
    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0, 5.0])
    def test_cauchy_oracle(self, d, r):
        params = ProcessParams(1.0, 0.0, d)
        assert free_density(1.0, r, params) == pytest.approx(cauchy_kernel(r, d), rel=1e-6)

    def test_radially_decreasing(self):
        params = ProcessParams(1.4, 0.7, 3)
        p0 = free_density(0.5, 0.0, params)
        last = p0
        for r in (0.2, 0.5, 1.0, 2.0):
            v = free_density(0.5, r, params)
            assert v <= last * (1 + 1e-12)
            last = v

    def test_scaling_law_massless(self):
        params = ProcessParams(1.0, 0.0, 2)
        for t, r in ((0.3, 0.2), (2.0, 1.0), (0.05, 0.3)):
            direct = free_density(t, r, params)
            scaled = t ** (-2.0) * free_density(1.0, r / t, params)
            assert direct == pytest.approx(scaled, rel=1e-6)

    def test_rejects_bad_arguments(self):
        params = ProcessParams(1.0, 0.0, 2)
        with pytest.raises(ParameterError):
            free_density(0.0, 1.0, params)
        with pytest.raises(ParameterError):
            free_density(1.0, -1.0, params)


class TestUpperBound:
    def test_massless_is_tight(self):
        params = ProcessParams(1.0, 0.0, 2)
        for t in (0.1, 1.0, 3.0):
            assert free_density(t, 0.0, params) == pytest.approx(
                density_upper_bound(t, params), rel=1e-7
            )

    def test_massive_case(self):
        params = ProcessParams(1.0, 2.0, 2)
        bound = density_upper_bound(1.0, params)
        assert bound == pytest.approx(math.e**2 / (2 * math.pi), rel=1e-12)
        assert free_density(1.0, 0.0, params) < bound

    def test_dominates_on_random_parameters(self):
        rng = np.random.default_rng(91)
        for _ in range(20):
            alpha = rng.uniform(0.4, 1.9)
            m = rng.uniform(0.0, 2.0)
            d = int(rng.integers(2, 5))
            t = rng.uniform(0.05, 2.0)
            params = ProcessParams(alpha, m, d)
            assert free_density(t, 0.0, params) <= density_upper_bound(t, params) * (1 + 1e-9)


class TestFastTheta:
    def test_half_matches_closed_form(self):
        ev = fast_theta(0.5)
        zs = np.geomspace(1e-3, 1e3, 50)
        want = zs**-1.5 * np.exp(-1 / (4 * zs)) / (2 * math.sqrt(math.pi))
        assert np.allclose(ev(zs), want, rtol=1e-12)

    def test_spline_matches_quadrature(self):
        ev = fast_theta(0.7)
        zs = np.geomspace(0.05, 200.0, 60)
        exact = np.array([stable_subordinator_density(z, 0.7) for z in zs])
        assert np.max(np.abs(ev(zs) / exact - 1)) < 1e-7


class TestRadialTable:
    def test_nodes_match_reference_quadrature(self, cauchy2d):
        table = build_table(0.0, cauchy2d)
        idx = [0, 50, 200, 400, 511]
        for i in idx:
            rho = table.radii[i]
            assert table.values[i] == pytest.approx(
                free_density(1.0, rho, cauchy2d), rel=1e-8
            )

    def test_midpoints_within_contract(self):
        params = ProcessParams(1.0, 0.5, 2)
        rng = np.random.default_rng(7)
        t = 0.8
        table = build_table(params.m * t, params)
        rs = np.exp(rng.uniform(np.log(1e-3), np.log(40.0), 100)) * t ** (1 / params.alpha)
        got = table_eval(table, t, rs, params)
        want = np.array([free_density(t, r, params) for r in rs])
        assert np.max(np.abs(got / want - 1)) < 1e-4

    def test_monotone_values(self, cauchy2d):
        table = build_table(0.0, cauchy2d)
        assert (np.diff(table.values) <= 1e-15).all()

    def test_consistency_at_origin(self):
        params = ProcessParams(1.2, 0.8, 3)
        t = 0.6
        table = build_table(params.m * t, params)
        assert (
            math.exp(params.m * t) * t ** (-params.d / params.alpha) * table.f0
            == pytest.approx(free_density(t, 0.0, params), rel=1e-7)
        )

    def test_stale_table(self, cauchy2d):
        params_m = ProcessParams(1.0, 1.0, 2)
        table = build_table(1.0 * 0.5, params_m)
        with pytest.raises(StaleTableError):
            table_eval(table, 0.25, 1.0, params_m)

    def test_beyond_grid_falls_back_to_quadrature(self, cauchy2d):
        table = build_table(0.0, cauchy2d)
        r = 80.0  # beyond the 50-radius grid at t=1
        assert table_eval(table, 1.0, r, cauchy2d) == pytest.approx(
            free_density(1.0, r, cauchy2d), rel=1e-6
        )

    def test_below_grid_uses_origin_value(self, cauchy2d):
        table = build_table(0.0, cauchy2d)
        assert table_eval(table, 1.0, 1e-5, cauchy2d) == pytest.approx(
            free_density(1.0, 0.0, cauchy2d), rel=1e-5
        )

    def test_csv_dump(self, tmp_path, cauchy2d):
        table = build_table(0.0, cauchy2d)
        path = tmp_path / "table.csv"
        table.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "scaled_radius,F_value"
        assert len(lines) == 1 + len(table.radii)
        first = lines[1].split(",")
        assert float(first[0]) == pytest.approx(table.radii[0])
        assert float(first[1]) == pytest.approx(table.values[0])

    def test_small_time_scaling_exact(self):
        # evaluation at tiny remaining time goes through the scaling law
        params = ProcessParams(1.0, 0.0, 2)
        s = 1e-6
        table = build_table(0.0, params)
        got = table_eval(table, s, 2.0, params)
        assert got == pytest.approx(cauchy_kernel(2.0, 2, t=s), rel=1e-4)
