"""Sensitivity-constant formulas, aggregation, and dominance checks."""

import math

import numpy as np
import pytest

from cgbound.lipschitz import (
    H_MAX,
    TAU_H,
    StepConstants,
    aggregate_step,
    cgnet_step_constants,
    datafit_grad_constants,
    drcgnet_step_constants,
    fc_lipschitz,
    network_constants,
    network_constants_exact,
    step_constants,
    tikhonov_constants,
    tikhonov_constants_exact,
)
from cgbound.model import MeasurementModel, SignalBounds
from cgbound.networks import NetworkConfig, sample_covariance

SEED_LIP = 0x5EED_0003

E3 = math.exp(3.0)
UNIT_MODEL = MeasurementModel(np.array([[1.0]]))


class TestRegularizerExtrema:
    def test_log_over_z_peak(self):
        # max of log(z)/z over [1, e^3] sits at z = e with value 1/e
        z = np.linspace(1.0, E3, 200001)
        grid_max = np.max(np.log(z) / z)
        assert grid_max <= H_MAX + 1e-9
        assert grid_max == pytest.approx(H_MAX, abs=1e-6)

    def test_derivative_bound_peak(self):
        # max of (1 - log z)/z^2 over [1, e^3] sits at z = 1 with value 1
        z = np.linspace(1.0, E3, 200001)
        grid_max = np.max((1.0 - np.log(z)) / z**2)
        assert grid_max <= TAU_H + 1e-9
        assert grid_max == pytest.approx(TAU_H, abs=1e-6)


class TestStepConstants:
    def test_drcgnet_formula_zeroes(self):
        rc = drcgnet_step_constants(
            n=4, z_inf=E3, xi=1.0, p_max=2.0, delta=0.0,
            weight_bounds=(0.0,), y_max=1.0, model=UNIT_MODEL,
        )
        assert rc.r1 == 1.0 and rc.r2 == 0.0

    def test_cgnet_zero_measurement_and_mu(self):
        rc = cgnet_step_constants(
            z_inf=E3, xi=1.0, p_max=2.0, mu_bound=0.0, y_max=0.0, model=UNIT_MODEL,
        )
        assert rc.r1 == 1.0 and rc.r2 == 0.0

    def test_cgnet_frozen_value(self):
        # 1 + 10*((e^3 * 10)^2 + 1), evaluated at 40 digits: 403439.7934927351226
        rc = cgnet_step_constants(
            z_inf=E3, xi=1.0, p_max=10.0, mu_bound=1.0, y_max=1.0, model=UNIT_MODEL,
        )
        assert rc.r1 == pytest.approx(403439.7934927351226, rel=1e-14)

    def test_block_coefficients(self):
        rc = cgnet_step_constants(
            z_inf=E3, xi=1.5, p_max=2.0, mu_bound=1.0, y_max=1.0, model=UNIT_MODEL,
        )
        assert rc.r3 == (1.5, 2.0 * H_MAX)
        rc = drcgnet_step_constants(
            n=9, z_inf=2.0, xi=1.5, p_max=2.0, delta=0.5,
            weight_bounds=(0.5, 4.0), y_max=1.0, model=UNIT_MODEL,
        )
        # matrix blocks: sqrt(n) * z_inf * product of the other radii
        assert rc.r3 == (3.0 * 2.0 * 4.0, 3.0 * 2.0 * 0.5, 1.5)

    def test_dispatch_matches_scalar_forms(self):
        model = MeasurementModel(np.array([[0.5, 1.0], [0.0, 0.25]]))
        bounds = SignalBounds.default()
        cfg = NetworkConfig(variant="cgnet", n=2, K=1, J=1, bounds=bounds,
                            p_min=0.5, p_max=2.0, mu_bound=0.3)
        via_config = step_constants(cfg, model, 1.7)
        direct = cgnet_step_constants(bounds.z_inf, bounds.xi, 2.0, 0.3, 1.7, model)
        assert via_config == direct

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            StepConstants(r1=-1.0, r2=0.0, r3=())
        with pytest.raises(ValueError):
            cgnet_step_constants(E3, 1.0, 2.0, 1.0, -1.0, UNIT_MODEL)


class TestAggregateStep:
    def test_single_step_identity(self):
        rc = StepConstants(r1=3.0, r2=2.0, r3=(0.5, 0.25))
        agg = aggregate_step(rc, 1)
        assert agg.r_hat1 == 3.0 and agg.r_hat2 == 2.0
        np.testing.assert_allclose(agg.r_hat3, [[0.5, 0.25]])

    def test_unit_contraction_degenerate_sum(self):
        agg = aggregate_step(StepConstants(r1=1.0, r2=0.3, r3=(1.0,)), 5)
        assert agg.r_hat2 == pytest.approx(5 * 0.3)

    def test_geometric_sum_value(self):
        agg = aggregate_step(StepConstants(r1=2.0, r2=1.0, r3=(1.0,)), 3)
        assert agg.r_hat2 == pytest.approx(7.0)  # 4 + 2 + 1
        assert agg.r_hat1 == pytest.approx(8.0)
        np.testing.assert_allclose(agg.r_hat3[:, 0], [4.0, 2.0, 1.0])

    def test_continuity_at_unit_contraction(self):
        # explicit sum agrees with the quotient form on both sides of r1 = 1
        for r1 in (1.0 - 1e-8, 1.0 + 1e-8):
            agg = aggregate_step(StepConstants(r1=r1, r2=1.3, r3=(1.0,)), 6)
            quotient = 1.3 * (1.0 - r1**6) / (1.0 - r1)
            assert agg.r_hat2 == pytest.approx(quotient, rel=1e-6)
            assert agg.r_hat2 == pytest.approx(1.3 * 6, rel=1e-6)


class TestTikhonovConstants:
    def test_zero_measurement(self):
        assert tikhonov_constants(0.0, E3, 2.0, 0.5, UNIT_MODEL) == (0.0, 0.0)

    def test_zero_scale_radius(self):
        c1, c2 = tikhonov_constants(1.5, 0.0, 2.0, 0.5, UNIT_MODEL)
        assert c1 == pytest.approx(2.0 * 1.5) and c2 == 0.0

    def test_numeric_instance(self):
        model = MeasurementModel(np.array([[3.0]]))
        c1, c2 = tikhonov_constants(2.0, 1.5, 4.0, 0.5, model)
        # c1 = 4*2*3*(1 + 2*1.5^2*4*9); c2 = 1.5*2*3*(4/0.5)^2
        assert c1 == pytest.approx(24.0 * 163.0, rel=1e-14)
        assert c2 == pytest.approx(9.0 * 64.0, rel=1e-14)

    def test_worst_case_dominates_exact(self):
        rng = np.random.default_rng(SEED_LIP)
        for _ in range(200):
            n = int(rng.integers(2, 8))
            model = MeasurementModel(rng.standard_normal((3, n)))
            P = sample_covariance("full", n, 0.5, 2.0, rng)
            Pt = sample_covariance("full", n, 0.5, 2.0, rng)
            y2 = float(rng.uniform(0, 3))
            exact = tikhonov_constants_exact(y2, E3, P, Pt, model)
            worst = tikhonov_constants(y2, E3, 2.0, 0.5, model)
            assert worst[0] >= exact[0] * (1 - 1e-12)
            assert worst[1] >= exact[1] * (1 - 1e-12)


class TestDatafitConstants:
    def test_zero_measurement(self):
        assert datafit_grad_constants(E3, 2.0, 0.0, UNIT_MODEL) == (0.0, 0.0)

    def test_zero_scale_radius(self):
        Lz, Lu = datafit_grad_constants(0.0, 2.0, 1.5, UNIT_MODEL)
        assert Lz == 0.0 and Lu == pytest.approx(1.5)

    def test_numeric_instance(self):
        model = MeasurementModel(np.array([[2.0]]))
        Lz, Lu = datafit_grad_constants(1.5, 4.0, 3.0, model)
        assert Lz == pytest.approx((1.5 * 4.0 * 3.0 * 2.0 * 2.0) ** 2, rel=1e-14)
        assert Lu == pytest.approx(3.0 * 2.0 * (1.0 + 1.5**2 * 4.0 * 2.0 * 4.0), rel=1e-14)


class TestFcLipschitz:
    def test_single_layer(self):
        ic, wc = fc_lipschitz((2.5,), 1.0, 3.0)
        assert ic == 2.5 and wc == [3.0]

    def test_zero_cap_kills_input_coeff(self):
        ic, _ = fc_lipschitz((2.0, 0.0), 1.0, 1.0)
        assert ic == 0.0

    def test_two_layer_values(self):
        ic, wc = fc_lipschitz((2.0, 3.0), 1.0, 1.0)
        assert ic == pytest.approx(6.0)
        assert wc == pytest.approx([3.0, 2.0])


def _cg_config(n=3, K=2, J=2, bounds=None):
    return NetworkConfig(
        variant="cgnet", n=n, K=K, J=J,
        bounds=bounds or SignalBounds.default(),
        p_min=0.5, p_max=2.0, mu_bound=1.0,
    )


class TestNetworkConstants:
    def test_single_layer_chain(self):
        model = MeasurementModel(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.5]]))
        cfg = _cg_config(K=1, J=1)
        cns = network_constants(cfg, model, 1.2)
        c1, c2 = tikhonov_constants(1.2, E3, 2.0, 0.5, model)
        assert cns.c_hat1 == pytest.approx(c2 * cns.r_hat2, rel=1e-12)

    def test_two_layer_hand_expansion(self):
        model = MeasurementModel(np.array([[0.7, 0.2, -0.1]]))
        cfg = _cg_config(K=2, J=1)
        cns = network_constants(cfg, model, 0.9)
        rc = step_constants(cfg, model, 0.9)
        c1, c2 = tikhonov_constants(0.9, E3, 2.0, 0.5, model)
        expected = c2 * (rc.r2 * (rc.r1 + rc.r2 * c1) + rc.r2)
        assert cns.c_hat1 == pytest.approx(expected, rel=1e-10)
        pref = E3 * (c1 + 2.0 * 0.9 * model.norm_inf)
        assert cns.kappa == pytest.approx(pref * cns.c_hat1 + E3 * c2, rel=1e-10)
        assert cns.kappa_kdj[1, 0, 0] == pytest.approx(pref * rc.r3[0], rel=1e-10)

    def test_zero_radius_collapses_everything(self):
        model = MeasurementModel(np.array([[1.0, 0.0], [0.0, 1.0]]))
        cns = network_constants(_cg_config(n=2), model, 0.0)
        assert cns.kappa == 0.0
        assert np.all(cns.kappa_kdj == 0.0)
        assert cns.log_kappa == -math.inf

    def test_kappa_floor(self):
        model = MeasurementModel(np.array([[1.0, 0.3, 0.0]]))
        cfg = _cg_config()
        cns = network_constants(cfg, model, 1.1)
        assert cns.kappa >= E3 * cns.c2 * (1 - 1e-12)

    def test_monotone_in_each_knob(self):
        model = MeasurementModel(np.array([[1.0, 0.3, -0.2]]))
        base = network_constants(_cg_config(), model, 1.0).kappa

        for y in (1.5, 2.0, 4.0):
            assert network_constants(_cg_config(), model, y).kappa >= base
        for K in (3, 4):
            assert network_constants(_cg_config(K=K), model, 1.0).kappa >= base
        for J in (3, 4):
            assert network_constants(_cg_config(J=J), model, 1.0).kappa >= base
        prev = base
        for z_inf in (E3 * 2, E3 * 4):
            b = SignalBounds(c_max=1.0, z_inf=z_inf, xi=1.0, a=1.0, b=z_inf)
            cur = network_constants(_cg_config(bounds=b), model, 1.0).kappa
            assert cur >= prev
            prev = cur
        prev = base
        for p_max in (3.0, 5.0):
            cfg = NetworkConfig(variant="cgnet", n=3, K=2, J=2,
                                bounds=SignalBounds.default(),
                                p_min=0.5, p_max=p_max, mu_bound=1.0)
            cur = network_constants(cfg, model, 1.0).kappa
            assert cur >= prev
            prev = cur

    def test_worst_case_dominates_exact(self):
        rng = np.random.default_rng(SEED_LIP)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            model = MeasurementModel(rng.standard_normal((2, n)))
            cfg = NetworkConfig(variant="cgnet", n=n, K=2, J=2,
                                bounds=SignalBounds.default(),
                                p_min=0.5, p_max=2.0, mu_bound=1.0)
            y = rng.standard_normal(2)
            P = sample_covariance("scaled_identity", n, 0.5, 2.0, rng)
            Pt = sample_covariance("scaled_identity", n, 0.5, 2.0, rng)
            exact = network_constants_exact(cfg, model, y, P, Pt)
            worst = network_constants(cfg, model, float(np.linalg.norm(y)))
            assert worst.kappa >= exact.kappa * (1 - 1e-12)
            assert np.all(worst.kappa_kdj >= exact.kappa_kdj * (1 - 1e-12))

    def test_log_linear_consistency(self):
        model = MeasurementModel(np.array([[1.0, 0.3, -0.2]]))
        cns = network_constants(_cg_config(), model, 1.0)
        assert math.log(cns.kappa) == pytest.approx(cns.log_kappa, rel=1e-12)
        np.testing.assert_allclose(np.log(cns.kappa_kdj), cns.log_kappa_kdj, rtol=1e-12)
