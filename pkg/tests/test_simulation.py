"""Scenario generators, ground-truth oracle, OTIA metric, replication driver."""

import numpy as np
import pytest
from scipy.stats import kendalltau

from survitr import copula
from survitr.data import WeightConfig
from survitr.marginal import MarginalFit
from survitr.pipeline import FitConfig
from survitr.policy import TrainConfig
from survitr.simulation import (
    BETA_TABLE,
    CASE_TAU,
    THETA_TRUE,
    CalibrationError,
    ScenarioSpec,
    calibrate_tau,
    compute_otia,
    generate_dataset,
    oracle_decisions,
    oracle_policy,
    run_replications,
    true_joint_survival,
    true_marginal_survival,
    with_calibrated_tau,
)


class TestScenarioSpec:
    def test_beta_table(self):
        assert BETA_TABLE[(1, 0)].tolist() == [1.5, 1.0]
        assert BETA_TABLE[(2, 0)].tolist() == [1.0, 1.5]
        assert BETA_TABLE[(1, 1)].tolist() == [-1.5, 1.0]
        assert BETA_TABLE[(2, 1)].tolist() == [-1.0, 1.5]
        assert BETA_TABLE[(1, 2)].tolist() == [0.0, -2.0]
        assert BETA_TABLE[(2, 2)].tolist() == [0.0, -2.0]
        assert THETA_TRUE == (2.0, 2.5, 3.0)

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            ScenarioSpec(tag="case3")

    def test_tau_required_before_generation(self):
        with pytest.raises(ValueError):
            generate_dataset(ScenarioSpec(tag="main"), seed=0)


class TestGenerateDataset:
    def test_covariate_and_arm_ranges(self):
        spec = with_calibrated_tau(ScenarioSpec(tag="case1", n=5000))
        d = generate_dataset(spec, seed=0)
        assert d.x.min() >= -2.8 and d.x.max() <= 2.8
        assert set(np.unique(d.a)) == {0, 1, 2}

    def test_censoring_rate_at_calibrated_tau(self):
        spec = with_calibrated_tau(ScenarioSpec(tag="main", n=10000))
        d = generate_dataset(spec, seed=3)
        for j in (1, 2):
            rate = 1.0 - d.delta(j).mean()
            assert abs(rate - 0.50) < 0.03

    def test_kendall_tau_of_normal_scores(self):
        # Clayton dependence between the two outcomes' normal scores on
        # arm 0: population Kendall tau is theta/(theta+2) = 0.5.
        spec = with_calibrated_tau(ScenarioSpec(tag="case1", n=10000))
        rng = np.random.default_rng(17)
        x = rng.uniform(-2.8, 2.8, size=(spec.n, 2))
        from survitr.simulation import _draw_log_times

        a = np.zeros(spec.n, dtype=int)
        logt1, logt2 = _draw_log_times(spec, rng, x, a)
        r1 = logt1 - x @ BETA_TABLE[(1, 0)]
        r2 = logt2 - x @ BETA_TABLE[(2, 0)]
        tau_hat = kendalltau(r1, r2).statistic
        assert abs(tau_hat - 0.50) < 0.03

    def test_independence_variant_switch(self):
        spec = with_calibrated_tau(
            ScenarioSpec(tag="case1", n=10000, clayton_errors=False)
        )
        rng = np.random.default_rng(18)
        x = rng.uniform(-2.8, 2.8, size=(spec.n, 2))
        from survitr.simulation import _draw_log_times

        a = np.zeros(spec.n, dtype=int)
        logt1, logt2 = _draw_log_times(spec, rng, x, a)
        r1 = logt1 - x @ BETA_TABLE[(1, 0)]
        r2 = logt2 - x @ BETA_TABLE[(2, 0)]
        assert abs(kendalltau(r1, r2).statistic) < 0.03

    def test_determinism(self):
        spec = with_calibrated_tau(ScenarioSpec(tag="case2", n=300))
        a = generate_dataset(spec, seed=11)
        b = generate_dataset(spec, seed=11)
        np.testing.assert_array_equal(a.y1, b.y1)
        np.testing.assert_array_equal(a.delta2, b.delta2)
        np.testing.assert_array_equal(a.x, b.x)


class TestCalibrateTau:
    def test_rate_decreases_in_tau(self):
        spec = ScenarioSpec(tag="main", n=4000)
        rng = np.random.default_rng(0)
        x = rng.uniform(-2.8, 2.8, size=(4000, 2))
        a = rng.integers(0, 3, size=4000)
        from survitr.simulation import _draw_log_times

        logt1, _ = _draw_log_times(spec, rng, x, a)
        def rate(tau):
            return float(np.mean(np.clip((logt1 + tau) / (3 * tau), 0, 1)))

        assert rate(4.0) < rate(2.0)

    def test_calibrated_rate_on_fresh_pilot(self):
        tau = calibrate_tau(ScenarioSpec(tag="main"))
        spec = ScenarioSpec(tag="main", n=50000, tau=tau)
        d = generate_dataset(spec, seed=99)
        for j in (1, 2):
            assert 0.48 <= 1.0 - d.delta(j).mean() <= 0.52

    def test_median_zero_scenarios_use_fixed_scale(self):
        # The benchmark cases get the fixed benchmark scale instead of a
        # calibrated one.
        spec = with_calibrated_tau(ScenarioSpec(tag="case1"))
        assert spec.tau == (CASE_TAU, CASE_TAU)
        spec = with_calibrated_tau(ScenarioSpec(tag="case2"))
        assert spec.tau == (CASE_TAU, CASE_TAU)

    def test_unreachable_target_raises(self):
        with pytest.raises(CalibrationError):
            calibrate_tau(ScenarioSpec(tag="main"), pilot=2000, target=0.99)

    def test_existing_tau_preserved(self):
        spec = ScenarioSpec(tag="main", tau=(2.0, 2.0))
        assert with_calibrated_tau(spec).tau == (2.0, 2.0)


class TestTrueJointSurvival:
    def test_pinned_origin_value(self):
        spec = ScenarioSpec(tag="case1", tau=(5.0, 5.0))
        got = true_joint_survival(spec, 1.0, 1.0, np.zeros(2), 0)
        assert got == pytest.approx(7.0 ** -0.5, abs=1e-12)
        assert got == pytest.approx(0.37796, abs=1e-5)

    def test_matches_copula_module_composition(self):
        # The copula-module margins are linear in x, so the scenario's
        # shared quadratic mean shift is absorbed by evaluating them at
        # exp(log t - shift).
        from survitr.simulation import QUAD_COEF

        spec = ScenarioSpec(tag="main", tau=(2.8, 2.5))
        rng = np.random.default_rng(1)
        for a in range(3):
            cf = copula.CopulaFit(
                family=copula.CopulaFamily.CLAYTON, theta=THETA_TRUE[a], a=a,
                neg_loglik=0.0,
            )
            m1 = MarginalFit(beta=BETA_TABLE[(1, a)], gamma=1.0, j=1, a=a,
                             c=WeightConfig(0, 0))
            m2 = MarginalFit(beta=BETA_TABLE[(2, a)], gamma=1.0, j=2, a=a,
                             c=WeightConfig(0, 0))
            for _ in range(10):
                x = rng.uniform(-2.8, 2.8, size=2)
                t1, t2 = rng.uniform(0.2, 3.0, size=2)
                shift = QUAD_COEF * x[1] ** 2
                via_copula = copula.joint_survival(
                    float(np.exp(np.log(t1) - shift)),
                    float(np.exp(np.log(t2) - shift)),
                    x, m1, m2, cf,
                )
                want = true_joint_survival(spec, t1, t2, x, a)
                assert via_copula == pytest.approx(want, abs=1e-12)

    def test_non_increasing_in_time(self):
        spec = ScenarioSpec(tag="main", tau=(2.8, 2.5))
        x = np.array([0.5, -1.0])
        s = [true_joint_survival(spec, t, 1.0, x, 1) for t in (0.5, 1.0, 2.0)]
        assert s[0] >= s[1] >= s[2]

    def test_heteroscedastic_point_mass_limit(self):
        # At x_j = 0 the benchmark heteroscedastic scale collapses; survival
        # degenerates to an indicator of the mean exceeding log t.
        spec = ScenarioSpec(tag="case2", tau=(5.0, 5.0))
        x = np.array([0.0, 1.0])
        m = x @ BETA_TABLE[(1, 0)]
        assert true_marginal_survival(spec, np.exp(m - 0.1), x, 1, 0) == 1.0
        assert true_marginal_survival(spec, np.exp(m + 0.1), x, 1, 0) == 0.0


class TestOraclePolicy:
    def test_strong_arm0_region(self):
        spec = ScenarioSpec(tag="main", tau=(2.8, 2.5))
        assert oracle_policy(spec, np.array([2.0, 0.0])) == 0

    def test_sign_symmetry_swaps_arms(self):
        spec = ScenarioSpec(tag="main", tau=(2.8, 2.5))
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(200):
            x = rng.uniform(-2.8, 2.8, size=2)
            d1 = oracle_policy(spec, x)
            d2 = oracle_policy(spec, x * np.array([-1.0, 1.0]))
            if d1 == 2 or d2 == 2:
                continue
            # Arms 0 and 1 differ only in the sign of the x1 coefficients,
            # but their dependence parameters differ, so the swap holds
            # away from the decision boundary.
            s = np.array([true_joint_survival(spec, 1, 1, x, a) for a in range(3)])
            if np.abs(s[0] - s[1]) < 0.02:
                continue
            assert d1 == 1 - d2
            checked += 1
        assert checked > 50

    def test_oracle_matches_itself(self):
        spec = ScenarioSpec(tag="main", tau=(2.8, 2.5))
        rng = np.random.default_rng(9)
        X = rng.uniform(-2.8, 2.8, size=(500, 2))
        d = oracle_decisions(spec, X)
        assert compute_otia(d, d) == 1.0

    def test_random_policy_accuracy(self):
        spec = ScenarioSpec(tag="main", tau=(2.8, 2.5))
        rng = np.random.default_rng(13)
        X = rng.uniform(-2.8, 2.8, size=(1000, 2))
        d = oracle_decisions(spec, X)
        random_d = rng.integers(0, 3, size=1000)
        assert abs(compute_otia(random_d, d) - 1.0 / 3.0) < 0.05


class TestComputeOtia:
    def test_identical(self):
        assert compute_otia([0, 1, 2], [0, 1, 2]) == 1.0

    def test_disjoint(self):
        assert compute_otia([0, 0, 0], [1, 2, 1]) == 0.0

    def test_counting(self):
        assert compute_otia([0, 1, 2, 0], [0, 1, 1, 0]) == 0.75

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_otia([0, 1], [0, 1, 2])


def small_fit_config():
    return FitConfig(
        copula_candidates=[copula.CopulaFamily.CLAYTON],
        net_width=8,
        train=TrainConfig(epochs=10, batch_size=32),
    )


class TestRunReplications:
    def test_invalid_r(self):
        with pytest.raises(ValueError):
            run_replications(ScenarioSpec(tag="case1"), WeightConfig(0, 0), R=0)

    def test_deterministic_report(self):
        spec = ScenarioSpec(tag="case1", n=120, seed=7)
        kw = dict(c=WeightConfig(0, 0), R=2, n_test=60,
                  fit_config=small_fit_config())
        r1 = run_replications(spec, **kw)
        r2 = run_replications(spec, **kw)
        assert r1.summary_text() == r2.summary_text()
        np.testing.assert_array_equal(r1.otia, r2.otia)
        for key in r1.beta_estimates:
            np.testing.assert_array_equal(
                r1.beta_estimates[key], r2.beta_estimates[key]
            )

    def test_report_shapes_and_csv(self, tmp_path):
        spec = ScenarioSpec(tag="case1", n=120, seed=3)
        rep = run_replications(spec, WeightConfig(1, 1), R=2, n_test=60,
                               fit_config=small_fit_config())
        assert rep.otia.shape == (2,)
        assert np.all((rep.otia >= 0) & (rep.otia <= 1))
        for a in range(3):
            for j in (1, 2):
                assert rep.beta_estimates[(j, a)].shape == (2, 2)
                assert np.all(rep.ssd(j, a) >= 0)
        out = tmp_path / "report.csv"
        rep.to_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "kind,rep,arm,outcome,coef,value"
        assert any(line.startswith("summary_otia") for line in lines)


def _phi(z):
    from scipy.special import ndtr

    return ndtr(z)
