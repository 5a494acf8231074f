import math

import numpy as np
import pytest

from defectiva import clayton
from defectiva.bdgd import BdgdParams, Dataset, loglik
from defectiva.mle import (
    FitConfig,
    default_initial,
    delta_method_cure,
    delta_method_tau,
    fit,
    fit_margin,
    numerical_hessian,
    z_quantile,
)
from defectiva.simulate import GenConfig, generate

TRUTH = BdgdParams(1.0, 0.8, 1.0, 0.8, 1.0)


@pytest.fixture(scope="module")
def exact1000():
    return generate(GenConfig(TRUTH, 1000, seed=11, method="exact"))


@pytest.fixture(scope="module")
def report1000(exact1000):
    return fit(exact1000, FitConfig(initial=TRUTH))


def test_z_quantile():
    assert z_quantile(0.95) == pytest.approx(1.959963984540054, abs=1e-8)
    assert z_quantile(0.90) == pytest.approx(1.6448536269514722, abs=1e-8)
    with pytest.raises(ValueError):
        z_quantile(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(confidence_level=1.0)
    with pytest.raises(ValueError):
        FitConfig(max_iterations=0)
    with pytest.raises(ValueError):
        FitConfig(space="logit")


def test_recovers_truth_within_three_se(report1000):
    r = report1000
    assert r.converged and not r.monotone_likelihood
    for name, value in TRUTH.as_dict().items():
        est = getattr(r.estimates, name)
        assert abs(est - value) < 3 * r.std_errors[name], name
    assert set(r.tracked_estimates()) == {"alpha1", "alpha2", "beta1", "beta2", "rho1", "rho2", "phi"}


def test_recipe_generator_shifts_second_margin(scenario1_n1000):
    # the recipe's conditional step does not leave margin 2 exactly defective
    # Gompertz, so its fit drifts while margin 1 stays on target
    r = fit(scenario1_n1000, FitConfig(initial=TRUTH))
    z = {k: (getattr(r.estimates, k) - v) / r.std_errors[k] for k, v in TRUTH.as_dict().items()}
    assert abs(z["alpha1"]) < 3 and abs(z["beta1"]) < 3
    assert z["alpha2"] > 3 and z["beta2"] > 3
    assert r.rho[0] == pytest.approx(0.2865, abs=0.04)


def test_report_invariants(report1000):
    r = report1000
    for name, (lo, hi) in r.wald_intervals.items():
        assert lo <= getattr(r.estimates, name) <= hi
        assert r.std_errors[name] >= 0
    for inf in r.rho_inference + (r.tau_inference,):
        assert inf.ok and inf.se >= 0 and inf.lo <= inf.estimate <= inf.hi
    assert r.tau_s == pytest.approx(clayton.spearman_rho(r.estimates.phi))
    d = r.to_dict()
    assert d["rho_inference"]["rho1"]["estimate"] == r.rho[0]


def test_local_maximum(report1000, exact1000):
    theta = report1000.estimates.to_array()
    best = loglik(report1000.estimates, exact1000)
    for i in range(5):
        for f in (0.99, 1.01):
            t = theta.copy()
            t[i] *= f
            assert loglik(BdgdParams(*t), exact1000) <= best


def test_hessian_symmetric(report1000):
    H = report1000.hessian
    assert np.max(np.abs(H - H.T)) / np.max(np.abs(H)) < 1e-3


def test_numerical_hessian_quadratic():
    A = np.array([[-2.0, 0.5], [0.5, -1.0]])
    H = numerical_hessian(lambda x: 0.5 * x @ A @ x, np.array([1.0, 2.0]))
    assert np.allclose(H, A, atol=1e-6)


def test_deterministic(scenario1_n500):
    a = fit(scenario1_n500)
    b = fit(scenario1_n500)
    assert a.estimates == b.estimates
    assert np.array_equal(a.covariance, b.covariance)


def test_log_and_original_space_agree(scenario1_n500):
    a = fit(scenario1_n500, FitConfig(space="log"))
    b = fit(scenario1_n500, FitConfig(space="original"))
    assert np.allclose(a.estimates.to_array(), b.estimates.to_array(), rtol=1e-4, atol=0)


def test_all_censored_is_monotone():
    d = Dataset([1.0, 2.0, 3.0, 0.5], [0, 0, 0, 0], [2.0, 1.0, 3.0, 4.0], [0, 0, 0, 0])
    r = fit(d)
    assert r.monotone_likelihood and not r.converged
    assert r.wald_intervals is None and r.std_errors is None


def test_near_independence_gives_small_dependence():
    d = generate(GenConfig(BdgdParams(1.0, 0.8, 1.0, 0.8, 1e-3), 2000, seed=1))
    r = fit(d)
    assert r.estimates.phi < 0.05
    assert r.tau_k < 0.1
    # phi drifting to the boundary is exactly the monotone signature
    assert r.monotone_likelihood and not r.converged


def test_default_initial_reasonable(scenario1_n1000):
    init = default_initial(scenario1_n1000)
    assert 0.5 < init.alpha1 < 2 and 0.4 < init.beta1 < 1.6
    assert 0.05 <= clayton.kendall_tau(init.phi) <= 0.9


def test_fit_margin_exponential_like(rng):
    # large beta makes the margin nearly defective-exponential; check plateau only
    t = rng.exponential(size=3000)
    cured = rng.random(3000) < 0.4
    obs = np.where(cured, 10.0, np.minimum(t, 10.0))
    m = fit_margin(obs, (~cured).astype(int))
    assert math.exp(-m.alpha / m.beta) == pytest.approx(0.4, abs=0.03)


def test_delta_cure_zero_covariance():
    rho1, rho2 = delta_method_cure(TRUTH, np.zeros((5, 5)))
    assert rho1.se == 0 and rho1.lo == rho1.hi == rho1.estimate
    assert rho2.ok


def test_delta_cure_hand_value():
    cov = np.zeros((5, 5))
    cov[0, 0] = cov[1, 1] = 0.01
    rho1, _ = delta_method_cure(TRUTH, cov)
    # rho * sqrt((1/0.8)^2 0.01 + (1/0.64)^2 0.01), evaluated by hand
    assert rho1.se == pytest.approx(0.05732893152863306, rel=1e-12)
    assert rho1.hi - rho1.estimate == pytest.approx(z_quantile(0.95) * rho1.se)


def test_delta_cure_truncation_and_failure():
    cov = np.zeros((5, 5))
    cov[0, 0] = 4.0
    rho1, _ = delta_method_cure(TRUTH, cov)
    assert rho1.truncated and rho1.lo == 0.0
    cov[0, 0] = -1.0
    rho1, rho2 = delta_method_cure(TRUTH, cov)
    assert not rho1.ok and rho2.ok


def test_table2_interval_reconstruction():
    z = z_quantile(0.95)
    assert 0.6674 - z * 0.1096 == pytest.approx(0.4525, abs=1e-3)
    assert 0.6674 + z * 0.1096 == pytest.approx(0.8823, abs=1e-3)


def test_delta_tau():
    # hand value 2/(10.2022)^2 * 2.0747; the reference table lists 0.0575
    r = delta_method_tau(8.2022, 2.0747**2)
    assert r.se == pytest.approx(0.03986553865509374, rel=1e-12)
    assert delta_method_tau(3.0, 0.0).se == 0.0
    assert delta_method_tau(1.0, 0.3**2).se == pytest.approx(2 / 9 * 0.3, rel=1e-12)
    assert round(delta_method_tau(1.0, 0.09).se, 4) == 0.0667
    with pytest.raises(ValueError):
        delta_method_tau(1.0, -1.0)


@pytest.mark.slow
def test_interval_width_scales_with_root_n():
    widths = {}
    for n in (100, 400):
        w = []
        for s in range(30):
            r = fit(generate(GenConfig(TRUTH, n, seed=1000 + s)), FitConfig(initial=TRUTH))
            assert r.wald_intervals is not None
            w.append([hi - lo for lo, hi in r.wald_intervals.values()])
        widths[n] = np.median(w, axis=0)
    ratio = widths[100] / widths[400]
    assert np.all((ratio > 2 * 0.7) & (ratio < 2 * 1.3)), ratio
