import numpy as np
import pytest

from simplexfit.errors import NotConvergedError
from simplexfit.model import ModelSpec, assemble
from simplexfit.schemas import FitOptions
from simplexfit.tools.data import Dataset, simulate_dataset
from simplexfit.tools.diagnostics import hat_matrix, residual_plot_data, residuals_from_state, weighted_residuals
from simplexfit.tools.estimation import fit

from .conftest import linear_generator


class TestHatMatrix:
    def test_projection(self, linear_fit):
        H = hat_matrix(linear_fit.state)
        np.testing.assert_allclose(H @ H, H, atol=1e-12)
        np.testing.assert_allclose(H, H.T, atol=1e-14)
        assert np.trace(H) == pytest.approx(linear_fit.spec.k, rel=1e-12)

    def test_leverages_are_the_diagonal(self, nonlinear_fit):
        report = residuals_from_state(nonlinear_fit.state)
        np.testing.assert_allclose(report.h_star, np.diag(hat_matrix(nonlinear_fit.state)), atol=1e-13)
        assert np.all((report.h_star > 0.0) & (report.h_star < 1.0))
        assert report.h_star.sum() == pytest.approx(nonlinear_fit.spec.k, rel=1e-10)


class TestResiduals:
    def test_working_response_reproduces_estimate(self, linear_fit):
        # at the optimum a weighted least-squares step on the working response returns beta_hat
        state = linear_fit.state
        report = residuals_from_state(state)
        root_w = np.sqrt(state.s * state.w)
        coef, *_ = np.linalg.lstsq(root_w[:, None] * state.X, root_w * report.working_response, rcond=None)
        np.testing.assert_allclose(coef, linear_fit.beta_hat, atol=1e-6)

    def test_standardisation(self, linear_fit):
        state = linear_fit.state
        report = weighted_residuals(linear_fit)
        raw = np.sqrt(state.s * state.w) * (report.working_response - state.X @ state.beta)
        np.testing.assert_allclose(report.r_beta, raw / np.sqrt(1.0 - report.h_star), rtol=1e-12)

    def test_roughly_standard(self, nonlinear_fit):
        r = weighted_residuals(nonlinear_fit).r_beta
        assert abs(r.mean()) < 0.5
        assert 0.3 < r.var() < 3.0

    def test_frame(self, linear_fit):
        frame = weighted_residuals(linear_fit).to_frame()
        assert list(frame.columns) == ["index", "y", "mu_hat", "sigma2_hat", "r_beta", "h_star"]
        assert frame["index"].iloc[0] == 1
        assert len(frame) == linear_fit.data.n

    def test_needs_convergence(self, linear_spec, linear_data):
        fitted = fit(linear_spec, linear_data, FitOptions(max_iterations=1, algorithm="fisher_scoring"))
        with pytest.raises(NotConvergedError):
            weighted_residuals(fitted)


class TestPlotData:
    def test_without_band(self, linear_fit):
        frame = residual_plot_data(weighted_residuals(linear_fit))
        assert list(frame.columns) == ["index", "mu_hat", "r_beta"]

    def test_flags_outside_band(self, linear_fit):
        report = weighted_residuals(linear_fit)
        frame = residual_plot_data(report, (-1.0, 1.0))
        np.testing.assert_array_equal(frame["outside"].to_numpy(), np.abs(report.r_beta) > 1.0)


class TestMeanLinkDirection:
    @pytest.fixture(scope="class")
    def data(self):
        rng = np.random.default_rng(30)
        return Dataset.from_arrays({"y": rng.uniform(0.05, 0.95, 30), "x2": rng.uniform(-1.0, 1.0, 30)}, "y")

    @pytest.mark.parametrize("mean_link", ["logit", "probit", "cloglog", "loglog"])
    def test_sign_follows_raw_residual(self, data, mean_link):
        spec = ModelSpec.from_formulas("b1 + b2*x2", "g1", mean_link=mean_link)
        state = assemble(spec, data, [0.2, 0.5], [np.log(0.5)])
        report = residuals_from_state(state)
        expected = state.u * (state.y - state.mu) / np.sqrt(state.v * (1.0 - report.h_star))
        np.testing.assert_allclose(report.r_beta, expected, rtol=1e-12)
        np.testing.assert_array_equal(np.sign(report.r_beta), np.sign(state.y - state.mu))

    @pytest.mark.parametrize("mean_link", ["probit", "loglog"])
    def test_matches_working_residual_up_to_link_direction(self, data, mean_link):
        spec = ModelSpec.from_formulas("b1 + b2*x2", "g1", mean_link=mean_link)
        state = assemble(spec, data, [0.2, 0.5], [np.log(0.5)])
        report = residuals_from_state(state)
        raw = np.sqrt(state.s * state.w) * (report.working_response - state.X @ state.beta)
        np.testing.assert_allclose(
            report.r_beta, np.sign(state.g1) * raw / np.sqrt(1.0 - report.h_star), rtol=1e-10
        )


@pytest.mark.slow
class TestResidualMoments:
    def test_pooled_moments_near_standard(self, linear_spec):
        pooled = []
        for seed in range(200):
            fitted = fit(linear_spec, simulate_dataset(linear_generator(80), seed=1000 + seed))
            if fitted.converged:
                pooled.append(weighted_residuals(fitted).r_beta)
        assert len(pooled) >= 190
        r = np.concatenate(pooled)
        assert -0.1 < r.mean() < 0.1
        assert 0.85 < r.var() < 1.15
        lo, hi = np.quantile(r, [0.025, 0.975])
        assert lo == pytest.approx(-2.0, abs=0.3)
        assert hi == pytest.approx(2.0, abs=0.3)
