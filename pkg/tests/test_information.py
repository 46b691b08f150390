import numpy as np
import pytest

from simplexfit.model import assemble, log_likelihood
from simplexfit.tools.data import simulate_dataset
from simplexfit.tools.distribution import simulate_responses
from simplexfit.tools.estimation import fisher_information, hessian, observed_information, score
from simplexfit.tools.estimation.information import fisher_beta, fisher_gamma, hessian_blocks

from .conftest import (
    FCC_TRUTH,
    LINEAR_TRUTH,
    NONLINEAR_TRUTH,
    central_gradient,
    central_jacobian,
    linear_generator,
    nonlinear_generator,
)

CASES = [
    ("linear", LINEAR_TRUTH),
    ("nonlinear", NONLINEAR_TRUTH),
    ("fcc", FCC_TRUTH),
]


@pytest.fixture(params=CASES, ids=[c[0] for c in CASES])
def model(request):
    name, truth = request.param
    spec = request.getfixturevalue(f"{name}_spec")
    data = request.getfixturevalue(f"{name}_data")
    # evaluate away from the generating values so the score is not near zero
    theta = np.array([truth[p] for p in spec.parameter_names]) * 0.97 + 0.01
    return spec, data, theta


def _split(spec, theta):
    return theta[: spec.k], theta[spec.k :]


class TestScore:
    def test_matches_finite_differences(self, model):
        spec, data, theta = model
        state = assemble(spec, data, *_split(spec, theta))
        fd = central_gradient(lambda t: log_likelihood(spec, data, *_split(spec, t)), theta, step=1e-6)
        U = score(state)
        np.testing.assert_allclose(U, fd, rtol=1e-5, atol=1e-6 * max(1.0, np.abs(U).max()))

    def test_score_has_one_entry_per_parameter(self, model):
        spec, data, theta = model
        assert score(assemble(spec, data, *_split(spec, theta))).shape == (spec.k + spec.q,)


class TestHessian:
    def test_matches_finite_differences(self, model):
        spec, data, theta = model
        H = hessian(assemble(spec, data, *_split(spec, theta)))
        fd = central_jacobian(lambda t: score(assemble(spec, data, *_split(spec, t))), theta, step=1e-6)
        np.testing.assert_allclose(H, fd, rtol=1e-4, atol=1e-6 * np.abs(H).max())

    def test_exactly_symmetric(self, model):
        spec, data, theta = model
        state = assemble(spec, data, *_split(spec, theta))
        J = observed_information(state)
        np.testing.assert_array_equal(J, J.T)
        l_bb, l_bg, l_gg = hessian_blocks(state)
        assert l_bg.shape == (spec.k, spec.q)
        np.testing.assert_array_equal(l_bb, l_bb.T)
        np.testing.assert_array_equal(l_gg, l_gg.T)

    def test_observed_is_negative_hessian(self, linear_spec, linear_data):
        state = assemble(linear_spec, linear_data, [0.8, -1.2], [-2.5, 1.5])
        np.testing.assert_array_equal(observed_information(state), -hessian(state))


class TestFisher:
    def test_block_diagonal(self, model):
        spec, data, theta = model
        K = fisher_information(assemble(spec, data, *_split(spec, theta)))
        k = spec.k
        np.testing.assert_array_equal(K[:k, k:], 0.0)
        np.testing.assert_array_equal(K[k:, :k], 0.0)
        np.testing.assert_array_equal(K, K.T)

    def test_positive_definite(self, model):
        spec, data, theta = model
        K = fisher_information(assemble(spec, data, *_split(spec, theta)))
        assert np.linalg.eigvalsh(K).min() > 0.0

    def test_dispersion_block_for_log_link(self, linear_spec, linear_data):
        # with a log link the dispersion weight is 1/2 for every observation
        state = assemble(linear_spec, linear_data, [0.8, -1.2], [-2.5, 1.5])
        np.testing.assert_allclose(state.d, 0.5, rtol=1e-12)
        np.testing.assert_allclose(fisher_gamma(state), 0.5 * state.Z.T @ state.Z, rtol=1e-12)

    def test_mean_block_weights(self, linear_spec, linear_data):
        state = assemble(linear_spec, linear_data, [0.8, -1.2], [-2.5, 1.5])
        expected = state.X.T @ np.diag(state.s * state.w) @ state.X
        np.testing.assert_allclose(fisher_beta(state), expected, rtol=1e-12)


@pytest.mark.slow
class TestInformationIdentity:
    """Observed information averages to the Fisher information at the generating values."""

    REPLICATES = 500

    @pytest.mark.parametrize(
        "generator,truth,spec_name",
        [(linear_generator, LINEAR_TRUTH, "linear_spec"), (nonlinear_generator, NONLINEAR_TRUTH, "nonlinear_spec")],
        ids=["linear", "nonlinear"],
    )
    def test_mean_observed_matches_fisher(self, request, generator, truth, spec_name):
        spec = request.getfixturevalue(spec_name)
        design = simulate_dataset(generator(200), seed=101)
        beta, gamma = _split(spec, np.array([truth[p] for p in spec.parameter_names]))
        at_truth = assemble(spec, design, beta, gamma)
        K = fisher_information(at_truth)
        np.testing.assert_array_equal(K[: spec.k, spec.k :], 0.0)

        uniforms = np.random.default_rng(7).random((self.REPLICATES, design.n))
        responses = simulate_responses(at_truth.mu, at_truth.sigma2, uniforms)
        observed = np.stack(
            [observed_information(assemble(spec, design.with_response(y), beta, gamma)) for y in responses]
        )
        mean = observed.mean(axis=0)
        mc_se = observed.std(axis=0, ddof=1) / np.sqrt(self.REPLICATES)
        assert np.all(np.abs(mean - K) <= 4.0 * mc_se + 1e-10 * np.abs(K).max())
