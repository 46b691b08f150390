import numpy as np
import pytest

from simplexfit.errors import ConfigError, PinnedValueMissingError, SingularDesignError
from simplexfit.model import ModelSpec
from simplexfit.tools.estimation import starting_values
from simplexfit.tools.estimation.starting_values import least_squares, user_starting_values

from .conftest import FCC_DISPERSION, FCC_MEAN, FCC_TRUTH, LINEAR_TRUTH


class TestLinearModels:
    def test_nonlinear_step_is_skipped(self, linear_spec, linear_data):
        start = starting_values(linear_spec, linear_data)
        np.testing.assert_array_equal(start.beta, start.beta_linear)
        assert start.beta.shape == (2,)
        assert start.gamma.shape == (2,)

    def test_close_to_truth(self, linear_spec, linear_data):
        start = starting_values(linear_spec, linear_data)
        assert start.beta == pytest.approx([LINEAR_TRUTH["b1"], LINEAR_TRUTH["b2"]], abs=0.5)

    def test_variants_agree_for_linear_predictors(self, linear_spec, linear_data):
        a = starting_values(linear_spec, linear_data, "derivation")
        b = starting_values(linear_spec, linear_data, "as_printed")
        np.testing.assert_array_equal(a.beta, b.beta)
        np.testing.assert_array_equal(a.gamma, b.gamma)

    def test_unknown_variant(self, linear_spec, linear_data):
        with pytest.raises(ConfigError):
            starting_values(linear_spec, linear_data, "textbook")


class TestNonlinearModels:
    def test_needs_pinned_values(self, fcc_data):
        spec = ModelSpec.from_formulas(FCC_MEAN, FCC_DISPERSION)
        with pytest.raises(PinnedValueMissingError) as info:
            starting_values(spec, fcc_data)
        assert "b3" in str(info.value)

    def test_pinned_start_is_finite(self, fcc_spec, fcc_data):
        start = starting_values(fcc_spec, fcc_data)
        assert np.all(np.isfinite(start.beta)) and np.all(np.isfinite(start.gamma))
        # the linear step keeps the pinned value
        assert start.beta_linear[fcc_spec.beta_names.index("b3")] == -20.0

    def test_correction_moves_the_linear_start(self, fcc_spec, fcc_data):
        start = starting_values(fcc_spec, fcc_data)
        assert not np.allclose(start.beta, start.beta_linear)

    def test_as_printed_differs(self, fcc_spec, fcc_data):
        derivation = starting_values(fcc_spec, fcc_data, "derivation")
        printed = starting_values(fcc_spec, fcc_data, "as_printed")
        np.testing.assert_allclose(printed.beta + derivation.beta_linear, derivation.beta, rtol=1e-10, atol=1e-10)

    def test_dispersion_start_is_reasonable(self, fcc_spec, fcc_data):
        start = starting_values(fcc_spec, fcc_data)
        g1 = start.gamma[fcc_spec.gamma_names.index("g1")]
        assert abs(g1 - FCC_TRUTH["g1"]) < 2.5


class TestLeastSquares:
    def test_exact_solution(self):
        X = np.column_stack((np.ones(5), np.arange(5.0)))
        theta = least_squares(X, 1.0 + 2.0 * np.arange(5.0), [], "test")
        np.testing.assert_allclose(theta, [1.0, 2.0], atol=1e-12)

    def test_ridge_for_collinear_design(self):
        X = np.column_stack((np.ones(5), np.ones(5)))
        notes = []
        theta = least_squares(X, np.ones(5), notes, "test")
        assert np.all(np.isfinite(theta))
        assert theta.sum() == pytest.approx(1.0, rel=1e-6)
        assert "ridge" in notes[0]

    def test_non_finite_design(self):
        X = np.array([[np.inf, 1.0], [1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(SingularDesignError):
            least_squares(X, np.ones(3), [], "test")


class TestUserStarts:
    def test_ordered_by_spec(self, linear_spec):
        start = user_starting_values(linear_spec, {"b2": 2.0, "b1": 1.0}, {"g1": -1.0, "g2": 0.5})
        np.testing.assert_array_equal(start.beta, [1.0, 2.0])
        np.testing.assert_array_equal(start.gamma, [-1.0, 0.5])

    def test_missing(self, linear_spec):
        with pytest.raises(ConfigError, match="g2"):
            user_starting_values(linear_spec, {"b1": 1.0, "b2": 2.0}, {"g1": -1.0})
