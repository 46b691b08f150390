"""
Published reading-accuracy fits. Skipped unless SIMPLEXFIT_READING_DATA
points at the exported CSV (see README).
"""

import numpy as np
import pytest

from simplexfit.config import load_run_config
from simplexfit.model import ModelSpec
from simplexfit.tools.diagnostics import delete_and_refit, influence
from simplexfit.tools.estimation import fit

from .conftest import ROOT


def _fit(name, data):
    config = load_run_config(str(ROOT / "configs" / name))
    fitted = fit(ModelSpec.from_config(config), data, config.fit)
    assert fitted.converged
    return fitted


@pytest.fixture(scope="module")
def constant_fit(reading_data):
    return _fit("reading_constant.json", reading_data)


@pytest.fixture(scope="module")
def varying_fit(reading_data):
    return _fit("reading_varying.json", reading_data)


class TestConstantDispersion:
    def test_estimates(self, constant_fit):
        np.testing.assert_allclose(constant_fit.beta_hat, [1.207, -0.818, 0.577, -0.630], atol=0.002)
        # identity dispersion link, so g1 is sigma^2
        assert constant_fit.gamma_hat[0] == pytest.approx(0.035, abs=0.001)

    def test_mean_standard_errors(self, constant_fit):
        np.testing.assert_allclose(constant_fit.se[:4], [0.209, 0.209, 0.189, 0.189], atol=0.002)

    def test_delete_first_case(self, constant_fit):
        result = delete_and_refit(constant_fit, [0])
        assert result.converged
        changes = {c.name: c for c in result.changes}
        assert abs(changes["b3"].estimate_change_pct) == pytest.approx(24.4, abs=2.0)
        assert abs(changes["b4"].estimate_change_pct) == pytest.approx(22.1, abs=2.0)
        assert changes["b3"].p_value < 0.0005


class TestVaryingDispersion:
    def test_estimates(self, varying_fit):
        np.testing.assert_allclose(varying_fit.beta_hat, [1.2, -0.8, 0.4, -0.4], atol=0.05)
        np.testing.assert_allclose(varying_fit.gamma_hat, [1.1, -2.8, -0.6], atol=0.05)

    def test_standard_errors(self, varying_fit):
        np.testing.assert_allclose(varying_fit.se[:4], [0.1748, 0.1748, 0.0739, 0.0739], atol=0.002)
        np.testing.assert_allclose(varying_fit.se[4:], [0.2162, 0.2633, 0.2639], atol=0.002)

    def test_case_weight_curvature(self, varying_fit):
        report = influence(varying_fit, "case_weights", "theta")
        assert report.c_max == pytest.approx(1.1, abs=0.15)
