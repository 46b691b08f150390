"""
Command orchestration: each command loads data, fits, runs its diagnostic
and writes its reports under the run's output directory.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from simplexfit import config as settings
from simplexfit.config import validate_paths
from simplexfit.errors import ConfigError, NotConvergedError
from simplexfit.model import ModelSpec
from simplexfit.schemas import MCStudyConfig, RunConfig
from simplexfit.tools.data import Dataset, load_dataset, run_scenario, simulate_dataset, write_dataset
from simplexfit.tools.diagnostics import (
    delete_and_refit_many,
    influence_all,
    residual_plot_data,
    simulated_envelope,
    weighted_residuals,
)
from simplexfit.tools.estimation import FittedModel, fit, inference_table
from simplexfit.utils.logger import Logger
from simplexfit.utils.reporting import write_csv, write_json
from simplexfit.utils.ui import show_progress

logger = logging.getLogger(__name__)


class Runner:
    def __init__(self, config: RunConfig, config_path: str = "", quiet: bool = False, workers: Optional[int] = None):
        self.config = config
        self.config_path = config_path
        self.logger = Logger(quiet=quiet)
        self.workers = workers if workers is not None else settings.WORKERS
        self.out_dir = Path(config.out_dir)
        self.written: List[Path] = []

    # ---------- shared steps ----------
    def _write_json(self, name: str, payload: dict) -> Path:
        path = write_json(self.out_dir / name, {**payload, "config": self.config})
        self.written.append(path)
        return path

    def _write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_csv(self.out_dir / name, frame)
        self.written.append(path)
        return path

    @show_progress("Loading data...", "Data loaded")
    def load(self) -> tuple:
        validate_paths(self.config)
        spec = ModelSpec.from_config(self.config)
        data = load_dataset(self.config.data.path, self.config.data.response)
        return spec, data

    @show_progress(
        "Fitting model...",
        lambda fitted: f"Model fitted: {fitted.iterations} iterations, log-likelihood {fitted.loglik:.6f}",
    )
    def _fit(self, spec: ModelSpec, data: Dataset) -> FittedModel:
        return fit(spec, data, self.config.fit)

    def fit_model(self) -> FittedModel:
        spec, data = self.load()
        fitted = self._fit(spec, data)
        self.logger.log_convergence(fitted)
        for note in fitted.notes:
            self.logger.log_info(note)
        return fitted

    def _require(self, fitted: FittedModel) -> None:
        if not fitted.converged:
            raise NotConvergedError(
                f"Fit did not converge after {fitted.iterations} iterations "
                f"(max|U| = {fitted.max_score:.3e})"
            )

    # ---------- fit ----------
    def fit_payload(self, fitted: FittedModel) -> dict:
        if fitted.converged:
            parameters = [vars(row) for row in inference_table(fitted)]
        else:
            parameters = [
                {"name": name, "estimate": est, "se": se, "z": None, "p_value": None}
                for name, est, se in zip(fitted.parameter_names, fitted.theta_hat, fitted.se)
            ]
        return {
            "command": "fit",
            "seed": self.config.seed,
            "n": fitted.data.n,
            "converged": fitted.converged,
            "iterations": fitted.iterations,
            "loglik": fitted.loglik,
            "max_score": fitted.max_score,
            "mean_formula": str(fitted.spec.mean_formula),
            "dispersion_formula": str(fitted.spec.dispersion_formula),
            "mean_link": fitted.spec.mean_link.name,
            "dispersion_link": fitted.spec.dispersion_link.name,
            "parameters": parameters,
            "beta_start": dict(zip(fitted.spec.beta_names, fitted.start.beta)),
            "gamma_start": dict(zip(fitted.spec.gamma_names, fitted.start.gamma)),
            "sigma2_range": [float(np.min(fitted.state.sigma2)), float(np.max(fitted.state.sigma2))],
            "trace": fitted.trace,
            "notes": fitted.notes,
        }

    def cmd_fit(self) -> List[Path]:
        fitted = self.fit_model()
        self._write_json("fit.json", self.fit_payload(fitted))
        self._require(fitted)

        self.logger.log_estimates(inference_table(fitted))
        self._write_csv("residuals.csv", weighted_residuals(fitted).to_frame())
        self.logger.log_summary(
            "FIT",
            f"Converged in {fitted.iterations} iterations; log-likelihood {fitted.loglik:.6f}.\n"
            f"Reports written to {self.out_dir}",
        )
        return self.written

    # ---------- envelope ----------
    def cmd_envelope(self) -> List[Path]:
        fitted = self.fit_model()
        self._require(fitted)
        options = self.config.envelope
        with self.logger.progress("Simulating replicates...", "Envelope complete", options.replicates) as spinner:
            bands = simulated_envelope(
                fitted, options.replicates, self.config.seed, options.refit, self.workers, progress=spinner.tick
            )

        self._write_csv(
            "envelope.csv",
            pd.DataFrame(
                {
                    "order": np.arange(1, len(bands.observed) + 1),
                    "observed": bands.observed,
                    "lower": bands.lower,
                    "median": bands.median,
                    "upper": bands.upper,
                }
            ),
        )
        plot = residual_plot_data(weighted_residuals(fitted), bands.omega)
        self._write_csv("residual_plot.csv", plot)
        outside = plot.loc[plot["outside"], "index"].tolist()
        self._write_json(
            "envelope.json",
            {
                "command": "envelope",
                "seed": bands.seed,
                "n_replicates": bands.n_replicates,
                "skipped": bands.skipped,
                "refit": bands.refit,
                "omega": [bands.omega_lo, bands.omega_hi],
                "outside_envelope": (bands.outside + 1).tolist(),
                "outside_omega": outside,
            },
        )
        if outside:
            self.logger.log_flagged(f"residuals outside omega for cases {', '.join(map(str, outside))}")
        self.logger.log_summary(
            "ENVELOPE",
            f"omega = ({bands.omega_lo:.4f}, {bands.omega_hi:.4f}); "
            f"{len(bands.outside)} ordered residuals outside the band; {bands.skipped} replicates skipped.",
        )
        return self.written

    # ---------- influence ----------
    def cmd_influence(self) -> List[Path]:
        fitted = self.fit_model()
        self._require(fitted)
        options = self.config.influence
        mean_cov = options.covariate.mean if options.covariate else None
        disp_cov = options.covariate.dispersion if options.covariate else None

        summary: Dict[str, dict] = {}
        with self.logger.progress("Computing local influence...", "Influence computed"):
            for scheme in options.schemes:
                reports = influence_all(fitted, scheme, mean_cov, disp_cov)
                frames = []
                summary[scheme] = {}
                for subset, report in reports.items():
                    flagged = (report.flagged + 1).tolist()
                    frames.append(
                        pd.DataFrame(
                            {
                                "subset": subset,
                                "index": np.arange(1, len(report.c_t) + 1),
                                "i_max": report.i_max,
                                "c_t": report.c_t,
                                "flagged": np.isin(np.arange(len(report.c_t)), report.flagged),
                            }
                        )
                    )
                    summary[scheme][subset] = {
                        "c_max": report.c_max,
                        "threshold": report.threshold,
                        "flagged": flagged,
                        "i_max_largest": int(np.argmax(np.abs(report.i_max))) + 1,
                    }
                    if flagged:
                        self.logger.log_flagged(f"{scheme}/{subset}: cases {', '.join(map(str, flagged))}")
                self._write_csv(f"influence_{scheme}.csv", pd.concat(frames, ignore_index=True))

        deletions = []
        if options.deletion_sets:
            zero_based = [[c - 1 for c in cases] for cases in options.deletion_sets]
            with self.logger.progress("Refitting without selected cases...", "Deletion refits complete"):
                results = delete_and_refit_many(fitted, zero_based, self.workers)
            rows = []
            for result in results:
                label = " ".join(str(c + 1) for c in result.cases) or "none"
                deletions.append(
                    {
                        "cases": [c + 1 for c in result.cases],
                        "converged": result.converged,
                        "sigma2_max_before": result.sigma2_max_before,
                        "sigma2_max_after": result.sigma2_max_after,
                        "message": result.message,
                        "changes": result.changes,
                    }
                )
                rows.extend(
                    {
                        "cases": label,
                        "parameter": change.name,
                        "estimate": change.estimate,
                        "estimate_change_pct": change.estimate_change_pct,
                        "se_change_pct": change.se_change_pct,
                        "p_value": change.p_value,
                    }
                    for change in result.changes
                )
            self._write_csv(
                "deletions.csv",
                pd.DataFrame(
                    rows,
                    columns=["cases", "parameter", "estimate", "estimate_change_pct", "se_change_pct", "p_value"],
                ),
            )

        self._write_json("influence.json", {"command": "influence", "schemes": summary, "deletions": deletions})
        self.logger.log_summary("INFLUENCE", f"Schemes: {', '.join(options.schemes)}. Reports written to {self.out_dir}")
        return self.written

    # ---------- Monte Carlo ----------
    def cmd_mc_study(self) -> List[Path]:
        study = self.config.mc_study or MCStudyConfig()
        rows = []
        for index, scenario in enumerate(study.scenarios):
            with self.logger.progress(
                f"Scenario {scenario.name}...", f"Scenario {scenario.name} complete", scenario.replications
            ) as spinner:
                result = run_scenario(
                    scenario,
                    self.config.seed,
                    index,
                    self.workers,
                    study.failure_limit,
                    self.config.fit,
                    progress=spinner.tick,
                )
            self._write_csv(
                f"mc_{result.name}.csv",
                pd.DataFrame(
                    {
                        "rank": np.arange(1, result.n + 1),
                        "expected_normal": result.expected_normal,
                        "mean_order_statistic": result.mean_order_statistics,
                    }
                ),
            )
            rows.append(
                {
                    "name": result.name,
                    "n": result.n,
                    "replications": result.replications,
                    "failures": result.failures,
                    "lambda": result.lambda_ratio,
                    "mu_range": result.mu_range,
                    "fitted_mu_range": result.fitted_mu_range,
                    "mean": result.mean,
                    "variance": result.variance,
                    "skewness": result.skewness,
                    "kurtosis": result.kurtosis,
                    "omega": [result.omega_lo, result.omega_hi],
                }
            )
        self._write_json("mc_study.json", {"command": "mc-study", "seed": self.config.seed, "scenarios": rows})
        self.logger.log_table(
            ("scenario", "lambda", "mean", "var", "skew", "kurt"),
            [
                (r["name"], f"{r['lambda']:.1f}", f"{r['mean']:.3f}", f"{r['variance']:.3f}",
                 f"{r['skewness']:.3f}", f"{r['kurtosis']:.3f}")
                for r in rows
            ],
        )
        return self.written

    # ---------- simulate ----------
    def cmd_simulate(self) -> List[Path]:
        gen = self.config.simulate
        if gen is None:
            raise ConfigError("Run document has no 'simulate' section")
        with self.logger.progress(f"Simulating {gen.n} observations...", "Dataset simulated"):
            dataset = simulate_dataset(gen, self.config.seed)
        path = write_dataset(dataset, self.out_dir / gen.output)
        self.written.append(path)
        self._write_json("simulate.json", {"command": "simulate", "seed": self.config.seed, "output": str(path)})
        self.logger.log_info(f"Wrote {dataset.n} rows to {path}")
        return self.written


COMMANDS: Dict[str, Callable[[Runner], List[Path]]] = {
    "fit": Runner.cmd_fit,
    "envelope": Runner.cmd_envelope,
    "influence": Runner.cmd_influence,
    "mc-study": Runner.cmd_mc_study,
    "simulate": Runner.cmd_simulate,
}
