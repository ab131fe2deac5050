"""Omitted-variable sensitivity analysis of reduced-form regressions.

Because the IV estimate is the ratio of the reduced form to the first
stage, driving the reduced-form coefficient to zero also nullifies the IV
estimate.  The robustness value is the partial-R2 strength a confounder
needs with both the instrument and the outcome to do exactly that;
observed covariates provide benchmarks for how plausible such strength is.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .econometrics import ols


@dataclass
class SensitivityReport:
    instrument: str
    robustness_value: float
    partial_r2_treatment: float
    t_stat: float
    dof: int
    benchmarks: list[tuple[str, float, float]]


def partial_r2(t_stat: float, dof: int) -> float:
    """Share of residual variation a regressor explains, from its t."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    t2 = t_stat * t_stat
    return t2 / (t2 + dof)


def robustness_value(t_stat: float, dof: int) -> float:
    """Minimal equal partial-R2 association (with regressor and outcome) a
    confounder needs to drive the estimate to zero."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    f2 = t_stat * t_stat / dof
    return 0.5 * (math.sqrt(f2 * f2 + 4.0 * f2) - f2)


def adjusted_estimate(
    beta: float, se: float, dof: int, r2_yu: float, r2_du: float
) -> float:
    """Point estimate after removing the worst-case bias of a confounder
    with the given partial-R2 strengths."""
    bias = se * math.sqrt(dof) * math.sqrt(r2_yu * r2_du / (1.0 - r2_du))
    return beta - math.copysign(bias, beta)


def _homoskedastic_t(y, regressors, target_index: int) -> tuple[float, int]:
    report = ols(y, regressors, add_intercept=True, robust=False)
    names = list(report.coefficients)
    nm = names[1 + target_index]
    coef = report.coefficients[nm]
    se = report.std_errors[nm]
    n = report.n_used
    k = len(names)
    t = math.inf if se == 0.0 else coef / se
    return t, n - k


def benchmark_covariate(y, z, covariate, other_controls=None) -> tuple[float, float]:
    """(partial R2 of covariate with the instrument given other controls,
    partial R2 of covariate with the outcome given instrument+controls)."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(covariate, dtype=float)
    Xo = np.asarray(other_controls, dtype=float) if other_controls is not None else None
    if Xo is not None and Xo.ndim == 1:
        Xo = Xo[:, None]
    cols_zw = np.column_stack([w] + ([Xo] if Xo is not None else []))
    t_zw, dof_zw = _homoskedastic_t(z, cols_zw, 0)
    r2_zw = 1.0 if math.isinf(t_zw) else partial_r2(t_zw, dof_zw)
    cols_yw = np.column_stack([w, z] + ([Xo] if Xo is not None else []))
    t_yw, dof_yw = _homoskedastic_t(np.asarray(y, dtype=float), cols_yw, 0)
    r2_yw = 1.0 if math.isinf(t_yw) else partial_r2(t_yw, dof_yw)
    return r2_zw, r2_yw


def analyze_reduced_form(
    y,
    z,
    controls,
    instrument_label: str,
    benchmark_columns: dict[str, int] | None = None,
) -> SensitivityReport:
    """Sensitivity of the reduced form y ~ z + controls.

    benchmark_columns maps covariate label -> column index in `controls`;
    each benchmark reports its partial R2 with the instrument and with the
    outcome.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    Xc = np.asarray(controls, dtype=float)
    if Xc.ndim == 1:
        Xc = Xc[:, None]
    t, dof = _homoskedastic_t(y, np.column_stack([z, Xc]), 0)
    benchmarks = []
    for label, col in (benchmark_columns or {}).items():
        others = np.delete(Xc, col, axis=1)
        r2_zw, r2_yw = benchmark_covariate(y, z, Xc[:, col], others if others.shape[1] else None)
        benchmarks.append((label, r2_zw, r2_yw))
    return SensitivityReport(
        instrument=instrument_label,
        robustness_value=robustness_value(t, dof),
        partial_r2_treatment=partial_r2(t, dof),
        t_stat=t,
        dof=dof,
        benchmarks=benchmarks,
    )


def write_sensitivity_csv(reports: list[SensitivityReport], path) -> None:
    """Percent values with two decimals, one row per (instrument, benchmark)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instrument", "robustness_value", "benchmark", "R2_zw", "R2_yw"])
        for rep in reports:
            rv = f"{100.0 * rep.robustness_value:.2f}"
            if not rep.benchmarks:
                writer.writerow([rep.instrument, rv, "", "", ""])
            for label, r2_zw, r2_yw in rep.benchmarks:
                writer.writerow(
                    [rep.instrument, rv, label, f"{100.0 * r2_zw:.2f}", f"{100.0 * r2_yw:.2f}"]
                )
