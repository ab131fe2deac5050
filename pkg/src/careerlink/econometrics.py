"""Estimators and diagnostics: OLS/2SLS with robust errors, weak-instrument
statistics, probit, two-step sample selection with an endogenous regressor,
GMM IV-Poisson for counts, and the product-limit survival estimator.

All estimators are pure functions of (data, seed) returning an
EstimateReport.  Inference defaults to HC1 heteroskedasticity-robust
standard errors with normal-approximation p-values; the sample-selection
model reports percentile bootstrap intervals instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm


class RankDeficient(ValueError):
    pass


class WeakOrZeroFirstStage(ValueError):
    pass


class PerfectSeparation(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class TooFewSelected(ValueError):
    pass


class NegativeCounts(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass
class DesignMatrix:
    """Assembled estimation arrays: rows with a null treatment are dropped
    jointly; the intercept is implicit (estimators prepend the ones
    column)."""

    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    X: np.ndarray
    control_labels: list[str]

    @classmethod
    def assemble(cls, y, d, z, X, control_labels: Sequence[str]) -> "DesignMatrix":
        y = np.asarray(y, dtype=float)
        d = np.asarray(d, dtype=float)
        z = np.atleast_2d(np.asarray(z, dtype=float).T).T
        X = np.atleast_2d(np.asarray(X, dtype=float).T).T
        keep = ~np.isnan(d)
        dm = cls(y[keep], d[keep], z[keep], X[keep], list(control_labels))
        dm.validate()
        return dm

    @property
    def n(self) -> int:
        return len(self.y)

    def validate(self) -> None:
        if self.n == 0:
            raise EmptyInput("no rows after dropping null treatments")
        for name, arr in (("y", self.y), ("d", self.d), ("z", self.z), ("X", self.X)):
            if np.isnan(arr).any():
                raise ValueError(f"null cells in {name} after assembly")
        k = 1 + 1 + self.X.shape[1]  # intercept + treatment + controls
        if k >= self.n:
            raise ValueError(f"{k} columns with only {self.n} rows")
        if len(self.control_labels) != self.X.shape[1]:
            raise ValueError("every control column needs a label")


@dataclass
class EstimateReport:
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    pvalues: dict[str, float]
    se_flavor: str
    n_used: int
    diagnostics: dict = field(default_factory=dict)
    conf_int: dict[str, tuple[float, float]] = field(default_factory=dict)
    seed: int | None = None


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(X.shape[0]), X])


def _check_rank(X: np.ndarray, context: str) -> None:
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficient(f"{context}: design matrix rank < {X.shape[1]}")


def _pvalue(coef: float, se: float) -> float:
    # Zero estimated variance: nothing can be rejected, report p = 1.
    if se == 0.0:
        return 1.0
    return 2.0 * norm.sf(abs(coef) / se)


def _labels(prefix: str, k: int, labels: Sequence[str] | None) -> list[str]:
    if labels is not None:
        if len(labels) != k:
            raise ValueError(f"expected {k} labels, got {len(labels)}")
        return list(labels)
    return [f"{prefix}{i}" for i in range(k)]


def ols(
    y,
    X,
    labels: Sequence[str] | None = None,
    add_intercept: bool = True,
    robust: bool = True,
) -> EstimateReport:
    """Least squares with HC1 (default) or homoskedastic standard errors."""
    y = np.asarray(y, dtype=float)
    X = _as_matrix(X)
    names = _labels("x", X.shape[1], labels)
    if add_intercept:
        X = _with_intercept(X)
        names = ["Intercept"] + names
    n, k = X.shape
    _check_rank(X, "ols")
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    # A numerically perfect fit has zero residual variance; snap it so the
    # degenerate-variance p-value convention (p = 1) applies.
    if float(resid @ resid) <= 1e-24 * max(float(y @ y), 1.0):
        resid = np.zeros_like(resid)
    if robust:
        meat = (X * resid[:, None] ** 2).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / (n - k))
        flavor = "HC1"
    else:
        sigma2 = float(resid @ resid) / (n - k)
        cov = xtx_inv * sigma2
        flavor = "homoskedastic"
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return EstimateReport(
        coefficients=dict(zip(names, beta)),
        std_errors=dict(zip(names, se)),
        pvalues={nm: _pvalue(b, s) for nm, b, s in zip(names, beta, se)},
        se_flavor=flavor,
        n_used=n,
        diagnostics={"residuals": resid, "rss": float(resid @ resid)},
    )


ols_hc = ols


def _iv_fit(y, W, Z):
    """Generic 2SLS: regressors W instrumented by Z (both with intercepts
    already attached).  Just-identified when Z and W have equal width."""
    _check_rank(Z, "instrument matrix")
    _check_rank(W, "regressor matrix")
    n = len(y)
    Pz = Z @ np.linalg.solve(Z.T @ Z, Z.T)
    What = Pz @ W
    ww = What.T @ W
    if np.linalg.matrix_rank(ww) < W.shape[1]:
        raise RankDeficient("projected regressors are rank deficient")
    beta = np.linalg.solve(ww, What.T @ y)
    resid = y - W @ beta
    bread = np.linalg.inv(ww)
    meat = (What * resid[:, None] ** 2).T @ What
    k = W.shape[1]
    cov = bread @ meat @ bread.T * (n / (n - k))
    return beta, np.sqrt(np.maximum(np.diag(cov), 0.0)), resid


def tsls(
    y,
    d,
    z,
    X=None,
    labels: Sequence[str] | None = None,
    treatment_label: str = "d",
) -> EstimateReport:
    """2SLS for a single endogenous regressor with one (or more)
    instruments and exogenous controls.

    Standard errors are HC1 computed from the 2SLS residuals.  Includes
    the first-stage coefficient, the Cragg-Donald F, and the AR p-value at
    beta0 = 0 in the diagnostics.
    """
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    z = _as_matrix(z)
    Xc = _as_matrix(X) if X is not None else np.empty((len(y), 0))
    ctrl_names = _labels("x", Xc.shape[1], labels)
    W = _with_intercept(np.column_stack([d, Xc]))
    Z = _with_intercept(np.column_stack([z, Xc]))
    names = ["Intercept", treatment_label] + ctrl_names

    first = ols(d, np.column_stack([z, Xc]), add_intercept=True, robust=False)
    fs_coefs = [first.coefficients[f"x{i}"] for i in range(z.shape[1])]
    scale = float(np.std(d)) or 1.0
    if all(abs(c) * float(np.std(z[:, i]) or 1.0) < 1e-12 * scale for i, c in enumerate(fs_coefs)):
        raise WeakOrZeroFirstStage("first-stage coefficient numerically zero")

    beta, se, resid = _iv_fit(y, W, Z)
    diag = {
        "first_stage_coef": fs_coefs[0] if len(fs_coefs) == 1 else fs_coefs,
        "cragg_donald_F": cragg_donald_f(d, z, Xc if Xc.shape[1] else None),
        "residuals": resid,
    }
    if z.shape[1] == 1:
        diag["ar_pvalue"] = anderson_rubin_test(y, d, z, Xc if Xc.shape[1] else None)
    return EstimateReport(
        coefficients=dict(zip(names, beta)),
        std_errors=dict(zip(names, se)),
        pvalues={nm: _pvalue(b, s) for nm, b, s in zip(names, beta, se)},
        se_flavor="HC1",
        n_used=len(y),
        diagnostics=diag,
    )


def iv_exact(
    y,
    D,
    Z,
    X=None,
    labels: Sequence[str] | None = None,
    treatment_labels: Sequence[str] | None = None,
) -> EstimateReport:
    """Just-identified IV with several endogenous regressors, one
    instrument each."""
    y = np.asarray(y, dtype=float)
    D = _as_matrix(D)
    Z = _as_matrix(Z)
    if D.shape[1] != Z.shape[1]:
        raise ValueError("need exactly one instrument per endogenous regressor")
    Xc = _as_matrix(X) if X is not None else np.empty((len(y), 0))
    t_names = _labels("d", D.shape[1], treatment_labels)
    c_names = _labels("x", Xc.shape[1], labels)
    W = _with_intercept(np.column_stack([D, Xc]))
    Zm = _with_intercept(np.column_stack([Z, Xc]))
    names = ["Intercept"] + t_names + c_names
    beta, se, resid = _iv_fit(y, W, Zm)
    return EstimateReport(
        coefficients=dict(zip(names, beta)),
        std_errors=dict(zip(names, se)),
        pvalues={nm: _pvalue(b, s) for nm, b, s in zip(names, beta, se)},
        se_flavor="HC1",
        n_used=len(y),
        diagnostics={"residuals": resid},
    )


def _residualize(v: np.ndarray, X: np.ndarray) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(X, v, rcond=None)
    return v - X @ beta


def cragg_donald_f(d, z, X=None) -> float:
    """First-stage strength for one endogenous regressor.

    Computed from the partialled-out projection; with a single instrument
    this equals the squared homoskedastic first-stage t statistic.
    Returns +inf when the first stage fits perfectly.
    """
    d = np.asarray(d, dtype=float)
    z = _as_matrix(z)
    Xc = _with_intercept(_as_matrix(X) if X is not None else np.empty((len(d), 0)))
    _check_rank(np.column_stack([z, Xc]), "cragg_donald_f")
    d_t = _residualize(d, Xc)
    z_t = np.column_stack([_residualize(z[:, j], Xc) for j in range(z.shape[1])])
    gram = z_t.T @ z_t
    proj = z_t @ np.linalg.solve(gram, z_t.T @ d_t)
    explained = float(proj @ proj)
    resid = float(d_t @ d_t) - explained
    n = len(d)
    k = Xc.shape[1] + z.shape[1]
    k_z = z.shape[1]
    if resid <= 0 or math.isclose(resid, 0.0, abs_tol=1e-12 * max(float(d_t @ d_t), 1.0)):
        return math.inf
    return (explained / k_z) / (resid / (n - k))


def anderson_rubin_test(y, d, z, X=None, beta0: float = 0.0) -> float:
    """Weak-instrument-robust p-value for H0: structural coefficient =
    beta0, just-identified case: the HC1 p-value of the instrument in the
    regression of y - beta0*d on (z, X)."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    z = _as_matrix(z)
    if z.shape[1] != 1:
        raise ValueError("anderson_rubin_test handles the single-instrument case")
    Xc = _as_matrix(X) if X is not None else np.empty((len(y), 0))
    report = ols(y - beta0 * d, np.column_stack([z, Xc]), add_intercept=True)
    return report.pvalues["x0"]


# --- probit and sample selection -------------------------------------------


def _mills_ratio(index: np.ndarray) -> np.ndarray:
    """phi(x)/Phi(x), computed in log space for stability."""
    return np.exp(norm.logpdf(index) - norm.logcdf(index))


def probit_score(s: np.ndarray, W: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Analytic gradient of the probit log-likelihood."""
    index = W @ beta
    lam = np.where(
        s > 0.5,
        np.exp(norm.logpdf(index) - norm.logcdf(index)),
        -np.exp(norm.logpdf(index) - norm.logsf(index)),
    )
    return W.T @ lam


def probit_loglik(s: np.ndarray, W: np.ndarray, beta: np.ndarray) -> float:
    index = W @ beta
    return float(np.sum(np.where(s > 0.5, norm.logcdf(index), norm.logsf(index))))


def probit_mle(
    s,
    W,
    labels: Sequence[str] | None = None,
    add_intercept: bool = True,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> EstimateReport:
    """Probit MLE via Fisher scoring with analytic gradient.

    Converged when the max absolute score drops below tol.  Diverging
    coefficients signal perfect separation.
    """
    s = np.asarray(s, dtype=float)
    W = _as_matrix(W)
    names = _labels("w", W.shape[1], labels)
    if add_intercept:
        W = _with_intercept(W)
        names = ["Intercept"] + names
    if s.min() == s.max():
        raise PerfectSeparation("outcome takes a single value")
    _check_rank(W, "probit")
    beta = np.zeros(W.shape[1])
    for _ in range(max_iter):
        g = probit_score(s, W, beta)
        if np.max(np.abs(g)) < tol:
            break
        index = W @ beta
        pdf2 = np.exp(2 * norm.logpdf(index) - norm.logcdf(index) - norm.logsf(index))
        H = (W * pdf2[:, None]).T @ W
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            raise PerfectSeparation("singular information matrix") from None
        # Step halving keeps the likelihood monotone.
        ll = probit_loglik(s, W, beta)
        t = 1.0
        for _ in range(30):
            trial = beta + t * step
            if probit_loglik(s, W, trial) >= ll - 1e-12:
                break
            t /= 2.0
        beta = beta + t * step
        if np.max(np.abs(beta)) > 1e3:
            raise PerfectSeparation("coefficients diverging")
    else:
        raise NoConvergence(f"probit score not below {tol} after {max_iter} iterations")
    index = W @ beta
    # Separated data lets the score underflow to zero while every fitted
    # probability saturates; the MLE does not exist in that case.
    probs = norm.cdf(index)
    if np.all(np.where(s > 0.5, probs > 1 - 1e-6, probs < 1e-6)):
        raise PerfectSeparation("all fitted probabilities saturated")
    pdf2 = np.exp(2 * norm.logpdf(index) - norm.logcdf(index) - norm.logsf(index))
    cov = np.linalg.inv((W * pdf2[:, None]).T @ W)
    se = np.sqrt(np.diag(cov))
    return EstimateReport(
        coefficients=dict(zip(names, beta)),
        std_errors=dict(zip(names, se)),
        pvalues={nm: _pvalue(b, sd) for nm, b, sd in zip(names, beta, se)},
        se_flavor="MLE",
        n_used=len(s),
        diagnostics={"loglik": probit_loglik(s, W, beta)},
    )


def inverse_mills(index) -> np.ndarray:
    """phi/Phi of a selection index; the sample-selection correction term."""
    return _mills_ratio(np.asarray(index, dtype=float))


def _heckman_point(s, W_sel, y, d, z, X, ctrl_names):
    sel_report = probit_mle(s, W_sel)
    gamma = np.array(list(sel_report.coefficients.values()))
    index = _with_intercept(W_sel) @ gamma
    mask = s > 0.5
    imr = inverse_mills(index[mask])
    Xo = np.column_stack([X[mask], imr]) if X.shape[1] else imr[:, None]
    n_sel = int(mask.sum())
    k = Xo.shape[1] + 2
    if n_sel < 2 * k:
        raise TooFewSelected(f"{n_sel} selected rows for {k} parameters")
    report = tsls(
        y[mask],
        d[mask],
        z[mask],
        Xo,
        labels=ctrl_names + ["InverseMillsRatio"],
        treatment_label="d",
    )
    return report


def heckman_iv(
    s,
    W_sel,
    y,
    d,
    z,
    X=None,
    bootstrap_reps: int = 300,
    seed: int = 0,
    labels: Sequence[str] | None = None,
) -> EstimateReport:
    """Two-step sample selection with an endogenous outcome regressor.

    Step 1 fits a probit of the selection indicator on W_sel (which must
    contain the exclusion variable); step 2 runs 2SLS of the outcome on
    (d, X, inverse Mills ratio) for selected rows, instrumenting d with z.
    The whole two-step pipeline is percentile-bootstrapped.
    """
    s = np.asarray(s, dtype=float)
    W_sel = _as_matrix(W_sel)
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    Xc = _as_matrix(X) if X is not None else np.empty((len(y), 0))
    ctrl_names = _labels("x", Xc.shape[1], labels)

    point = _heckman_point(s, W_sel, y, d, z, Xc, ctrl_names)
    names = list(point.coefficients)

    rng = np.random.default_rng(seed)
    n = len(s)
    draws = {nm: [] for nm in names}
    failures = 0
    for _ in range(bootstrap_reps):
        idx = rng.integers(0, n, size=n)
        try:
            rep = _heckman_point(
                s[idx], W_sel[idx], y[idx], d[idx], z[idx], Xc[idx], ctrl_names
            )
        except (PerfectSeparation, NoConvergence, TooFewSelected, RankDeficient,
                WeakOrZeroFirstStage):
            failures += 1
            continue
        for nm in names:
            draws[nm].append(rep.coefficients[nm])

    conf_int = {}
    std_errors = {}
    for nm in names:
        sample = np.asarray(draws[nm])
        if len(sample) >= 10:
            lo, hi = np.percentile(sample, [2.5, 97.5])
            conf_int[nm] = (float(lo), float(hi))
            std_errors[nm] = float(np.std(sample, ddof=1))
        else:
            conf_int[nm] = (math.nan, math.nan)
            std_errors[nm] = math.nan
    return EstimateReport(
        coefficients=point.coefficients,
        std_errors=std_errors,
        pvalues={},
        se_flavor="bootstrap-percentile",
        n_used=point.n_used,
        diagnostics={"bootstrap_failures": failures, **{
            k: v for k, v in point.diagnostics.items() if k != "residuals"
        }},
        conf_int=conf_int,
        seed=seed,
    )


# --- GMM IV-Poisson ---------------------------------------------------------


def iv_poisson_gmm(
    y_count,
    d,
    z,
    X=None,
    labels: Sequence[str] | None = None,
    treatment_label: str = "d",
    tol: float = 1e-10,
    max_iter: int = 100,
) -> EstimateReport:
    """Exponential-mean model with an endogenous regressor, estimated from
    the multiplicative-error moments E[z (y exp(-w'beta) - 1)] = 0 by
    damped Newton on the just-identified system.  Sandwich SEs.
    """
    y = np.asarray(y_count, dtype=float)
    if np.any(y < 0):
        raise NegativeCounts("y_count must be nonnegative")
    d = np.asarray(d, dtype=float)
    z = _as_matrix(z)
    Xc = _as_matrix(X) if X is not None else np.empty((len(y), 0))
    W = _with_intercept(np.column_stack([d, Xc]))
    Z = _with_intercept(np.column_stack([z, Xc]))
    if W.shape[1] != Z.shape[1]:
        raise ValueError("just-identified system requires one instrument per regressor")
    _check_rank(W, "iv_poisson_gmm")
    _check_rank(Z, "iv_poisson_gmm instruments")
    names = ["Intercept", treatment_label] + _labels("x", Xc.shape[1], labels)
    n = len(y)

    def moments(beta):
        u = y * np.exp(-np.clip(W @ beta, -500, 500)) - 1.0
        return Z.T @ u / n, u

    # Log-scale least squares gives a serviceable starting point.
    beta = np.linalg.lstsq(W, np.log(y + 0.5), rcond=None)[0]
    g, u = moments(beta)
    for _ in range(max_iter):
        if np.max(np.abs(g)) < tol:
            break
        mu = y * np.exp(-np.clip(W @ beta, -500, 500))
        J = -(Z * mu[:, None]).T @ W / n
        try:
            step = np.linalg.solve(J, g)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular moment Jacobian") from None
        t = 1.0
        norm_g = np.linalg.norm(g)
        for _ in range(50):
            trial = beta - t * step
            g_trial, u_trial = moments(trial)
            if np.linalg.norm(g_trial) < norm_g:
                break
            t /= 2.0
        else:
            raise NoConvergence("damped Newton made no progress")
        beta, g, u = trial, g_trial, u_trial
    else:
        raise NoConvergence(f"moment norm {np.max(np.abs(g)):.3e} after {max_iter} iterations")

    mu = y * np.exp(-np.clip(W @ beta, -500, 500))
    J = -(Z * mu[:, None]).T @ W / n
    S = (Z * u[:, None] ** 2).T @ Z / n
    J_inv = np.linalg.inv(J)
    cov = J_inv @ S @ J_inv.T / n
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return EstimateReport(
        coefficients=dict(zip(names, beta)),
        std_errors=dict(zip(names, se)),
        pvalues={nm: _pvalue(b, sd) for nm, b, sd in zip(names, beta, se)},
        se_flavor="GMM-sandwich",
        n_used=n,
        diagnostics={"moment_norm": float(np.max(np.abs(g)))},
    )


# --- survival ---------------------------------------------------------------


@dataclass
class SurvivalCurve:
    """Step function starting at S(0) = 1, dropping at event times."""

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def evaluate(self, t: float) -> float:
        s = 1.0
        for time, surv in zip(self.times, self.survival):
            if time <= t:
                s = surv
            else:
                break
        return s


def kaplan_meier(gap_times: Sequence[tuple[float, bool]]) -> SurvivalCurve:
    """Product-limit estimator over (duration, censored) observations.

    Censored observations at a given time remain in the risk set for
    events at that same time.
    """
    if not len(gap_times):
        raise EmptyInput("no observations")
    durations = np.asarray([t for t, _ in gap_times], dtype=float)
    censored = np.asarray([bool(c) for _, c in gap_times])
    if np.any(durations <= 0):
        raise ValueError("durations must be positive")
    event_times = np.unique(durations[~censored])
    times, surv, risks, events = [], [], [], []
    s = 1.0
    for t in event_times:
        at_risk = int(np.sum(durations >= t))
        d = int(np.sum((durations == t) & ~censored))
        s *= (at_risk - d) / at_risk
        times.append(t)
        surv.append(s)
        risks.append(at_risk)
        events.append(d)
    return SurvivalCurve(
        np.asarray(times), np.asarray(surv), np.asarray(risks), np.asarray(events)
    )
