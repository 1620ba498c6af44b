"""Per-channel ARIMA(p, d, q): stationarity checks, CSS fitting, order search and one-step forecasts.

The team-feature history of a country is a (Games x 50) matrix. Every column is modelled on
its own and the 50 one-step forecasts are folded back into the 10x5 team matrix layout.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.stats import chi2

from app.utils.constants import (
    ADF_CRITICAL_25,
    ADF_CRITICAL_ASYMPTOTIC,
    ARIMA_DEFAULT_D,
    ARIMA_MAX_P,
    ARIMA_MAX_Q,
    ARIMA_MIN_ROWS,
    ARIMA_OBS_PER_PARAM,
    ARIMA_WHITENESS_ALPHA,
    TEAM_FEATURES,
    TEAM_ROWS,
)
from app.utils.exceptions import (
    ArimaFitError,
    DegenerateError,
    ExplosiveFitError,
    InsufficientDataError,
    ModelStateError,
    NumericError,
    RangeError,
    SelectionError,
)

STEP_TOLERANCE = 1e-8
MAX_ITERATIONS = 500
ROOT_MARGIN = 1.001
SSE_FLOOR = 1e-12


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


@dataclass
class ArimaModel:
    order: ArimaOrder
    c: float
    phi: np.ndarray
    theta: np.ndarray
    residuals: np.ndarray
    train_tail: np.ndarray
    diff_tails: List[float]
    sse: float = 0.0
    iterations: int = 0

    @property
    def n_obs(self) -> int:
        return len(self.residuals)

    def to_json(self) -> dict:
        return {
            "order": [self.order.p, self.order.d, self.order.q],
            "c": self.c,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "train_tail": self.train_tail.tolist(),
            "residual_tail": self.residuals[-max(self.order.q, 1):].tolist(),
            "diff_tails": list(self.diff_tails),
            "sse": self.sse,
        }

    @classmethod
    def from_json(cls, document: dict) -> "ArimaModel":
        p, d, q = document["order"]
        return cls(
            order=ArimaOrder(p, d, q),
            c=document["c"],
            phi=np.array(document["phi"], dtype=float),
            theta=np.array(document["theta"], dtype=float),
            residuals=np.array(document["residual_tail"], dtype=float),
            train_tail=np.array(document["train_tail"], dtype=float),
            diff_tails=list(document["diff_tails"]),
            sse=document["sse"],
        )


@dataclass
class StationarityReport:
    adf_statistic: float
    critical_values: Dict[str, float]
    nobs: int

    @property
    def stationary(self) -> bool:
        return self.adf_statistic < self.critical_values["5%"]


@dataclass
class AcfPacf:
    acf: np.ndarray
    pacf: np.ndarray


def difference(series, d: int) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if len(x) <= d:
        raise InsufficientDataError(f"cannot difference {len(x)} values {d} times")
    return np.diff(x, n=d) if d > 0 else x.copy()


def diff_tails(series, d: int) -> List[float]:
    """Last value of the series at each differencing level 0..d-1."""
    x = np.asarray(series, dtype=float)
    return [float(np.diff(x, n=level)[-1]) for level in range(d)]


def diff_heads(series, d: int) -> List[float]:
    x = np.asarray(series, dtype=float)
    return [float(np.diff(x, n=level)[0]) for level in range(d)]


def integrate(differenced, heads: Sequence[float]) -> np.ndarray:
    """Inverse of difference given the first value of each differencing level."""
    series = np.asarray(differenced, dtype=float)
    for head in reversed(heads):
        series = np.concatenate([[head], head + np.cumsum(series)])
    return series


def adf_test(series) -> StationarityReport:
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 10:
        raise InsufficientDataError(f"ADF test needs at least 10 values, got {n}")
    if np.ptp(y) == 0:
        raise DegenerateError("ADF regression is degenerate on a constant series")
    dy = np.diff(y)
    target = dy[1:]
    design = np.column_stack([np.ones(len(target)), y[1:-1], dy[:-1]])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateError("ADF regression design is rank deficient")
    beta, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ beta
    dof = len(target) - design.shape[1]
    sigma2 = resid @ resid / dof
    if sigma2 == 0:
        raise DegenerateError("ADF regression fits exactly")
    se = np.sqrt(sigma2 * np.linalg.inv(design.T @ design)[1, 1])
    critical = {
        level: ADF_CRITICAL_ASYMPTOTIC[level] + (ADF_CRITICAL_25[level] - ADF_CRITICAL_ASYMPTOTIC[level]) * 25.0 / n
        for level in ADF_CRITICAL_25
    }
    return StationarityReport(adf_statistic=float(beta[1] / se), critical_values=critical, nobs=len(target))


def acf_pacf(series, max_lag: int) -> AcfPacf:
    x = np.asarray(series, dtype=float)
    n = len(x)
    if max_lag < 1 or max_lag >= n / 2:
        raise RangeError(f"max_lag must be in 1..{(n - 1) // 2} for {n} values, got {max_lag}")
    centered = x - x.mean()
    denominator = centered @ centered
    if denominator == 0:
        raise DegenerateError("autocorrelation is undefined for a zero-variance series")
    acf = np.array([1.0] + [centered[:-k] @ centered[k:] / denominator for k in range(1, max_lag + 1)])

    # Durbin-Levinson
    pacf = np.zeros(max_lag)
    previous = np.zeros(0)
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = acf[1]
        else:
            numerator = acf[k] - previous @ acf[k - 1:0:-1]
            phi_kk = numerator / (1.0 - previous @ acf[1:k])
        current = np.append(previous - phi_kk * previous[::-1], phi_kk)
        pacf[k - 1] = phi_kk
        previous = current
    return AcfPacf(acf=acf, pacf=pacf)


def ljung_box(correlations: AcfPacf, n: int) -> float:
    """p-value of the Ljung-Box test that every autocorrelation up to the last lag is zero."""
    lags = np.arange(1, len(correlations.acf))
    q_stat = n * (n + 2) * np.sum(correlations.acf[1:] ** 2 / (n - lags))
    return float(chi2.sf(q_stat, len(lags)))


def suggest_order_bounds(correlations: AcfPacf, n: int, cap: int = ARIMA_MAX_P) -> tuple:
    """Preliminary (p, q) bounds: the lag where the PACF (for p) or the ACF (for q) truncates.

    A correlation still significant at the last lag tails off instead of truncating. When only
    the ACF tails off the series is treated as pure AR (q bound 0), when only the PACF does as
    pure MA (p bound 0); when both tail off the bounds stay at the cap.
    """
    bound = 1.96 / np.sqrt(n)
    significant_pacf = [k for k, value in enumerate(correlations.pacf, start=1) if abs(value) > bound]
    significant_acf = [k for k, value in enumerate(correlations.acf[1:], start=1) if abs(value) > bound]
    last = len(correlations.pacf)
    pacf_tails = last in significant_pacf
    acf_tails = last in significant_acf
    if pacf_tails and acf_tails:
        return cap, cap
    p = 0 if pacf_tails else min(max(significant_pacf, default=0), cap)
    q = 0 if acf_tails else min(max(significant_acf, default=0), cap)
    return p, q


def information_criterion(sse: float, n: int, k: int, criterion: str = "aic") -> float:
    sse = max(sse, SSE_FLOOR)
    fit = n * np.log(sse / n)
    if criterion == "aic":
        return float(fit + 2 * k)
    if criterion == "bic":
        return float(fit + k * np.log(n))
    raise RangeError(f"unknown information criterion '{criterion}'")


def css_residuals(x: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray, condition_on: int) -> np.ndarray:
    p = len(phi)
    e = x[condition_on:] - c
    for i in range(1, p + 1):
        e = e - phi[i - 1] * x[condition_on - i:len(x) - i]
    if len(theta) == 0:
        return e
    return lfilter([1.0], np.concatenate([[1.0], theta]), e)


def _check_ar_roots(phi: np.ndarray) -> None:
    if len(phi) == 0:
        return
    roots = np.roots(np.concatenate([-phi[::-1], [1.0]]))
    if np.any(np.abs(roots) <= ROOT_MARGIN):
        raise ExplosiveFitError(f"AR polynomial has a root inside |z| <= {ROOT_MARGIN}", last_iterate=phi.tolist())


def _ols_start(x: np.ndarray, p: int, condition_on: int) -> np.ndarray:
    target = x[condition_on:]
    if p == 0:
        return np.array([target.mean()])
    lags = [x[condition_on - i:len(x) - i] for i in range(1, p + 1)]
    design = np.column_stack([np.ones(len(target))] + lags)
    beta, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    return beta


def fit_css(series, order: ArimaOrder, condition_on: Optional[int] = None) -> ArimaModel:
    x = difference(series, order.d)
    p, q = order.p, order.q
    condition_on = p if condition_on is None else condition_on
    if condition_on < p:
        raise RangeError(f"cannot condition on {condition_on} values with p={p}")
    n_eff = len(x) - condition_on
    if n_eff <= p + q + 1:
        raise InsufficientDataError(f"{len(x)} differenced values are too few for ARIMA{order}")

    start = _ols_start(x, p, condition_on)
    iterations = 0
    if q == 0:
        # the conditional least squares optimum is the OLS solution when there is no MA part
        params = start
    else:
        x0 = np.concatenate([start, np.zeros(q)])

        def objective(params):
            residuals = css_residuals(x, params[0], params[1:p + 1], params[p + 1:], condition_on)
            sse = residuals @ residuals
            return sse if np.isfinite(sse) else np.inf

        steps = np.full(len(x0), 0.1)
        steps[0] = 0.1 * float(np.std(x)) + 1e-3
        simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * steps[i] for i in range(len(x0))])
        result = minimize(objective, x0, method="Nelder-Mead",
                          options={"xatol": STEP_TOLERANCE, "fatol": SSE_FLOOR, "maxiter": MAX_ITERATIONS,
                                   "initial_simplex": simplex})
        if not np.isfinite(result.fun) or not np.all(np.isfinite(result.x)):
            raise ArimaFitError(f"CSS optimizer diverged for ARIMA{order}", last_iterate=result.x.tolist())
        params = result.x
        iterations = int(result.nit)

    c, phi, theta = float(params[0]), np.asarray(params[1:p + 1]), np.asarray(params[p + 1:])
    _check_ar_roots(phi)
    residuals = css_residuals(x, c, phi, theta, condition_on)
    return ArimaModel(
        order=order,
        c=c,
        phi=phi,
        theta=theta,
        residuals=residuals,
        train_tail=x[-max(p, 1):].copy(),
        diff_tails=diff_tails(series, order.d),
        sse=float(residuals @ residuals),
        iterations=iterations,
    )


def forecast_one(model: ArimaModel) -> float:
    p, q = model.order.p, model.order.q
    if len(model.train_tail) < p or len(model.residuals) < q or len(model.diff_tails) != model.order.d:
        raise ModelStateError(f"ARIMA{model.order} model is missing its stored tail")
    value = model.c
    for i in range(1, p + 1):
        value += model.phi[i - 1] * model.train_tail[-i]
    for j in range(1, q + 1):
        value += model.theta[j - 1] * model.residuals[-j]
    for tail in reversed(model.diff_tails):
        value += tail
    return float(value)


@dataclass
class OrderSelection:
    order: ArimaOrder
    model: ArimaModel
    score: float
    scores: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)


def identification_bounds(x, max_p: int, max_q: int) -> tuple:
    """Order bounds for the candidate grid; a series that passes the whiteness test gets (0, 0)."""
    lag = min(max(max_p, max_q), (len(x) - 1) // 2)
    if lag < 1:
        return max_p, max_q
    correlations = acf_pacf(x, lag)
    if ljung_box(correlations, len(x)) > ARIMA_WHITENESS_ALPHA:
        return 0, 0
    p, q = suggest_order_bounds(correlations, len(x), cap=max(max_p, max_q))
    return min(p, max_p), min(q, max_q)


def select_order(series, d: int = ARIMA_DEFAULT_D, max_p: int = ARIMA_MAX_P, max_q: int = ARIMA_MAX_Q,
                 criterion: str = "aic") -> OrderSelection:
    x = difference(series, d)
    condition_on = max_p
    if np.ptp(x) == 0:
        order = ArimaOrder(0, d, 0)
        model = fit_css(series, order, condition_on=min(condition_on, len(x) - 2))
        score = information_criterion(model.sse, model.n_obs, 1, criterion)
        return OrderSelection(order=order, model=model, score=score, scores={str(order): score})

    # every candidate keeps at least ARIMA_OBS_PER_PARAM conditioned observations per parameter
    max_params = (len(x) - condition_on) // ARIMA_OBS_PER_PARAM
    if max_params < 1:
        raise InsufficientDataError(f"{len(x) - condition_on} conditioned values leave no room for an ARIMA fit")
    p_bound, q_bound = identification_bounds(x, max_p, max_q)
    candidates = []
    scores = {}
    failures = []
    for p in range(p_bound + 1):
        for q in range(q_bound + 1):
            if p + q + 1 > max_params:
                continue
            order = ArimaOrder(p, d, q)
            try:
                model = fit_css(series, order, condition_on=condition_on)
            except NumericError as e:
                failures.append(f"ARIMA{order}: {e}")
                continue
            score = information_criterion(model.sse, model.n_obs, p + q + 1, criterion)
            scores[str(order)] = score
            candidates.append(((score, p + q, p), order, model))
    if not candidates:
        raise SelectionError(f"no ARIMA order could be fitted with d={d}", failures=failures)
    (score, _, _), order, model = min(candidates, key=lambda candidate: candidate[0])
    return OrderSelection(order=order, model=model, score=score, scores=scores, failures=failures)


@dataclass
class ChannelwiseResult:
    forecast: np.ndarray
    models: List[Optional[ArimaModel]]
    diagnostics: List[dict]

    @property
    def fallbacks(self) -> int:
        return sum(1 for row in self.diagnostics if row["fallback"])


def fit_channelwise(history, d: int = ARIMA_DEFAULT_D, max_p: int = ARIMA_MAX_P, max_q: int = ARIMA_MAX_Q,
                    criterion: str = "aic", min_rows: int = ARIMA_MIN_ROWS) -> ChannelwiseResult:
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[1] != TEAM_ROWS * len(TEAM_FEATURES):
        raise RangeError(f"channel history must be (rows, {TEAM_ROWS * len(TEAM_FEATURES)}), got {history.shape}")
    forecasts = np.zeros(history.shape[1])
    models = []
    diagnostics = []
    for channel in range(history.shape[1]):
        series = history[:, channel]
        row = {"channel": channel, "order": "", "score": float("nan"), "fallback": False, "reason": ""}
        try:
            if len(series) < min_rows:
                raise InsufficientDataError(f"{len(series)} rows, need {min_rows}")
            selection = select_order(series, d, max_p, max_q, criterion)
            forecasts[channel] = forecast_one(selection.model)
            models.append(selection.model)
            row["order"] = str(selection.order)
            row["score"] = selection.score
        except NumericError as e:
            forecasts[channel] = series[-1] if len(series) else 0.0
            models.append(None)
            row["fallback"] = True
            row["reason"] = str(e)
        diagnostics.append(row)
    fallbacks = [row for row in diagnostics if row["fallback"]]
    if fallbacks:
        logging.warning(f"ARIMA carried {len(fallbacks)} of {len(diagnostics)} channels forward, first reason: {fallbacks[0]['reason']}")
    return ChannelwiseResult(forecast=forecasts.reshape(TEAM_ROWS, len(TEAM_FEATURES)), models=models, diagnostics=diagnostics)


def channelwise_backtest(history, **kwargs) -> dict:
    """One-step forecast of the last row from the rows before it, per channel."""
    history = np.asarray(history, dtype=float)
    if len(history) < 2:
        raise InsufficientDataError("backtest needs at least 2 rows")
    result = fit_channelwise(history[:-1], **kwargs)
    errors = result.forecast.reshape(-1) - history[-1]
    return {
        "channel_abs_error": np.abs(errors).tolist(),
        "rmse": float(np.sqrt(np.mean(errors ** 2))),
        "fallbacks": result.fallbacks,
    }
