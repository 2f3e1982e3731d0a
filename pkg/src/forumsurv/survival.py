"""Proportional-hazards survival modeling.

Implements Cox partial-likelihood fitting (Newton-Raphson with step halving,
Breslow handling of tied event times, and a ridge fallback for degenerate
fits), the Breslow baseline survival estimator, Kaplan-Meier curves, and
Harrell's concordance index.  The baseline hazard cancels out of the partial
likelihood, so fitting touches only the covariate effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import bisect
import json
import warnings

import numpy as np

RIDGE_FALLBACK = 1e-4
BETA_DIVERGENCE_LIMIT = 50.0
MODEL_FORMAT = "cox-model"
MODEL_VERSION = 1


class _RestartWithRidge(Exception):
    """Internal: the plain fit went singular or diverged."""


@dataclass
class SurvCurve:
    """A right-continuous step function of survival probability over days."""

    points: list[tuple[float, float]]

    def value_at(self, t: float) -> float:
        if t < 0:
            raise ValueError("survival curves are defined for t >= 0")
        ts = [pt[0] for pt in self.points]
        idx = bisect.bisect_right(ts, t) - 1
        if idx < 0:
            return 1.0
        return self.points[idx][1]


@dataclass
class ConcordanceReport:
    c_index: float
    concordant: int
    discordant: int
    tied_risk: int
    comparable: int


@dataclass
class CoxModel:
    """Fitted proportional-hazards model.

    ``beta`` lives in centered/unit-variance covariate units; ``stds`` of
    exactly 1.0 mark columns that were constant in training (their
    coefficients are pinned to zero).  ``baseline`` is the Breslow survival
    table for an average user, starting at (0, 1.0).
    """

    names: tuple[str, ...]
    beta: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    se: np.ndarray
    baseline: list[tuple[float, float]]
    ridge: float = 0.0
    converged: bool = True
    n_iter: int = 0

    @property
    def beta_original(self) -> np.ndarray:
        """Coefficients rescaled back to the original covariate units."""
        return self.beta / self.stds

    def _scale(self, vector) -> np.ndarray:
        x = np.asarray(vector.values, dtype=float)
        if tuple(vector.names) != tuple(self.names):
            raise ValueError("covariate names do not match the model")
        return (x - self.means) / self.stds

    def risk_score(self, vector) -> float:
        """Linear predictor beta . x_scaled; monotone in the hazard."""
        return float(self.beta @ self._scale(vector))

    def save(self, path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "names": list(self.names),
            "beta_scaled": self.beta.tolist(),
            "beta_original": self.beta_original.tolist(),
            "se": self.se.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "baseline_t": [t for t, _ in self.baseline],
            "baseline_s0": [s for _, s in self.baseline],
            "ridge": self.ridge,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CoxModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
        if payload.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version")
        return cls(
            names=tuple(payload["names"]),
            beta=np.array(payload["beta_scaled"], dtype=float),
            means=np.array(payload["means"], dtype=float),
            stds=np.array(payload["stds"], dtype=float),
            se=np.array(payload["se"], dtype=float),
            baseline=list(zip(payload["baseline_t"], payload["baseline_s0"])),
            ridge=payload["ridge"],
            converged=payload["converged"],
            n_iter=payload["n_iter"],
        )


# ---------------------------------------------------------------------------
# Partial likelihood machinery


def _records_arrays(records):
    times = np.array([float(r.time_days) for r in records])
    events = np.array([bool(r.event) for r in records])
    if np.any(times <= 0):
        raise ValueError("survival times must be positive")
    names = tuple(records[0].covariates.names)
    for r in records:
        if tuple(r.covariates.names) != names:
            raise ValueError("records carry mismatched covariate names")
    X = np.stack([np.asarray(r.covariates.values, dtype=float) for r in records])
    return times, events, X, names


def partial_loglik(beta, times, events, X, ridge: float = 0.0):
    """Breslow log partial likelihood with its gradient and Hessian.

    One descending sweep over distinct times accumulates the at-risk sums
    exp(eta), exp(eta)*x, and exp(eta)*x x^T; each distinct event time then
    contributes d * (mean event covariates - weighted risk-set mean).
    """
    beta = np.asarray(beta, dtype=float)
    order = np.argsort(times, kind="mergesort")
    t = times[order]
    e = events[order]
    Xo = X[order]
    eta = Xo @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
    n, d = Xo.shape
    loglik = 0.0
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    w_sum = 0.0
    wx_sum = np.zeros(d)
    wxx_sum = np.zeros((d, d))
    i = n - 1
    while i >= 0:
        j = i
        while j >= 0 and t[j] == t[i]:
            j -= 1
        block = slice(j + 1, i + 1)
        wb = w[block]
        Xb = Xo[block]
        w_sum += float(wb.sum())
        wx_sum += wb @ Xb
        wxx_sum += Xb.T @ (wb[:, None] * Xb)
        ev = e[block]
        d_k = int(ev.sum())
        if d_k:
            loglik += float(eta[block][ev].sum()) - d_k * np.log(w_sum)
            mu = wx_sum / w_sum
            grad += Xb[ev].sum(axis=0) - d_k * mu
            hess -= d_k * (wxx_sum / w_sum - np.outer(mu, mu))
        i = j
    if ridge:
        loglik -= 0.5 * ridge * float(beta @ beta)
        grad -= ridge * beta
        hess -= ridge * np.eye(d)
    return loglik, grad, hess


def _newton(times, events, X, *, max_iter: int, tol: float, ridge: float):
    """Maximize the partial likelihood; every accepted step is an ascent."""
    d = X.shape[1]
    beta = np.zeros(d)
    if d == 0:
        return beta, np.zeros((0, 0)), True, 0
    loglik, grad, hess = partial_loglik(beta, times, events, X, ridge)
    for iteration in range(1, max_iter + 1):
        try:
            delta = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            raise _RestartWithRidge("singular Hessian")
        step = 1.0
        accepted = None
        for _ in range(40):
            cand = beta + step * delta
            cand_ll, cand_g, cand_h = partial_loglik(cand, times, events, X, ridge)
            if np.isfinite(cand_ll) and cand_ll >= loglik - 1e-12:
                accepted = (cand, cand_ll, cand_g, cand_h)
                break
            step /= 2.0
        if accepted is None:
            return beta, hess, True, iteration  # no finite improvement left
        beta, loglik, grad, hess = accepted
        if np.max(np.abs(beta)) > BETA_DIVERGENCE_LIMIT and not ridge:
            raise _RestartWithRidge("coefficients diverging")
        if np.max(np.abs(step * delta)) < tol:
            return beta, hess, True, iteration
    warnings.warn("Cox fit did not converge within the iteration budget")
    return beta, hess, False, max_iter


def _breslow_baseline(beta, times, events, X) -> list[tuple[float, float]]:
    """Breslow cumulative-hazard baseline, returned as survival steps."""
    order = np.argsort(times, kind="mergesort")
    t = times[order]
    e = events[order]
    with np.errstate(over="ignore"):
        w = np.exp(X[order] @ beta)
    entries: list[tuple[float, int, float]] = []  # (time, d_k, at-risk weight)
    w_sum = 0.0
    i = len(t) - 1
    while i >= 0:
        j = i
        while j >= 0 and t[j] == t[i]:
            j -= 1
        block = slice(j + 1, i + 1)
        w_sum += float(w[block].sum())
        d_k = int(e[block].sum())
        if d_k:
            entries.append((float(t[i]), d_k, w_sum))
        i = j
    cumulative = 0.0
    baseline = [(0.0, 1.0)]
    for time, d_k, at_risk in reversed(entries):
        cumulative += d_k / at_risk
        baseline.append((time, float(np.exp(-cumulative))))
    return baseline


def fit_cox(records, *, max_iter: int = 100, tol: float = 1e-8, ridge: float | None = None) -> CoxModel:
    """Fit a Cox proportional-hazards model to survival records.

    Covariates are centered and scaled to unit variance internally; constant
    columns are tolerated with a warning and a zero coefficient.  A singular
    Hessian or diverging coefficients trigger one ridge-penalized refit
    (lambda = 1e-4) with a warning.  Pass ``ridge`` to penalize up front.
    """
    records = list(records)
    if not records:
        raise ValueError("no survival records")
    times, events, X, names = _records_arrays(records)
    if not events.any():
        raise ValueError("cannot fit a survival model with zero events")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = stds == 0.0
    if constant.any():
        flagged = [names[j] for j in np.flatnonzero(constant)]
        warnings.warn(f"constant covariates pinned to zero: {flagged}")
    stds = np.where(constant, 1.0, stds)
    Xs = (X - means) / stds
    active = ~constant

    requested = 0.0 if ridge is None else ridge
    try:
        beta_active, hess, converged, n_iter = _newton(
            times, events, Xs[:, active], max_iter=max_iter, tol=tol, ridge=requested
        )
        used_ridge = requested
    except _RestartWithRidge as reason:
        warnings.warn(f"plain Cox fit failed ({reason}); refitting with ridge penalty")
        used_ridge = RIDGE_FALLBACK
        beta_active, hess, converged, n_iter = _newton(
            times, events, Xs[:, active], max_iter=max_iter, tol=tol, ridge=used_ridge
        )

    d = X.shape[1]
    beta = np.zeros(d)
    beta[active] = beta_active
    se = np.zeros(d)
    if active.any():
        try:
            cov = np.linalg.inv(-hess)
            se[active] = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        except np.linalg.LinAlgError:
            warnings.warn("Hessian not invertible at the optimum; SEs left at zero")
    baseline = _breslow_baseline(beta, times, events, Xs)
    return CoxModel(
        names=names,
        beta=beta,
        means=means,
        stds=stds,
        se=se,
        baseline=baseline,
        ridge=used_ridge,
        converged=converged,
        n_iter=n_iter,
    )


# ---------------------------------------------------------------------------
# Prediction


def _baseline_value(baseline, t: float) -> float:
    ts = [pt[0] for pt in baseline]
    idx = bisect.bisect_right(ts, t) - 1
    if idx < 0:
        return 1.0
    return baseline[idx][1]


def predict_survival(model: CoxModel, vector, t: float) -> float:
    """S(t | x) = S0(t) ** exp(beta . x_scaled), right-continuous in t."""
    if t < 0:
        raise ValueError("prediction time must be >= 0")
    risk = np.exp(model.risk_score(vector))
    return float(_baseline_value(model.baseline, t) ** risk)


def predict_curve(model: CoxModel, vector, horizon_days: float) -> SurvCurve:
    """Predicted survival step function on [0, horizon]."""
    if horizon_days < 0:
        raise ValueError("horizon must be >= 0")
    risk = np.exp(model.risk_score(vector))
    points = [
        (t, float(s0**risk)) for t, s0 in model.baseline if t <= horizon_days
    ]
    return SurvCurve(points)


# ---------------------------------------------------------------------------
# Kaplan-Meier


def _as_time_event(item) -> tuple[float, bool]:
    if hasattr(item, "time_days"):
        return float(item.time_days), bool(item.event)
    t, e = item
    return float(t), bool(e)


def km_estimate(records) -> SurvCurve:
    """Kaplan-Meier product-limit estimate from (time, event) observations.

    Censored observations stay in the risk set through their own time and
    drop out afterwards; the curve steps only at event times.
    """
    data = sorted(_as_time_event(r) for r in records)
    if not data:
        raise ValueError("no observations")
    if data[0][0] < 0:
        raise ValueError("negative survival time")
    points = [(0.0, 1.0)]
    at_risk = len(data)
    surviving = 1.0
    i = 0
    n = len(data)
    while i < n:
        t = data[i][0]
        deaths = 0
        removed = 0
        while i < n and data[i][0] == t:
            deaths += int(data[i][1])
            removed += 1
            i += 1
        if deaths:
            surviving *= 1.0 - deaths / at_risk
            points.append((t, surviving))
        at_risk -= removed
    return SurvCurve(points)


# ---------------------------------------------------------------------------
# Concordance


def c_index(risk_scores, records) -> ConcordanceReport:
    """Harrell's C: fraction of comparable pairs ordered correctly by risk.

    A pair is comparable when the smaller observed time belongs to an event;
    ties in risk score count half.
    """
    risk = np.asarray(risk_scores, dtype=float)
    pairs = [_as_time_event(r) for r in records]
    if risk.size != len(pairs):
        raise ValueError("risk scores and records differ in length")
    times = np.array([p[0] for p in pairs])
    events = np.array([p[1] for p in pairs])
    concordant = discordant = tied = 0
    for i in np.flatnonzero(events):
        later = times > times[i]
        if not later.any():
            continue
        concordant += int(np.sum(risk[i] > risk[later]))
        discordant += int(np.sum(risk[i] < risk[later]))
        tied += int(np.sum(risk[i] == risk[later]))
    comparable = concordant + discordant + tied
    if comparable == 0:
        raise ValueError("no comparable pairs")
    c = (concordant + 0.5 * tied) / comparable
    return ConcordanceReport(c, concordant, discordant, tied, comparable)


# ---------------------------------------------------------------------------
# Per-covariate summaries


def per_covariate_cindex(records) -> tuple[list[tuple[str, float]], list[str]]:
    """Fit a one-covariate Cox model per column and report its in-sample C.

    Returns (rows sorted by descending C, names skipped due to fit errors).
    """
    from .features import FeatureVector  # local import avoids a cycle

    records = list(records)
    if not records:
        raise ValueError("no survival records")
    names = tuple(records[0].covariates.names)
    rows: list[tuple[str, float]] = []
    skipped: list[str] = []
    for j, name in enumerate(names):
        singles = [
            SurvivalRecordView(
                r.author,
                r.time_days,
                r.event,
                FeatureVector(np.asarray(r.covariates.values)[j : j + 1], (name,)),
            )
            for r in records
        ]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit_cox(singles)
            risks = [model.risk_score(s.covariates) for s in singles]
            report = c_index(risks, singles)
        except ValueError:
            skipped.append(name)
            continue
        rows.append((name, report.c_index))
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows, skipped


@dataclass(frozen=True)
class SurvivalRecordView:
    """Lightweight record stand-in used for single-covariate refits."""

    author: str
    time_days: int
    event: bool
    covariates: object


@dataclass(frozen=True)
class TopDrugRow:
    drug: str
    n_users: int
    mean_survival: float
    small_group: bool


def survival_by_top_drug(
    records,
    model: CoxModel,
    *,
    horizon_days: float = 365.0,
    min_group: int = 5,
    prefix: str = "drug:",
) -> list[TopDrugRow]:
    """Mean predicted S(horizon) grouped by each user's most-mentioned drug.

    Users with an all-zero drug block have no top drug and are skipped;
    groups smaller than ``min_group`` are flagged rather than dropped.
    """
    drug_idx = [j for j, n in enumerate(model.names) if n.startswith(prefix)]
    if not drug_idx:
        raise ValueError("model has no drug features")
    groups: dict[str, list[float]] = {}
    for r in records:
        vals = np.asarray(r.covariates.values, dtype=float)[drug_idx]
        if vals.max() <= 0.0:
            continue
        top = model.names[drug_idx[int(np.argmax(vals))]][len(prefix):]
        groups.setdefault(top, []).append(
            predict_survival(model, r.covariates, horizon_days)
        )
    rows = [
        TopDrugRow(drug, len(vals), float(np.mean(vals)), len(vals) < min_group)
        for drug, vals in groups.items()
    ]
    rows.sort(key=lambda row: (-row.mean_survival, row.drug))
    return rows
