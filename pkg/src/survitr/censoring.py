"""Censoring-survival estimators supplying inverse-probability weights.

Both estimators target P(C_j >= t | x), fit on the log-time scale by
treating delta_j = 0 as the event of interest. Evaluations are clamped
below at a configurable floor so no weight can explode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset

__all__ = [
    "CensoringError",
    "DegenerateFitError",
    "ConvergenceError",
    "CensoringModel",
    "fit_km_censoring",
    "fit_cox_censoring",
    "eval_G",
    "DEFAULT_FLOOR",
]

DEFAULT_FLOOR = 0.02


class CensoringError(RuntimeError):
    pass


class DegenerateFitError(CensoringError):
    pass


class ConvergenceError(CensoringError):
    pass


@dataclass(frozen=True)
class CensoringModel:
    """Fitted censoring-survival curve, either Kaplan-Meier or Cox PH.

    ``jump_times`` are ascending log-scale times. For the KM kind,
    ``surv_values[k]`` is the survival just after ``jump_times[k]`` (right
    continuous, drop at the jump). For the Cox kind, ``cum_hazard[k]`` is
    the Breslow baseline cumulative hazard at ``jump_times[k]`` and ``rho``
    the coefficient vector.
    """

    kind: str  # "km" or "cox"
    jump_times: np.ndarray
    surv_values: np.ndarray = field(default=None)
    rho: np.ndarray = field(default=None)
    cum_hazard: np.ndarray = field(default=None)
    floor: float = DEFAULT_FLOOR


def _km_curve(times: np.ndarray, events: np.ndarray):
    """Product-limit estimate over event times; ties: events before censorings."""
    order = np.argsort(times, kind="stable")
    t, e = times[order], events[order]
    n = len(t)
    jump_times, surv = [], []
    s = 1.0
    i = 0
    while i < n:
        ti = t[i]
        k = i
        d = 0
        while k < n and t[k] == ti:
            d += int(e[k])
            k += 1
        at_risk = n - i
        if d > 0:
            s *= 1.0 - d / at_risk
            jump_times.append(ti)
            surv.append(s)
        i = k
    return np.array(jump_times), np.array(surv)


def fit_km_censoring(arm: Dataset, j: int, floor: float = DEFAULT_FLOOR) -> CensoringModel:
    """Kaplan-Meier estimate of the censoring survival for outcome ``j``."""
    if j not in (1, 2):
        raise ValueError("outcome index must be 1 or 2")
    delta = arm.delta(j)
    if not delta.any():
        raise DegenerateFitError(f"outcome {j}: every observation is censored")
    logt = np.log(arm.y(j))
    jump_times, surv = _km_curve(logt, 1 - delta)
    return CensoringModel(kind="km", jump_times=jump_times, surv_values=surv, floor=floor)


def _cox_partial_fit(times, events, x, max_iter=50, tol=1e-9):
    """Newton-Raphson on the Cox partial likelihood, Breslow tie handling."""
    n, p = x.shape
    order = np.argsort(times, kind="stable")
    t, e, xs = times[order], events[order], x[order]
    rho = np.zeros(p)
    for _ in range(max_iter):
        eta = xs @ rho
        w = np.exp(eta)
        # Risk-set sums accumulated from the largest time downwards.
        s0 = np.cumsum(w[::-1])[::-1]
        s1 = np.cumsum((w[:, None] * xs)[::-1], axis=0)[::-1]
        # Collapse ties: risk-set quantities taken at the first index of each tie group.
        first = np.r_[True, t[1:] != t[:-1]]
        group = np.cumsum(first) - 1
        s0g = s0[first][group]
        s1g = s1[first][group]
        xbar = s1g / s0g[:, None]
        grad = ((xs - xbar) * e[:, None]).sum(axis=0)
        diff = xs[:, :, None] * xs[:, None, :]
        s2 = np.cumsum((w[:, None, None] * diff)[::-1], axis=0)[::-1]
        s2g = s2[first][group]
        info = (
            e[:, None, None]
            * (s2g / s0g[:, None, None] - xbar[:, :, None] * xbar[:, None, :])
        ).sum(axis=0)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise CensoringError("singular information matrix in Cox fit") from None
        rho_new = rho + step
        if not np.all(np.isfinite(rho_new)) or np.abs(rho_new).max() > 1e3:
            raise ConvergenceError("Cox Newton-Raphson diverged")
        if np.abs(step).max() < tol:
            rho = rho_new
            break
        rho = rho_new
    else:
        raise ConvergenceError("Cox Newton-Raphson failed to converge")
    # Breslow baseline cumulative hazard at distinct event times.
    eta = xs @ rho
    w = np.exp(eta)
    s0 = np.cumsum(w[::-1])[::-1]
    first = np.r_[True, t[1:] != t[:-1]]
    group = np.cumsum(first) - 1
    s0g = s0[first][group]
    n_groups = group[-1] + 1
    d = np.bincount(group, weights=e, minlength=n_groups)
    denom = s0[first]
    hazard_steps = d / denom
    cum = np.cumsum(hazard_steps)
    jump_times = t[first]
    keep = d > 0
    return rho, jump_times[keep], cum[keep]


def fit_cox_censoring(
    arm: Dataset, j: int, floor: float = DEFAULT_FLOOR, max_iter=50
) -> CensoringModel:
    """Cox proportional-hazards model for the censoring time of outcome ``j``."""
    if arm.n < arm.p + 2:
        raise CensoringError(f"need at least p+2={arm.p + 2} observations, got {arm.n}")
    delta = arm.delta(j)
    if delta.all():
        # No censoring events: hazard identically zero.
        return CensoringModel(
            kind="cox",
            jump_times=np.array([]),
            rho=np.zeros(arm.p),
            cum_hazard=np.array([]),
            floor=floor,
        )
    logt = np.log(arm.y(j))
    rho, jump_times, cum_hazard = _cox_partial_fit(
        logt, (1 - delta).astype(float), arm.x, max_iter=max_iter
    )
    return CensoringModel(
        kind="cox", jump_times=jump_times, rho=rho, cum_hazard=cum_hazard, floor=floor
    )


def eval_G(m: CensoringModel, t, x=None):
    """Censoring-survival value(s) at natural-scale time(s) ``t``, in [floor, 1].

    KM ignores ``x``. Accepts scalars or arrays; for the Cox kind with a
    batch of times, ``x`` must be the matching covariate matrix.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("time must be positive")
    logt = np.log(t)
    if m.kind == "km":
        if len(m.jump_times) == 0:
            g = np.ones_like(logt)
        else:
            idx = np.searchsorted(m.jump_times, logt, side="right")
            g = np.where(idx == 0, 1.0, m.surv_values[np.minimum(idx, len(m.surv_values)) - 1])
    elif m.kind == "cox":
        if len(m.jump_times) == 0:
            g = np.ones_like(logt)
        else:
            idx = np.searchsorted(m.jump_times, logt, side="right")
            lam0 = np.where(idx == 0, 0.0, m.cum_hazard[np.minimum(idx, len(m.cum_hazard)) - 1])
            xb = np.asarray(x, dtype=float) @ m.rho
            g = np.exp(-lam0 * np.exp(xb))
    else:
        raise ValueError(f"unknown censoring model kind {m.kind!r}")
    return np.clip(g, m.floor, 1.0) if g.ndim else float(np.clip(g, m.floor, 1.0))


def ipcw_weights(m: CensoringModel, arm: Dataset, j: int) -> np.ndarray:
    """delta_j / G(y_j, x) with censored rows getting exactly zero weight."""
    g = eval_G(m, arm.y(j), arm.x)
    return arm.delta(j) / np.asarray(g)
