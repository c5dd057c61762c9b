"""Linear panel regression with absorbed fixed effects and clustered errors.

Fixed effects are absorbed by iterative demeaning rather than dummy
expansion, so designs with thousands of groups stay small. Standard
errors are cluster-robust (one-way) when a cluster column is given and
HC1 otherwise.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .errors import RankDeficiencyError, SingleClusterError, ZeroVarianceError

DEMEAN_TOL = 1e-10
DEMEAN_MAX_ITER = 10_000


@dataclass
class Design:
    outcome: str
    regressors: list[str]
    fixed_effects: list[str] = field(default_factory=list)
    cluster: Optional[str] = None


@dataclass
class FitResult:
    params: dict[str, float]
    std_errors: dict[str, float]
    t_stats: dict[str, float]
    n_obs: int
    n_clusters: Optional[int]
    r_squared: float
    adj_r_squared: float
    df_model: int  # regressors plus absorbed fixed-effect levels
    design: Design

    def summary_frame(self) -> pd.DataFrame:
        rows = [
            {"term": name, "coef": self.params[name],
             "se": self.std_errors[name], "t": self.t_stats[name]}
            for name in self.params
        ]
        return pd.DataFrame(rows)


def _check_variance(data: pd.DataFrame, columns: list[str]) -> None:
    flat = [c for c in columns if data[c].nunique() <= 1]
    if flat:
        raise ZeroVarianceError(f"zero-variance columns: {', '.join(flat)}")


def demean(values: np.ndarray, groups: list[np.ndarray]) -> np.ndarray:
    """Alternating within-group demeaning until max change < DEMEAN_TOL."""
    out = values.astype(float).copy()
    if not groups:
        return out - out.mean(axis=0)
    for _ in range(DEMEAN_MAX_ITER):
        max_change = 0.0
        for g in groups:
            means = np.zeros((g.max() + 1, out.shape[1]))
            counts = np.bincount(g).astype(float)
            for j in range(out.shape[1]):
                means[:, j] = np.bincount(g, weights=out[:, j]) / counts
            adjusted = out - means[g]
            max_change = max(max_change, float(np.abs(adjusted - out).max()))
            out = adjusted
        if max_change < DEMEAN_TOL:
            break
    return out


def _absorbed_df(groups: list[np.ndarray]) -> int:
    if not groups:
        return 0
    levels = sum(int(g.max()) + 1 for g in groups)
    return levels - (len(groups) - 1)


def fit(data: pd.DataFrame, design: Design) -> FitResult:
    cols = [design.outcome] + design.regressors + design.fixed_effects
    if design.cluster:
        cols.append(design.cluster)
    cols = list(dict.fromkeys(cols))
    frame = data[cols].dropna().reset_index(drop=True)
    n = len(frame)
    if n == 0:
        raise ZeroVarianceError("no complete observations")
    _check_variance(frame, [design.outcome] + design.regressors)

    groups = [
        pd.factorize(frame[fe])[0].astype(np.int64) for fe in design.fixed_effects
    ]

    y_raw = frame[design.outcome].to_numpy(float).reshape(-1, 1)
    x_raw = frame[design.regressors].to_numpy(float)
    stacked = demean(np.hstack([y_raw, x_raw]), groups)
    y = stacked[:, 0]
    x = stacked[:, 1:]

    if not design.fixed_effects:
        x = np.hstack([np.ones((n, 1)), frame[design.regressors].to_numpy(float)])
        y = frame[design.outcome].to_numpy(float)
        names = ["const"] + list(design.regressors)
    else:
        names = list(design.regressors)

    rank = np.linalg.matrix_rank(x)
    if rank < x.shape[1]:
        # Name the offending columns: those whose removal restores full rank.
        bad = []
        for j, name in enumerate(names):
            reduced = np.delete(x, j, axis=1)
            if reduced.shape[1] == 0 or np.linalg.matrix_rank(reduced) == rank:
                bad.append(name)
        raise RankDeficiencyError(bad or list(names))

    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ beta

    k = x.shape[1] + _absorbed_df(groups)
    if k >= n:
        raise ZeroVarianceError("more parameters than observations")

    xtx_inv = np.linalg.inv(x.T @ x)
    n_clusters = None
    if design.cluster:
        cluster_ids = pd.factorize(frame[design.cluster])[0]
        n_clusters = int(cluster_ids.max()) + 1
        if n_clusters < 2:
            raise SingleClusterError(
                f"cluster column {design.cluster!r} has a single level"
            )
        meat = np.zeros((x.shape[1], x.shape[1]))
        for g in range(n_clusters):
            mask = cluster_ids == g
            score = x[mask].T @ resid[mask]
            meat += np.outer(score, score)
        factor = (n_clusters / (n_clusters - 1)) * ((n - 1) / (n - k))
        cov = factor * xtx_inv @ meat @ xtx_inv
    else:
        meat = (x * (resid ** 2)[:, None]).T @ x
        cov = (n / (n - k)) * xtx_inv @ meat @ xtx_inv

    se = np.sqrt(np.diag(cov))
    y_all = frame[design.outcome].to_numpy(float)
    ss_tot = float(((y_all - y_all.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - k) if n > k else float("nan")

    params = dict(zip(names, beta.tolist()))
    std_errors = dict(zip(names, se.tolist()))
    t_stats = {
        name: (params[name] / std_errors[name]) if std_errors[name] > 0 else float("nan")
        for name in names
    }
    return FitResult(
        params=params, std_errors=std_errors, t_stats=t_stats,
        n_obs=n, n_clusters=n_clusters, r_squared=r2, adj_r_squared=adj_r2,
        df_model=k, design=design,
    )


@dataclass
class MeanDifference:
    feature: str
    mean_flagged: float
    mean_unflagged: float
    difference: float
    std_error: float
    t_stat: float
    n_obs: int


def group_mean_difference(
    data: pd.DataFrame,
    feature: str,
    flag: str,
    fixed_effects: list[str] = (),
    cluster: Optional[str] = None,
) -> MeanDifference:
    """FE-controlled mean difference: `feature` regressed on a binary flag."""
    frame = data.dropna(subset=[feature, flag])
    values = set(frame[flag].unique())
    if not values <= {0, 1, True, False}:
        raise ZeroVarianceError(f"flag column {flag!r} is not binary")
    result = fit(frame, Design(
        outcome=feature, regressors=[flag],
        fixed_effects=list(fixed_effects), cluster=cluster,
    ))
    return MeanDifference(
        feature=feature,
        mean_flagged=float(frame.loc[frame[flag] == 1, feature].mean()),
        mean_unflagged=float(frame.loc[frame[flag] == 0, feature].mean()),
        difference=result.params[flag],
        std_error=result.std_errors[flag],
        t_stat=result.t_stats[flag],
        n_obs=result.n_obs,
    )
