"""Hyperparameter search: breakpoint grids, per-group thresholds, K selection.

The search enumerates sorted (K-1)-subsets of an equi-spaced breakpoint grid
over the auxiliary sequence. For each candidate grouping the per-group
threshold is chosen on the group's order statistics: between consecutive
standardized magnitudes the SURE objective is nondecreasing in t, so its
minimum over [0, t_n] is attained on {0} | {z_i <= t_n} | {t_n}. A hybrid
fallback returns the universal threshold for groups whose empirical second
moment is too close to pure noise for SURE to be trustworthy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DataBatch,
    FitResult,
    HyperParams,
    apply_estimator,
    loss,
    sure,
    universal_threshold,
)

__all__ = [
    "SearchConfig",
    "SweepCurve",
    "KSelection",
    "tau_grid",
    "threshold_candidates",
    "fit_group_threshold",
    "fit_asus",
    "fit_sureshrink",
    "sweep_tau",
    "select_k",
]


@dataclass(frozen=True)
class SearchConfig:
    """Options shared by the grouping searches.

    k                      number of groups
    mn_factor              grid density: m_n = ceil(mn_factor * ln n)
    hybrid                 apply the sparse-regime fallback to t_n per group
    exclude_empty_groups   skip breakpoint candidates that leave a group empty
    hybrid_local_bound     use the group size instead of the global n in the
                           hybrid decision bound (off by default; the bound is
                           n^{-1/2} (ln n)^{3/2} with global n)
    """

    k: int = 2
    mn_factor: float = 50.0
    hybrid: bool = True
    exclude_empty_groups: bool = True
    hybrid_local_bound: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("K must be at least 1")
        if self.mn_factor <= 0:
            raise ValueError("mn_factor must be positive")


@dataclass(frozen=True)
class SweepCurve:
    """Minimized SURE as a function of the single breakpoint (K = 2)."""

    tau_values: np.ndarray
    sure_values: np.ndarray
    t1_values: np.ndarray
    t2_values: np.ndarray


@dataclass(frozen=True)
class KSelection:
    """Outcome of scanning group counts K = 1..k_max."""

    k_selected: int  # argmin of SURE over K (primary rule)
    sure_values: np.ndarray  # SURE per K, index 0 <-> K = 1
    k_elbow: int  # last K whose incremental SURE gain is >= 5%


def tau_grid(s, mn_factor: float = 50.0) -> np.ndarray:
    """Equi-spaced interior breakpoint candidates spanning (min S, max S).

    Returns m_n = ceil(mn_factor * ln n) points; the range endpoints
    themselves are excluded. A constant auxiliary sequence carries no
    ordering information and is rejected.
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    if n < 2:
        raise ValueError("need at least two coordinates to build a grid")
    if mn_factor <= 0:
        raise ValueError("mn_factor must be positive")
    lo = float(s.min())
    hi = float(s.max())
    if lo == hi:
        raise ValueError(
            "auxiliary sequence is degenerate (all values equal); "
            "it induces no grouping"
        )
    m = int(math.ceil(mn_factor * math.log(n)))
    j = np.arange(1, m + 1, dtype=float)
    return lo + j * (hi - lo) / (m + 1)


def threshold_candidates(z, t_n: float) -> np.ndarray:
    """Candidate thresholds for one group: {0} | {z_i <= t_n} | {t_n}, sorted."""
    z = np.asarray(z, dtype=float)
    inside = z[z <= t_n]
    return np.unique(np.concatenate([[0.0], inside, [t_n]]))


def _objective_values(zs: np.ndarray, s2s: np.ndarray, t_values: np.ndarray) -> np.ndarray:
    """Group SURE term sum s2 (z ^ t)^2 - 2 s2 I(z <= t) at each t.

    ``zs`` must be sorted ascending with ``s2s`` aligned.
    """
    p0 = np.concatenate([[0.0], np.cumsum(s2s)])
    p2 = np.concatenate([[0.0], np.cumsum(s2s * zs * zs)])
    j = np.searchsorted(zs, t_values, side="right")
    tail = p0[-1] - p0[j]
    return t_values * t_values * tail + p2[j] - 2.0 * p0[j]


def _min_objective(zs: np.ndarray, s2s: np.ndarray, t_n: float) -> tuple[float, float]:
    """Minimize the group SURE term over the candidate set; smallest t on ties."""
    cands = threshold_candidates(zs, t_n)
    vals = _objective_values(zs, s2s, cands)
    i = int(np.argmin(vals))  # first occurrence == smallest threshold
    return float(cands[i]), float(vals[i])


def _hybrid_fires(
    capped_sum: float, size: int, n_global: int, local_bound: bool
) -> bool:
    stat = capped_sum / size - 1.0
    n_ref = size if local_bound else n_global
    bound = n_ref ** (-0.5) * math.log(n_ref) ** 1.5 if n_ref > 1 else 0.0
    return stat <= bound


def _fit_sorted_group(
    zs: np.ndarray,
    s2s: np.ndarray,
    capped_sum: float,
    n_global: int,
    t_n: float,
    hybrid: bool,
    local_bound: bool,
) -> tuple[float, float]:
    """Threshold and SURE term for one nonempty group (zs sorted ascending)."""
    if hybrid and _hybrid_fires(capped_sum, zs.size, n_global, local_bound):
        val = _objective_values(zs, s2s, np.array([t_n]))[0]
        return t_n, float(val)
    return _min_objective(zs, s2s, t_n)


def fit_group_threshold(z, sigma, n_global: int, hybrid: bool = True,
                        hybrid_local_bound: bool = False) -> float:
    """Threshold for a single group of standardized magnitudes ``z``.

    Applies the hybrid rule first: if the group's average of (z^2 ^ t_n^2)
    exceeds 1 by no more than n^{-1/2} (ln n)^{3/2}, the group looks like
    pure noise and the universal threshold is returned. Otherwise the SURE
    objective is minimized over the group's candidate set, smallest
    threshold winning ties.
    """
    z = np.asarray(z, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if z.size == 0:
        raise ValueError("group is empty")
    if z.shape != sigma.shape:
        raise ValueError("z and sigma must have equal length")
    order = np.argsort(z, kind="stable")
    zs = z[order]
    s2s = sigma[order] ** 2
    t_n = universal_threshold(n_global)
    capped_sum = float(np.minimum(zs * zs, t_n * t_n).sum())
    t, _ = _fit_sorted_group(zs, s2s, capped_sum, n_global, t_n, hybrid,
                             hybrid_local_bound)
    return t


class _SearchContext:
    """Batch pre-sorted by standardized magnitude, shared across candidates."""

    def __init__(self, batch: DataBatch):
        self.n = batch.n
        self.t_n = universal_threshold(batch.n)
        z = np.abs(batch.y) / batch.sigma
        order = np.argsort(z, kind="stable")
        self.zs = z[order]
        self.s2s = batch.sigma[order] ** 2
        self.aux = batch.s[order]
        self.capped = np.minimum(self.zs**2, self.t_n**2)
        self.s2_total = float(self.s2s.sum())


def _eval_tau_candidate(
    ctx: _SearchContext, tau_vec: np.ndarray, cfg: SearchConfig
) -> Optional[tuple[float, np.ndarray, np.ndarray]]:
    """Fit per-group thresholds for one breakpoint vector.

    Returns (sure_value, thresholds, sizes) or None when the candidate is
    skipped for creating an empty group.
    """
    k = tau_vec.size + 1
    assign = np.searchsorted(tau_vec, ctx.aux, side="left")
    sizes = np.bincount(assign, minlength=k)
    if cfg.exclude_empty_groups and sizes.min() == 0:
        return None
    total = ctx.s2_total
    ts = np.empty(k)
    for g in range(k):
        if sizes[g] == 0:
            # estimator value is irrelevant on an empty group
            ts[g] = ctx.t_n if cfg.hybrid else 0.0
            continue
        mask = assign == g
        zs_g = ctx.zs[mask]
        s2_g = ctx.s2s[mask]
        capped_sum = float(ctx.capped[mask].sum())
        t_g, val = _fit_sorted_group(
            zs_g, s2_g, capped_sum, ctx.n, ctx.t_n, cfg.hybrid,
            cfg.hybrid_local_bound,
        )
        ts[g] = t_g
        total += val
    return total / ctx.n, ts, sizes


def _single_group_fit(batch: DataBatch, cfg: SearchConfig, name: str) -> FitResult:
    t = fit_group_threshold(
        np.abs(batch.y) / batch.sigma,
        batch.sigma,
        batch.n,
        hybrid=cfg.hybrid,
        hybrid_local_bound=cfg.hybrid_local_bound,
    )
    hp = HyperParams(tau=np.empty(0), t=np.array([t]))
    theta_hat = apply_estimator(batch, hp)
    return FitResult(
        theta_hat=theta_hat,
        hp=hp,
        group_sizes=np.array([batch.n]),
        sure_value=sure(batch, hp),
        loss_value=loss(batch.theta, theta_hat) if batch.theta is not None else None,
        estimator_name=name,
    )


def fit_sureshrink(batch: DataBatch, hybrid: bool = True) -> FitResult:
    """Single-group fit: one SURE-tuned threshold with the hybrid fallback."""
    cfg = SearchConfig(k=1, hybrid=hybrid)
    return _single_group_fit(batch, cfg, "sureshrink")


def fit_asus(batch: DataBatch, cfg: SearchConfig | None = None) -> FitResult:
    """Full grouped fit: search breakpoints x per-group thresholds by SURE.

    Enumerates every sorted (K-1)-subset of the breakpoint grid, fits the
    group thresholds for each, and returns the SURE minimizer. Candidate
    order is lexicographic in tau and strict improvement is required to
    replace the incumbent, so ties resolve to the lexicographically
    smallest hyperparameters.
    """
    if cfg is None:
        cfg = SearchConfig()
    if cfg.k == 1:
        return _single_group_fit(batch, cfg, "asus")

    grid = tau_grid(batch.s, cfg.mn_factor)
    ctx = _SearchContext(batch)
    best: Optional[tuple[float, np.ndarray, np.ndarray, np.ndarray]] = None
    for combo in itertools.combinations(range(grid.size), cfg.k - 1):
        tau_vec = grid[list(combo)]
        res = _eval_tau_candidate(ctx, tau_vec, cfg)
        if res is None:
            continue
        val, ts, sizes = res
        if best is None or val < best[0]:
            best = (val, tau_vec, ts, sizes)
    if best is None:
        raise ValueError(
            f"no feasible breakpoint candidate for K={cfg.k}; "
            "the auxiliary sequence cannot support that many nonempty groups"
        )
    _, tau_best, ts_best, sizes_best = best
    hp = HyperParams(tau=tau_best, t=ts_best)
    theta_hat = apply_estimator(batch, hp)
    return FitResult(
        theta_hat=theta_hat,
        hp=hp,
        group_sizes=sizes_best,
        sure_value=sure(batch, hp),
        loss_value=loss(batch.theta, theta_hat) if batch.theta is not None else None,
        estimator_name="asus",
    )


def sweep_tau(batch: DataBatch, cfg: SearchConfig | None = None) -> SweepCurve:
    """Minimized SURE at every grid breakpoint (K = 2 only).

    The curve's global minimum coincides with fit_asus(K=2) because both
    scan the same candidates. Breakpoints skipped for creating an empty
    group are omitted from the curve.
    """
    if cfg is None:
        cfg = SearchConfig(k=2)
    if cfg.k != 2:
        raise ValueError("sweep_tau is defined for K = 2")
    grid = tau_grid(batch.s, cfg.mn_factor)
    ctx = _SearchContext(batch)
    taus, sures, t1s, t2s = [], [], [], []
    for tau in grid:
        res = _eval_tau_candidate(ctx, np.array([tau]), cfg)
        if res is None:
            continue
        _, ts, _ = res
        hp = HyperParams(tau=np.array([tau]), t=ts)
        taus.append(tau)
        sures.append(sure(batch, hp))
        t1s.append(ts[0])
        t2s.append(ts[1])
    if not taus:
        raise ValueError("no feasible breakpoint candidate for K=2")
    return SweepCurve(
        tau_values=np.array(taus),
        sure_values=np.array(sures),
        t1_values=np.array(t1s),
        t2_values=np.array(t2s),
    )


def select_k(
    batch: DataBatch,
    k_max: int,
    mn_factor: float = 50.0,
    hybrid: bool = True,
) -> KSelection:
    """Fit K = 1..k_max and report the SURE-minimizing K.

    The primary rule is the SURE argmin. An elbow heuristic is reported
    alongside: the last K whose SURE improvement over K-1 is at least 5%
    relative. Beware the combinatorial cost of large K on dense grids.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    sures = []
    for k in range(1, k_max + 1):
        cfg = SearchConfig(k=k, mn_factor=mn_factor, hybrid=hybrid)
        sures.append(fit_asus(batch, cfg).sure_value)
    sures = np.array(sures)
    k_selected = int(np.argmin(sures)) + 1
    k_elbow = 1
    for k in range(2, k_max + 1):
        prev, cur = sures[k - 2], sures[k - 1]
        denom = abs(prev) if prev != 0 else 1.0
        if (prev - cur) / denom >= 0.05:
            k_elbow = k
        else:
            break
    return KSelection(k_selected=k_selected, sure_values=sures, k_elbow=k_elbow)
