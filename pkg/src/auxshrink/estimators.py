"""Comparison estimators: auxiliary screening, the two oracles, and a
positive-part James-Stein baseline.

The screening estimator zeroes every coordinate whose auxiliary magnitude
falls below a cutoff and soft-thresholds the rest; cutoff and surviving
threshold are tuned jointly by SURE. The oracles require the simulation-only
fields of the batch (ground truth, latent side information) and minimize
realized loss instead of SURE.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import (
    DataBatch,
    FitResult,
    HyperParams,
    apply_estimator,
    loss,
    soft_estimate,
    sure,
    universal_threshold,
)
from .tuner import SearchConfig, tau_grid, threshold_candidates

__all__ = [
    "fit_auxscr",
    "fit_oracle_loss",
    "fit_oracle_side",
    "fit_ejs",
]


def _prefix(x: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(x)])


def fit_auxscr(batch: DataBatch, mn_factor: float = 50.0) -> FitResult:
    """Screening baseline: zero out small-|S| coordinates, threshold the rest.

    Group 1 collects coordinates with |S_i| <= tau and is forced to zero by
    setting its threshold to the group's largest standardized magnitude;
    group 2 gets a pure SURE-fitted threshold. The cutoff tau is searched
    over the interior grid on |S| extended by 0 (screen nothing) and
    max |S| (screen everything), minimizing the same SURE criterion.
    """
    abs_s = np.abs(batch.s)
    grid = tau_grid(abs_s, mn_factor)
    tau_cands = np.unique(np.concatenate([[0.0], grid, [float(abs_s.max())]]))

    n = batch.n
    t_n = universal_threshold(n)
    z = np.abs(batch.y) / batch.sigma
    order = np.argsort(z, kind="stable")
    zs = z[order]
    s2s = batch.sigma[order] ** 2
    aux = abs_s[order]
    s2_total = float(s2s.sum())

    best = None
    for tau in tau_cands:
        mask1 = aux <= tau
        n1 = int(mask1.sum())
        n2 = n - n1
        if n1:
            z1 = zs[mask1]
            s21 = s2s[mask1]
            t1 = float(z1[-1])
            # every group-1 magnitude is <= t1, so the term simplifies
            g1 = float((s21 * z1**2).sum() - 2.0 * s21.sum())
        else:
            t1, g1 = 0.0, 0.0
        if n2:
            z2 = zs[~mask1]
            s22 = s2s[~mask1]
            cands = threshold_candidates(z2, t_n)
            p0 = _prefix(s22)
            p2 = _prefix(s22 * z2**2)
            j = np.searchsorted(z2, cands, side="right")
            vals = cands**2 * (p0[-1] - p0[j]) + p2[j] - 2.0 * p0[j]
            i = int(np.argmin(vals))
            t2, g2 = float(cands[i]), float(vals[i])
        else:
            t2, g2 = 0.0, 0.0
        val = (s2_total + g1 + g2) / n
        if best is None or val < best[0]:
            best = (val, float(tau), t1, t2, n1, n2)

    _, tau_star, t1, t2, n1, n2 = best
    screened = abs_s <= tau_star
    t_per = np.where(screened, t1, t2)
    theta_hat = soft_estimate(batch.y, batch.sigma, t_per)
    theta_hat = np.where(screened, 0.0, theta_hat)

    s2 = batch.sigma**2
    zz = np.abs(batch.y) / batch.sigma
    inner = s2 * np.minimum(zz, t_per) ** 2 - 2.0 * s2 * (zz <= t_per)
    sure_value = float((s2.sum() + inner.sum()) / n)

    return FitResult(
        theta_hat=theta_hat,
        hp=HyperParams(tau=np.array([tau_star]), t=np.array([t1, t2])),
        group_sizes=np.array([n1, n2]),
        sure_value=sure_value,
        loss_value=loss(batch.theta, theta_hat) if batch.theta is not None else None,
        estimator_name="aux-scr",
    )


def _min_loss_threshold(
    zs: np.ndarray,
    q2s: np.ndarray,
    ses: np.ndarray,
    scs: np.ndarray,
    s2s: np.ndarray,
    t_n: float,
) -> tuple[float, float]:
    """Threshold minimizing the realized group loss over [0, t_n].

    Arrays follow the group's z-ascending order: q2s = theta^2,
    ses = (y-theta)^2, scs = sigma*sign(y)*(y-theta), s2s = sigma^2. Unlike
    the SURE objective the loss is quadratic (not monotone) between order
    statistics, so each segment's interior vertex joins the candidate set.
    """
    cands = threshold_candidates(zs, t_n)
    pq = _prefix(q2s)
    pse = _prefix(ses)
    psc = _prefix(scs)
    ps2 = _prefix(s2s)
    j = np.searchsorted(zs, cands, side="right")
    suf_se = pse[-1] - pse[j]
    suf_sc = psc[-1] - psc[j]
    suf_s2 = ps2[-1] - ps2[j]
    vals = pq[j] + suf_se - 2.0 * cands * suf_sc + cands**2 * suf_s2

    upper = np.append(cands[1:], t_n)
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(suf_s2 > 0, suf_sc / np.where(suf_s2 > 0, suf_s2, 1.0), np.nan)
    ok = (suf_s2 > 0) & (vertex > cands) & (vertex < upper)
    v = vertex[ok]
    vvals = pq[j][ok] + suf_se[ok] - 2.0 * v * suf_sc[ok] + v**2 * suf_s2[ok]

    points = np.concatenate([cands, v])
    values = np.concatenate([vals, vvals])
    srt = np.argsort(points, kind="stable")
    points = points[srt]
    values = values[srt]
    i = int(np.argmin(values))
    return float(points[i]), float(values[i])


class _LossContext:
    """Loss-objective analogue of the tuner's search context."""

    def __init__(self, batch: DataBatch):
        if batch.theta is None:
            raise ValueError("oracle fits require batch.theta")
        self.n = batch.n
        self.t_n = universal_threshold(batch.n)
        z = np.abs(batch.y) / batch.sigma
        order = np.argsort(z, kind="stable")
        self.zs = z[order]
        theta = batch.theta[order]
        y = batch.y[order]
        sigma = batch.sigma[order]
        self.q2s = theta**2
        err = y - theta
        self.ses = err**2
        self.scs = sigma * np.sign(y) * err
        self.s2s = sigma**2


def _eval_loss_groups(
    ctx: _LossContext, assign: np.ndarray, k: int, exclude_empty: bool
) -> tuple[float, np.ndarray, np.ndarray] | None:
    sizes = np.bincount(assign, minlength=k)
    if exclude_empty and sizes.min() == 0:
        return None
    total = 0.0
    ts = np.empty(k)
    for g in range(k):
        if sizes[g] == 0:
            ts[g] = 0.0
            continue
        mask = assign == g
        t_g, val = _min_loss_threshold(
            ctx.zs[mask], ctx.q2s[mask], ctx.ses[mask], ctx.scs[mask],
            ctx.s2s[mask], ctx.t_n,
        )
        ts[g] = t_g
        total += val
    return total / ctx.n, ts, sizes


def fit_oracle_loss(batch: DataBatch, cfg: SearchConfig | None = None) -> FitResult:
    """Best hyperparameters in hindsight: same search space as fit_asus,
    realized loss as the objective. Requires batch.theta."""
    if batch.theta is None:
        raise ValueError("fit_oracle_loss requires batch.theta")
    if cfg is None:
        cfg = SearchConfig()
    ctx = _LossContext(batch)
    aux_sorted = batch.s[np.argsort(np.abs(batch.y) / batch.sigma, kind="stable")]

    best = None
    if cfg.k == 1:
        res = _eval_loss_groups(ctx, np.zeros(batch.n, dtype=np.intp), 1, False)
        best = (res[0], np.empty(0), res[1], res[2])
    else:
        grid = tau_grid(batch.s, cfg.mn_factor)
        for combo in itertools.combinations(range(grid.size), cfg.k - 1):
            tau_vec = grid[list(combo)]
            assign = np.searchsorted(tau_vec, aux_sorted, side="left")
            res = _eval_loss_groups(ctx, assign, cfg.k, cfg.exclude_empty_groups)
            if res is None:
                continue
            val, ts, sizes = res
            if best is None or val < best[0]:
                best = (val, tau_vec, ts, sizes)
        if best is None:
            raise ValueError(f"no feasible breakpoint candidate for K={cfg.k}")

    loss_val, tau_best, ts_best, sizes_best = best
    hp = HyperParams(tau=np.asarray(tau_best, dtype=float), t=ts_best)
    theta_hat = apply_estimator(batch, hp)
    return FitResult(
        theta_hat=theta_hat,
        hp=hp,
        group_sizes=sizes_best,
        sure_value=sure(batch, hp),
        loss_value=loss(batch.theta, theta_hat),
        estimator_name="oracle-loss",
    )


def xi_split_candidates(xi: np.ndarray, cap: int | None = None) -> np.ndarray:
    """Split points for grouping on the latent sequence: midpoints between
    consecutive distinct values. Optionally thinned to at most ``cap``
    candidates, always keeping the outermost gaps."""
    uniq = np.unique(xi)
    if uniq.size < 2:
        return uniq.astype(float)
    mids = 0.5 * (uniq[:-1] + uniq[1:])
    if cap is not None and mids.size > cap:
        idx = np.unique(np.linspace(0, mids.size - 1, cap).round().astype(int))
        idx = np.unique(np.concatenate([[0, mids.size - 1], idx]))
        mids = mids[idx]
    return mids


def fit_oracle_side(batch: DataBatch) -> FitResult:
    """Two groups split on the latent (noiseless) side information, with
    loss-minimizing thresholds per group. Requires batch.theta and batch.xi.

    The split point ranges over midpoints of consecutive distinct latent
    values; this is exhaustive for threshold-on-xi partitions.
    """
    if batch.theta is None or batch.xi is None:
        raise ValueError("fit_oracle_side requires batch.theta and batch.xi")
    ctx = _LossContext(batch)
    xi_sorted = batch.xi[np.argsort(np.abs(batch.y) / batch.sigma, kind="stable")]
    cands = xi_split_candidates(batch.xi)

    best = None
    for tau in cands:
        assign = (xi_sorted > tau).astype(np.intp)
        res = _eval_loss_groups(ctx, assign, 2, False)
        val, ts, sizes = res
        if best is None or val < best[0]:
            best = (val, float(tau), ts, sizes)

    loss_val, tau_star, ts_best, sizes_best = best
    t_per = np.where(batch.xi <= tau_star, ts_best[0], ts_best[1])
    theta_hat = soft_estimate(batch.y, batch.sigma, t_per)
    return FitResult(
        theta_hat=theta_hat,
        hp=HyperParams(tau=np.array([tau_star]), t=ts_best),
        group_sizes=sizes_best,
        sure_value=None,
        loss_value=loss(batch.theta, theta_hat),
        estimator_name="oracle-side",
    )


def fit_ejs(batch: DataBatch) -> FitResult:
    """Positive-part James-Stein shrinkage toward the precision-weighted mean."""
    n = batch.n
    if n < 4:
        raise ValueError("James-Stein shrinkage needs n >= 4")
    y = batch.y
    prec = 1.0 / batch.sigma**2
    y_bar = float((y * prec).sum() / prec.sum())
    disp = float(((y - y_bar) ** 2 * prec).sum())
    if disp == 0.0:
        theta_hat = np.full(n, y_bar)
    else:
        factor = max(0.0, 1.0 - (n - 3) / disp)
        theta_hat = y_bar + factor * (y - y_bar)
    return FitResult(
        theta_hat=theta_hat,
        hp=None,
        group_sizes=np.array([n]),
        sure_value=None,
        loss_value=loss(batch.theta, theta_hat) if batch.theta is not None else None,
        estimator_name="ejs",
    )
