"""Scenario generators and the Monte Carlo risk harness.

Families
--------
one-sample-s1 / one-sample-s2
    Sparse latent blocks observed through unit-variance noise; the auxiliary
    sequence is the latent plus averaged secondary noise, in four variants of
    increasing corruption (Laplace mean noise, chi-square mean noise, and two
    sign-perturbed versions with heavy-tailed contamination of the nulls).
two-sample-s1 / two-sample-s2
    Difference-of-means setting: Y_i = U_i - V_i with the auxiliary sequence
    |U_i + kappa_i V_i|, kappa_i = sigma_{i,1}/sigma_{i,2}. s1 has unit
    variances, s2 draws each variance from Unif(0.1, 1).
asymptotic-s1 / asymptotic-s2
    Percentage-sized sparsity blocks with conditionally Gaussian (s1) or
    chi-square (s2) auxiliary sequences whose group separation is controlled
    by log-scale constants; two separation variants each.
toy
    The two-sample illustrative example: 40% signal coordinates in two
    uniform blocks, sigma_i = sqrt(0.5), auxiliary |Ybar_1 + Ybar_2|; the
    latent field carries the signal/null labels.

All generators are deterministic functions of ScenarioSpec.seed. The
harness fits each requested estimator once per replication; the side
oracle row instead minimizes the replication-averaged loss over a common
(split, threshold) grid, approximating the population risk minimizer.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DataBatch, universal_threshold
from .estimators import (
    _LossContext,
    fit_auxscr,
    fit_ejs,
    fit_oracle_loss,
    xi_split_candidates,
)
from .tuner import SearchConfig, fit_asus, fit_sureshrink

__all__ = [
    "FAMILIES",
    "ScenarioSpec",
    "EstimatorRisk",
    "RiskReport",
    "generate",
    "gen_one_sample",
    "gen_two_sample",
    "gen_asymptotic",
    "gen_toy",
    "run_risk_experiment",
]

FAMILIES = (
    "one-sample-s1",
    "one-sample-s2",
    "two-sample-s1",
    "two-sample-s2",
    "asymptotic-s1",
    "asymptotic-s2",
    "toy",
)


@dataclass(frozen=True)
class ScenarioSpec:
    """Which experiment to generate, at what size, from which seed."""

    family: str
    n: int
    m: Optional[int] = None  # auxiliary sample count (one-sample/asymptotic)
    aux_variant: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown scenario family {self.family!r}")
        if self.n < 1:
            raise ValueError("n must be positive")


def _sparse_eta1(rng: np.random.Generator, n: int) -> np.ndarray:
    """Rare N(2, 0.01) perturbations hitting each coordinate w.p. n^{-1/2}."""
    mask = rng.random(n) < n ** (-0.5)
    vals = rng.normal(2.0, 0.1, n)
    return np.where(mask, vals, 0.0)


def gen_one_sample(spec: ScenarioSpec) -> DataBatch:
    if spec.family not in ("one-sample-s1", "one-sample-s2"):
        raise ValueError(f"not a one-sample family: {spec.family}")
    m = spec.m
    if m is None or m < 10:
        raise ValueError("one-sample scenarios need m >= 10")
    variant = spec.aux_variant
    if variant not in (1, 2, 3, 4):
        raise ValueError("aux_variant must be 1..4")
    n = spec.n
    if spec.family == "one-sample-s1":
        sizes = (50, 200)
        ranges = ((6.0, 7.0), (2.0, 3.0))
    else:
        sizes = (200, 800)
        ranges = ((4.0, 8.0), (1.0, 3.0))
    if n <= sum(sizes):
        raise ValueError(f"n must exceed {sum(sizes)} for {spec.family}")

    rng = np.random.default_rng(spec.seed)
    xi = np.concatenate(
        [
            rng.uniform(*ranges[0], sizes[0]),
            rng.uniform(*ranges[1], sizes[1]),
            np.zeros(n - sum(sizes)),
        ]
    )
    theta = xi + _sparse_eta1(rng, n)
    y = theta + rng.standard_normal(n)
    sigma = np.ones(n)

    if variant in (1, 3):
        eta2_bar = rng.laplace(0.0, 4.0, (m, n)).mean(axis=0)
    else:
        eta2_bar = rng.chisquare(10.0, (m, n)).mean(axis=0)

    if variant in (1, 2):
        s = np.abs(xi + eta2_bar)
    elif variant == 3:
        contaminated = rng.lognormal(0.0, 5.0 / math.sqrt(m), n)
        xi_tilde = np.where(xi != 0.0, xi, contaminated)
        rho = rng.integers(0, 2, n) * 2.0 - 1.0
        s = np.abs(xi_tilde + rho * eta2_bar)
    else:
        df = max(1, round(2 * m / 10))
        contaminated = rng.standard_t(df, n)
        xi_tilde = np.where(xi != 0.0, xi, contaminated)
        rho = np.where(rng.random(n) < 0.75, 1.0, -1.0)
        s = np.abs(xi_tilde - rho * eta2_bar)

    return DataBatch(y=y, sigma=sigma, s=s, theta=theta, xi=xi)


def gen_two_sample(spec: ScenarioSpec) -> DataBatch:
    if spec.family not in ("two-sample-s1", "two-sample-s2"):
        raise ValueError(f"not a two-sample family: {spec.family}")
    n = spec.n
    if n < 2:
        raise ValueError("two-sample scenarios need n >= 2")
    rng = np.random.default_rng(spec.seed)
    p1 = n ** (-0.6)
    p2 = n ** (-0.3)
    xi1 = np.where(rng.random(n) < p1, rng.uniform(3.0, 7.0, n), 0.0)
    xi2 = np.where(rng.random(n) < p2, 4.0, 0.0)
    mu1 = xi1 + rng.normal(0.0, 0.1, n)
    mu2 = xi2 + rng.normal(0.0, 0.1, n)
    if spec.family == "two-sample-s1":
        var1 = np.ones(n)
        var2 = np.ones(n)
    else:
        var1 = rng.uniform(0.1, 1.0, n)
        var2 = rng.uniform(0.1, 1.0, n)
    u = mu1 + np.sqrt(var1) * rng.standard_normal(n)
    v = mu2 + np.sqrt(var2) * rng.standard_normal(n)
    kappa = np.sqrt(var1 / var2)
    y = u - v
    sigma = np.sqrt(var1 + var2)
    s = np.abs(u + kappa * v)
    theta = mu1 - mu2
    # latent for the side oracle: the noiseless value behind S (E[U + kappa V]
    # up to the mean perturbations), which cleanly separates the union support
    xi = xi1 + kappa * xi2
    return DataBatch(y=y, sigma=sigma, s=s, theta=theta, xi=xi)


def gen_asymptotic(spec: ScenarioSpec) -> DataBatch:
    if spec.family not in ("asymptotic-s1", "asymptotic-s2"):
        raise ValueError(f"not an asymptotic family: {spec.family}")
    m = 50 if spec.m is None else spec.m
    if m < 1:
        raise ValueError("m must be positive")
    variant = spec.aux_variant
    if variant not in (1, 2):
        raise ValueError("aux_variant must be 1 or 2 for asymptotic scenarios")
    n = spec.n
    k_n = math.log(n)
    rng = np.random.default_rng(spec.seed)

    if spec.family == "asymptotic-s1":
        nb1 = round(0.01 * n)
        nb2 = round(0.04 * n)
        ranges = ((6.0, 7.0), (2.0, 3.0))
    else:
        nb1 = round(0.04 * n)
        nb2 = round(0.16 * n)
        ranges = ((4.0, 8.0), (1.0, 3.0))
    if nb1 < 1 or nb2 < 1 or nb1 + nb2 >= n:
        raise ValueError(f"n={n} too small for {spec.family} block sizes")

    xi = np.concatenate(
        [
            rng.uniform(*ranges[0], nb1),
            rng.uniform(*ranges[1], nb2),
            np.zeros(n - nb1 - nb2),
        ]
    )
    theta = xi + _sparse_eta1(rng, n)
    if spec.family == "asymptotic-s1":
        sigma = np.ones(n)
    else:
        sigma = np.sqrt(rng.uniform(0.1, 1.0, n))
    y = theta + sigma * rng.standard_normal(n)

    null = xi == 0.0
    eta2_bar = rng.normal(0.0, 0.1, (m, n)).mean(axis=0)
    if spec.family == "asymptotic-s1":
        mu0 = math.sqrt(math.log(k_n)) if variant == 1 else math.sqrt(k_n)
        mean_s = np.where(null, mu0, 0.0)
        sigma_s = np.sqrt(rng.uniform(0.1, 1.0, n))
        s = np.abs(rng.normal(mean_s, sigma_s) + eta2_bar)
    else:
        df0 = 1.0 + (math.sqrt(math.log(k_n)) if variant == 1 else k_n)
        df = np.where(null, df0, 1.0)
        s = np.abs(rng.chisquare(df) + eta2_bar)
    return DataBatch(y=y, sigma=sigma, s=s, theta=theta, xi=xi)


def gen_toy(spec: ScenarioSpec) -> DataBatch:
    if spec.family != "toy":
        raise ValueError(f"not the toy family: {spec.family}")
    n = spec.n
    nb = round(0.2 * n)
    if nb < 1 or 2 * nb >= n:
        raise ValueError("toy scenario needs n >= 5")
    rng = np.random.default_rng(spec.seed)
    rest = n - 2 * nb
    mu1 = np.concatenate(
        [rng.uniform(4.0, 6.0, nb), rng.uniform(2.0, 3.0, nb), np.zeros(rest)]
    )
    mu2 = np.concatenate(
        [rng.uniform(1.0, 2.0, nb), rng.uniform(1.0, 6.0, nb), np.zeros(rest)]
    )
    ybar1 = mu1 + 0.5 * rng.standard_normal(n)
    ybar2 = mu2 + 0.5 * rng.standard_normal(n)
    y = ybar1 - ybar2
    sigma = np.full(n, math.sqrt(0.5))
    s = np.abs(ybar1 + ybar2)
    theta = mu1 - mu2
    labels = np.concatenate([np.ones(2 * nb), np.zeros(rest)])
    return DataBatch(y=y, sigma=sigma, s=s, theta=theta, xi=labels)


_GENERATORS = {
    "one-sample-s1": gen_one_sample,
    "one-sample-s2": gen_one_sample,
    "two-sample-s1": gen_two_sample,
    "two-sample-s2": gen_two_sample,
    "asymptotic-s1": gen_asymptotic,
    "asymptotic-s2": gen_asymptotic,
    "toy": gen_toy,
}


def generate(spec: ScenarioSpec) -> DataBatch:
    """Generate one batch for the scenario; deterministic given spec.seed."""
    return _GENERATORS[spec.family](spec)


@dataclass
class EstimatorRisk:
    """Monte Carlo summary for one estimator."""

    name: str
    losses: np.ndarray
    mean_loss: float
    sd_loss: Optional[float]
    se_loss: Optional[float]
    mean_tau: Optional[list]
    mean_t: Optional[list]
    mean_sizes: Optional[list]


@dataclass
class RiskReport:
    spec: ScenarioSpec
    n_reps: int
    results: dict

    def to_dict(self) -> dict:
        out = {
            "scenario": self.spec.family,
            "n": self.spec.n,
            "m": self.spec.m,
            "aux_variant": self.spec.aux_variant,
            "seed": self.spec.seed,
            "reps": self.n_reps,
            "estimators": {},
        }
        for name, r in self.results.items():
            out["estimators"][name] = {
                "risk": r.mean_loss,
                "sd": r.sd_loss,
                "se": r.se_loss,
                "mean_tau": r.mean_tau,
                "mean_t": r.mean_t,
                "mean_sizes": r.mean_sizes,
            }
        return out


def _summarize(name, losses, taus, ts, sizes) -> EstimatorRisk:
    losses = np.asarray(losses, dtype=float)
    n = losses.size
    mean = float(losses.mean())
    if n >= 2:
        sd = float(losses.std(ddof=1))
        se = sd / math.sqrt(n)
    else:
        sd = None
        se = None
    return EstimatorRisk(
        name=name,
        losses=losses,
        mean_loss=mean,
        sd_loss=sd,
        se_loss=se,
        mean_tau=None if taus is None else list(np.mean(taus, axis=0)),
        mean_t=None if ts is None else list(np.mean(ts, axis=0)),
        mean_sizes=None if sizes is None else list(np.mean(sizes, axis=0)),
    )


class _SideOracleAccumulator:
    """Average, across replications, the loss of every (split, t1, t2)
    combination on common grids, then minimize. Groups come from the latent
    sequence: group 1 is xi <= tau."""

    def __init__(self, batch0: DataBatch, tau_cap: int = 65, t_points: int = 513):
        if batch0.xi is None or batch0.theta is None:
            raise ValueError("side oracle needs theta and xi in the batch")
        self.t_n = universal_threshold(batch0.n)
        self.t_grid = np.linspace(0.0, self.t_n, t_points)
        self.tau_cands = xi_split_candidates(batch0.xi, cap=tau_cap)
        if self.tau_cands.size == 0:
            raise ValueError("latent sequence is empty")
        self.acc = np.zeros((self.tau_cands.size, 2, t_points))
        self.n_batches = 0

    def add(self, batch: DataBatch) -> None:
        ctx = _LossContext(batch)
        order = np.argsort(np.abs(batch.y) / batch.sigma, kind="stable")
        xi_z = batch.xi[order]
        for ti, tau in enumerate(self.tau_cands):
            mask = xi_z <= tau
            for g, sel in enumerate((mask, ~mask)):
                if not sel.any():
                    continue
                zs = ctx.zs[sel]
                pq = np.concatenate([[0.0], np.cumsum(ctx.q2s[sel])])
                pse = np.concatenate([[0.0], np.cumsum(ctx.ses[sel])])
                psc = np.concatenate([[0.0], np.cumsum(ctx.scs[sel])])
                ps2 = np.concatenate([[0.0], np.cumsum(ctx.s2s[sel])])
                j = np.searchsorted(zs, self.t_grid, side="right")
                curve = (
                    pq[j]
                    + (pse[-1] - pse[j])
                    - 2.0 * self.t_grid * (psc[-1] - psc[j])
                    + self.t_grid**2 * (ps2[-1] - ps2[j])
                )
                self.acc[ti, g] += curve
        self.n_batches += 1

    def minimize(self) -> tuple[float, float, float]:
        """Return (tau, t1, t2) minimizing the averaged loss."""
        best = None
        for ti, tau in enumerate(self.tau_cands):
            i1 = int(np.argmin(self.acc[ti, 0]))
            i2 = int(np.argmin(self.acc[ti, 1]))
            total = self.acc[ti, 0][i1] + self.acc[ti, 1][i2]
            if best is None or total < best[0]:
                best = (total, float(tau), float(self.t_grid[i1]), float(self.t_grid[i2]))
        return best[1], best[2], best[3]


def _oracle_loss_at(batch: DataBatch, tau: float, t1: float, t2: float):
    """Realized loss and group sizes of the fixed side-oracle rule."""
    from .core import loss as _loss
    from .core import soft_estimate

    mask = batch.xi <= tau
    t_per = np.where(mask, t1, t2)
    theta_hat = soft_estimate(batch.y, batch.sigma, t_per)
    return _loss(batch.theta, theta_hat), np.array([int(mask.sum()), int((~mask).sum())])


_FITTED_ESTIMATORS = ("sureshrink", "asus", "aux-scr", "ejs", "oracle-loss")


def _fit_named(name: str, batch: DataBatch, k: int, mn_factor: float, hybrid: bool):
    if name == "sureshrink":
        return fit_sureshrink(batch, hybrid=hybrid)
    if name == "asus":
        return fit_asus(batch, SearchConfig(k=k, mn_factor=mn_factor, hybrid=hybrid))
    if name == "aux-scr":
        return fit_auxscr(batch, mn_factor=mn_factor)
    if name == "ejs":
        return fit_ejs(batch)
    if name == "oracle-loss":
        return fit_oracle_loss(batch, SearchConfig(k=k, mn_factor=mn_factor))
    raise ValueError(f"unknown estimator {name!r}")


def run_risk_experiment(
    spec: ScenarioSpec,
    estimators: list,
    n_reps: int,
    seed: Optional[int] = None,
    k: int = 2,
    mn_factor: float = 50.0,
    hybrid: bool = True,
    oracle_tau_cap: int = 65,
    oracle_t_points: int = 513,
) -> RiskReport:
    """Replicate the scenario n_reps times and summarize estimator risks.

    ``estimators`` may contain any of "sureshrink", "asus", "aux-scr",
    "ejs", "oracle-loss" (refit per replication) and "oracle" (the side
    oracle, fit once on the replication-averaged loss and then scored per
    replication). Child seeds derive deterministically from ``seed``
    (default spec.seed), so identical inputs give identical reports.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    names = list(estimators)
    for name in names:
        if name != "oracle" and name not in _FITTED_ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}")
    base = spec.seed if seed is None else seed
    child_seeds = [int(s) for s in np.random.SeedSequence(base).generate_state(n_reps, np.uint64)]

    want_oracle = "oracle" in names
    fitted_names = [nm for nm in names if nm != "oracle"]
    losses = {nm: [] for nm in fitted_names}
    taus = {nm: [] for nm in fitted_names}
    ts = {nm: [] for nm in fitted_names}
    sizes = {nm: [] for nm in fitted_names}
    oracle_acc = None

    for r in range(n_reps):
        try:
            batch = generate(dataclasses.replace(spec, seed=child_seeds[r]))
            if want_oracle:
                if oracle_acc is None:
                    oracle_acc = _SideOracleAccumulator(
                        batch, tau_cap=oracle_tau_cap, t_points=oracle_t_points
                    )
                oracle_acc.add(batch)
            for nm in fitted_names:
                fr = _fit_named(nm, batch, k, mn_factor, hybrid)
                losses[nm].append(fr.loss_value)
                if fr.hp is not None:
                    taus[nm].append(np.asarray(fr.hp.tau))
                    ts[nm].append(np.asarray(fr.hp.t))
                sizes[nm].append(np.asarray(fr.group_sizes))
        except Exception as exc:
            raise RuntimeError(f"replication {r} failed: {exc}") from exc

    results = {}
    for nm in fitted_names:
        results[nm] = _summarize(
            nm,
            losses[nm],
            taus[nm] if taus[nm] else None,
            ts[nm] if ts[nm] else None,
            sizes[nm] if sizes[nm] else None,
        )

    if want_oracle:
        tau_star, t1, t2 = oracle_acc.minimize()
        or_losses = []
        or_sizes = []
        for r in range(n_reps):
            batch = generate(dataclasses.replace(spec, seed=child_seeds[r]))
            lv, sz = _oracle_loss_at(batch, tau_star, t1, t2)
            or_losses.append(lv)
            or_sizes.append(sz)
        rr = _summarize("oracle", or_losses, None, None, or_sizes)
        rr.mean_tau = [tau_star]
        rr.mean_t = [t1, t2]
        results["oracle"] = rr

    ordered = {nm: results[nm] for nm in names}
    return RiskReport(spec=spec, n_reps=n_reps, results=ordered)
