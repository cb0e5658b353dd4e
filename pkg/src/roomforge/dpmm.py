"""Truncated stick-breaking Dirichlet process mixture of diagonal Gaussians.

Mean-field variational inference with a Normal-Gamma prior per dimension.
Each fit runs coordinate ascent from several k-means++ starts and keeps the
run with the highest evidence lower bound (ELBO); within a run the ELBO is
checked to be non-decreasing at every iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, gammaln, logsumexp

LOG_2PI = math.log(2 * math.pi)


class ElboDecreased(RuntimeError):
    """Coordinate ascent lowered the ELBO beyond round-off; indicates a bug."""


@dataclass(frozen=True)
class NormalGammaPrior:
    mean: np.ndarray
    beta: float
    a: float
    b: np.ndarray


@dataclass
class DpmmResult:
    """Fitted mixture.

    ``assignments[n]`` is the MAP cluster of point ``n`` or ``-1`` when that
    cluster has fewer than ``n_min`` members.  ``weights``, ``means`` and
    ``variances`` are indexed by cluster id ``0..T-1``.
    """

    assignments: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    truncation: int
    alpha: float
    elbo: float
    elbo_trace: list[float] = field(default_factory=list)
    n_iter: int = 0
    # variational state, kept so new points can be scored
    _beta: np.ndarray | None = None
    _a: np.ndarray | None = None
    _b: np.ndarray | None = None
    _elog_pi: np.ndarray | None = None

    def clusters(self) -> list[int]:
        """Ids of clusters that own at least one assigned point."""
        return sorted(set(int(k) for k in self.assignments if k >= 0))

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == k)

    def log_resp(self, points: np.ndarray) -> np.ndarray:
        return _log_resp(np.asarray(points, float), self.means, self._beta, self._a, self._b, self._elog_pi)

    def assign(self, points: np.ndarray) -> np.ndarray:
        """MAP cluster for arbitrary points under the fitted variational posterior."""
        return np.argmax(self.log_resp(points), axis=1)


# --- variational pieces ----------------------------------------------------------


def _elog_pi(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """E[log pi_k] under the truncated stick; the last stick takes the remainder."""
    T = len(g1) + 1
    s = digamma(g1 + g2)
    elog_v = digamma(g1) - s
    elog_1mv = digamma(g2) - s
    out = np.zeros(T)
    out[:-1] = elog_v
    out[1:] += np.cumsum(elog_1mv)
    return out


def _log_resp(X, m, beta, a, b, elog_pi):
    elog_lam = digamma(a)[:, None] - np.log(b)  # (T, d)
    prec = a[:, None] / b  # (T, d)
    d = X.shape[1]
    # quadratic term: sum_d prec_kd (x_nd - m_kd)^2
    quad = (X**2) @ prec.T - 2 * X @ (prec * m).T + np.sum(prec * m**2, axis=1)[None, :]
    ll = 0.5 * elog_lam.sum(axis=1)[None, :] - 0.5 * d * LOG_2PI - 0.5 * quad - 0.5 * d / beta[None, :]
    return ll + elog_pi[None, :]


def _m_step(X, R, prior: NormalGammaPrior, alpha: float):
    Nk = R.sum(axis=0)  # (T,)
    safe = np.maximum(Nk, 1e-300)
    xbar = (R.T @ X) / safe[:, None]
    S = (R.T @ (X**2)) / safe[:, None] - xbar**2  # weighted per-dim variance
    S = np.maximum(S, 0.0)
    beta = prior.beta + Nk
    m = (prior.beta * prior.mean[None, :] + Nk[:, None] * xbar) / beta[:, None]
    a = prior.a + Nk / 2.0
    b = prior.b[None, :] + 0.5 * (Nk[:, None] * S + (prior.beta * Nk / beta)[:, None] * (xbar - prior.mean[None, :]) ** 2)
    tail = np.cumsum(Nk[::-1])[::-1]  # sum_{j >= k}
    g1 = 1.0 + Nk[:-1]
    g2 = alpha + tail[1:]
    return Nk, xbar, S, beta, m, a, b, g1, g2


def _elbo(X, R, prior: NormalGammaPrior, alpha, Nk, xbar, S, beta, m, a, b, g1, g2) -> float:
    d = X.shape[1]
    elog_lam = digamma(a)[:, None] - np.log(b)
    prec = a[:, None] / b
    elog_pi = _elog_pi(g1, g2)

    # E[log p(X | Z, mu, lambda)]
    sq = Nk[:, None] * (S + (xbar - m) ** 2)
    lik = 0.5 * np.sum(Nk[:, None] * (elog_lam - LOG_2PI) - prec * sq - Nk[:, None] / beta[:, None])
    # E[log p(Z | v)] - E[log q(Z)]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.sum(np.where(R > 0, R * np.log(R), 0.0))
    z = float(Nk @ elog_pi) + ent
    # E[log p(v)] - E[log q(v)]
    s = digamma(g1 + g2)
    elog_v, elog_1mv = digamma(g1) - s, digamma(g2) - s
    pv = np.sum(math.log(alpha) + (alpha - 1) * elog_1mv)
    qv = np.sum(gammaln(g1 + g2) - gammaln(g1) - gammaln(g2) + (g1 - 1) * elog_v + (g2 - 1) * elog_1mv)
    # E[log p(mu, lambda)] - E[log q(mu, lambda)]
    p_mu = np.sum(0.5 * (math.log(prior.beta) - LOG_2PI) + 0.5 * elog_lam
                  - 0.5 * prior.beta * (prec * (m - prior.mean[None, :]) ** 2 + 1.0 / beta[:, None]))
    p_lam = np.sum(prior.a * np.log(prior.b)[None, :] - gammaln(prior.a) + (prior.a - 1) * elog_lam - prior.b[None, :] * prec)
    q_mu = np.sum(0.5 * (np.log(beta)[:, None] - LOG_2PI) + 0.5 * elog_lam - 0.5)
    q_lam = np.sum(a[:, None] * np.log(b) - gammaln(a)[:, None] + (a[:, None] - 1) * elog_lam - a[:, None])
    del d
    return float(lik + z + pv - qv + p_mu + p_lam - q_mu - q_lam)


# --- initialization ------------------------------------------------------------------


def _kmeans_pp(X: np.ndarray, k: int, gen: np.random.Generator, lloyd_iters: int = 10) -> np.ndarray:
    """Hard labels from k-means++ seeding followed by a few Lloyd steps."""
    n = len(X)
    centers = [X[gen.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            break
        i = int(np.searchsorted(np.cumsum(d2), gen.random() * total))
        centers.append(X[min(i, n - 1)])
        d2 = np.minimum(d2, np.sum((X - centers[-1]) ** 2, axis=1))
    C = np.array(centers)
    labels = np.zeros(n, dtype=int)
    for _ in range(lloyd_iters):
        dist = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(dist, axis=1)
        for j in range(len(C)):
            sel = labels == j
            if sel.any():
                C[j] = X[sel].mean(axis=0)
    # order clusters by size so the stick prior sees big ones first
    sizes = np.bincount(labels, minlength=len(C))
    rank = np.empty(len(C), dtype=int)
    rank[np.argsort(-sizes, kind="stable")] = np.arange(len(C))
    return rank[labels]


def _run(X, labels, T, prior, alpha, max_iters, tol):
    n = len(X)
    R = np.zeros((n, T))
    R[np.arange(n), labels] = 1.0
    state = _m_step(X, R, prior, alpha)
    trace = [_elbo(X, R, prior, alpha, *state)]
    it = 0
    for it in range(1, max_iters + 1):
        Nk, xbar, S, beta, m, a, b, g1, g2 = state
        L = _log_resp(X, m, beta, a, b, _elog_pi(g1, g2))
        R = np.exp(L - logsumexp(L, axis=1, keepdims=True))
        state = _m_step(X, R, prior, alpha)
        e = _elbo(X, R, prior, alpha, *state)
        if e < trace[-1] - 1e-8 * max(1.0, abs(trace[-1])):
            raise ElboDecreased(f"ELBO fell from {trace[-1]!r} to {e!r} at iteration {it}")
        trace.append(e)
        if e - trace[-2] < tol * max(1.0, abs(e)):
            break
    return R, state, trace, it


def dpmm_fit(
    points,
    alpha: float = 1.0,
    truncation: int = 20,
    max_iters: int = 300,
    tol: float = 1e-6,
    seed: int = 0,
    n_min: int = 1,
    prior_scale: float = 0.1,
    sigma_min: float = 0.01,
    restarts: tuple[int, ...] = (1, 2, 4, 8, 20),
) -> DpmmResult:
    """Fit a truncated DP mixture of diagonal Gaussians.

    Args:
        points: ``(n, d)`` array.
        alpha: stick-breaking concentration.
        truncation: number of stick pieces ``T`` (>= 2).
        max_iters: coordinate-ascent cap per start.
        tol: stop once the relative ELBO gain falls below this.
        seed: seed of the k-means++ initializations.
        n_min: clusters with fewer MAP members leave their points unassigned.
        prior_scale: prior guess of a cluster's per-dimension standard deviation.
        sigma_min: floor on reported standard deviations.
        restarts: numbers of initial k-means clusters to try (capped by ``T``).
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) == 0 or X.shape[1] < 1:
        raise ValueError("dpmm_fit needs at least one point of dimension >= 1")
    if truncation < 2:
        raise ValueError("truncation must be >= 2")
    n, d = X.shape
    T = truncation
    a0 = 1.0
    prior = NormalGammaPrior(X.mean(axis=0), 1e-2, a0, np.full(d, a0 * prior_scale**2))
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    best = None
    for k in sorted({min(k, T, n) for k in restarts}):
        labels = _kmeans_pp(X, k, gen)
        R, state, trace, it = _run(X, labels, T, prior, alpha, max_iters, tol)
        if best is None or trace[-1] > best[2][-1]:
            best = (R, state, trace, it)
    R, state, trace, it = best
    Nk, xbar, S, beta, m, a, b, g1, g2 = state

    labels = np.argmax(R, axis=1)
    counts = np.bincount(labels, minlength=T)
    labels = np.where(counts[labels] >= n_min, labels, -1)
    ev = g1 / (g1 + g2)
    w = np.ones(T)
    w[:-1] = ev
    w[1:] *= np.cumprod(1 - ev)
    var = np.maximum(b / a[:, None], sigma_min**2)
    return DpmmResult(
        assignments=labels,
        weights=w,
        means=m,
        variances=var,
        truncation=T,
        alpha=alpha,
        elbo=trace[-1],
        elbo_trace=trace,
        n_iter=it,
        _beta=beta,
        _a=a,
        _b=b,
        _elog_pi=_elog_pi(g1, g2),
    )
