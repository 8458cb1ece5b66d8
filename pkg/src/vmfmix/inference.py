"""
Variational EM for the multi-document vMF mixture with a Dirichlet prior.

One outer iteration is a single mean-field sweep: responsibilities are
refreshed with the previous Dirichlet parameters, the Dirichlet parameters
are recomputed from the new responsibilities, then the component
parameters are re-estimated from the sufficient statistics. Each of the
two variational sub-updates maximizes the bound exactly, so they can only
increase it; the concentration update is a closed-form approximation and
may cost a tiny amount.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import special

from .core import (
    EPS_COUNT,
    KAPPA_MAX,
    Corpus,
    FitReport,
    ModelParams,
    SufficientStats,
    VariationalState,
    accumulate_stats,
)
from .specfun import log_vmf_normalizer

logger = logging.getLogger(__name__)

INIT_METHODS = ("seeded-tokens", "random-directions", "perturbed-global-mean")
THREADS_ENV = "VMFMIX_NUM_THREADS"
_RBAR_ONE = 1.0 - 1e-12


class NumericalError(RuntimeError):
    """A quantity that must be finite was not."""


@dataclass
class FitConfig:
    K: int
    alpha: float = 1.0
    max_iters: int = 100
    rel_tol: float = 1e-5
    seed: int = 0
    init: str = "seeded-tokens"
    kappa_init: float = 10.0
    deterministic: bool = False
    trace_substeps: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}, got {self.init!r}")
        if not 0 < self.kappa_init <= KAPPA_MAX:
            raise ValueError(f"kappa_init must lie in (0, {KAPPA_MAX}]")

    def to_dict(self) -> dict:
        return asdict(self)


def num_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# densities


def log_normalizers(params: ModelParams) -> np.ndarray:
    return np.array([log_vmf_normalizer(params.dim, k) for k in params.kappa])


def log_densities(X: np.ndarray, params: ModelParams, deterministic: bool = True) -> np.ndarray:
    """``(N, K)`` matrix of ``log vMF(x_n | mu_k, kappa_k)``."""
    logc = log_normalizers(params)
    threads = 1 if deterministic else num_threads()
    if threads == 1 or X.shape[0] < 4096:
        out = logc + (X @ params.mu.T) * params.kappa
    else:
        out = np.empty((X.shape[0], params.K))
        bounds = np.linspace(0, X.shape[0], threads + 1).astype(int)

        def work(a, b):
            out[a:b] = logc + (X[a:b] @ params.mu.T) * params.kappa

        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, bounds[:-1], bounds[1:]))
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite vMF log-density")
    return out


# ---------------------------------------------------------------------------
# E-step


def update_responsibilities(
    corpus: Corpus, params: ModelParams, phi: np.ndarray, deterministic: bool = True
) -> np.ndarray:
    """Responsibilities ``pi_njk ∝ exp(psi(phi_ik)) vMF(x_n | mu_k, kappa_k)``, normalized in log space."""
    logits = log_densities(corpus.X, params, deterministic) + special.digamma(phi)[corpus.doc_index]
    return np.exp(logits - special.logsumexp(logits, axis=1, keepdims=True))


def update_dirichlet(corpus: Corpus, pi: np.ndarray, alpha: float) -> np.ndarray:
    return np.add.reduceat(pi, corpus.offsets[:-1], axis=0) + alpha


def e_step(
    corpus: Corpus, params: ModelParams, state: VariationalState, deterministic: bool = True
) -> VariationalState:
    """One sweep: new responsibilities from the old ``phi``, then ``phi = n_ik + alpha``."""
    if state.phi.shape != (corpus.num_docs, params.K):
        raise ValueError(f"phi shape {state.phi.shape} does not match ({corpus.num_docs}, {params.K})")
    if np.any(state.phi <= 0):
        raise ValueError("Dirichlet parameters must be positive")
    pi = update_responsibilities(corpus, params, state.phi, deterministic)
    return VariationalState(pi, update_dirichlet(corpus, pi, params.alpha))


# ---------------------------------------------------------------------------
# M-step


@dataclass
class MStepResult:
    mu: np.ndarray
    kappa: np.ndarray
    clamped: list
    reseeded: list


def kappa_estimate(rbar, dim: int):
    """Closed-form concentration ``(rbar D - rbar^3) / (1 - rbar^2)``, clamped to ``[0, KAPPA_MAX]``."""
    rbar = np.asarray(rbar, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (rbar * dim - rbar**3) / (1.0 - rbar**2)
    kappa = np.where(rbar >= _RBAR_ONE, KAPPA_MAX, kappa)
    return np.clip(kappa, 0.0, KAPPA_MAX)


def m_step(
    stats: SufficientStats,
    dim: int,
    corpus: Optional[Corpus] = None,
    state: Optional[VariationalState] = None,
    kappa_init: float = 10.0,
) -> MStepResult:
    """
    Re-estimate mean directions and concentrations.

    ``mu_k = r_k / |r_k|`` and ``kappa_k`` from :func:`kappa_estimate` with
    ``rbar_k = |r_k| / n_k``. A component with ``n_k < EPS_COUNT`` (or a
    vanishing resultant) is reseeded at the token whose largest
    responsibility is smallest, with ``kappa = kappa_init``; this needs
    ``corpus`` and ``state``.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    r_norm = np.linalg.norm(stats.r_k, axis=1)
    dead = np.flatnonzero((stats.n_k < EPS_COUNT) | (r_norm <= 0.0))
    live = np.setdiff1d(np.arange(len(stats.n_k)), dead)

    mu = np.zeros_like(stats.r_k, dtype=float)
    kappa = np.zeros(len(stats.n_k))
    mu[live] = stats.r_k[live] / r_norm[live, None]
    rbar = np.minimum(r_norm[live] / stats.n_k[live], 1.0)
    raw = np.where(rbar >= _RBAR_ONE, np.inf, (rbar * dim - rbar**3) / np.maximum(1.0 - rbar**2, 1e-300))
    clamped = [int(k) for k in live[raw > KAPPA_MAX]]
    kappa[live] = kappa_estimate(rbar, dim)
    if clamped:
        logger.warning("kappa clamped to %g for degenerate component(s) %s", KAPPA_MAX, clamped)

    if len(dead):
        if corpus is None or state is None:
            raise ValueError(f"component(s) {dead.tolist()} are empty and no tokens were given to reseed them")
        order = np.argsort(state.pi.max(axis=1), kind="stable")
        for k, n in zip(dead, order):
            mu[k] = corpus.X[n]
            kappa[k] = kappa_init
        logger.warning("reseeded empty component(s) %s", dead.tolist())
    return MStepResult(mu, kappa, clamped, [int(k) for k in dead])


# ---------------------------------------------------------------------------
# bound


def _dirichlet_parts(phi: np.ndarray, n_ik: np.ndarray, alpha: float):
    K = phi.shape[1]
    phi0 = phi.sum(axis=1)
    dig = special.digamma(phi)
    dig0 = special.digamma(phi0)
    e_log_theta = dig - dig0[:, None]
    prior = math.lgamma(K * alpha) - K * math.lgamma(alpha)
    entropy = (
        special.gammaln(phi).sum(axis=1)
        - special.gammaln(phi0)
        - ((phi - 1.0) * dig).sum(axis=1)
        + (phi0 - K) * dig0
    )
    assign = ((alpha - 1.0 + n_ik) * e_log_theta).sum(axis=1)
    return prior + entropy + assign


def elbo(
    corpus: Corpus,
    params: ModelParams,
    state: VariationalState,
    stats: Optional[SufficientStats] = None,
) -> float:
    """
    Evidence lower bound, including the Dirichlet log-normalizer constant.

    With that constant the value is exactly
    ``E_q[log p(X, Z, Theta)] - E_q[log q(Z, Theta)]``.
    """
    if stats is None:
        stats = accumulate_stats(corpus, state)
    per_doc = _dirichlet_parts(state.phi, stats.n_ik, params.alpha)
    token_entropy = special.entr(state.pi).sum()
    logc = log_normalizers(params)
    vmf = float(stats.n_k @ logc + np.einsum("k,kd,kd->", params.kappa, params.mu, stats.r_k))
    value = float(per_doc.sum()) + float(token_entropy) + vmf
    if not math.isfinite(value):
        raise NumericalError("non-finite ELBO")
    return value


def doc_bounds(corpus: Corpus, params: ModelParams, state: VariationalState) -> np.ndarray:
    """Per-document contributions to the bound; they sum to :func:`elbo`."""
    starts = corpus.offsets[:-1]
    n_ik = np.add.reduceat(state.pi, starts, axis=0)
    dens = log_densities(corpus.X, params)
    token_terms = (state.pi * dens).sum(axis=1) + special.entr(state.pi).sum(axis=1)
    return _dirichlet_parts(state.phi, n_ik, params.alpha) + np.add.reduceat(token_terms, starts)


# ---------------------------------------------------------------------------
# fit


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def initial_params(corpus: Corpus, config: FitConfig, rng: np.random.Generator) -> ModelParams:
    """
    Starting component parameters.

    ``seeded-tokens`` places the K means on distinct corpus tokens chosen
    with k-means++ weighting (probability proportional to ``1 - max cosine``
    to the tokens already chosen). ``random-directions`` draws uniform unit
    vectors and ``perturbed-global-mean`` jitters the corpus mean direction.
    """
    K, D, X = config.K, corpus.dim, corpus.X
    if config.init == "seeded-tokens":
        N = X.shape[0]
        chosen = [int(rng.integers(N))]
        closest = X @ X[chosen[0]]
        for _ in range(1, K):
            weights = np.clip(1.0 - closest, 0.0, None)
            weights[chosen] = 0.0
            if weights.sum() <= 0:
                weights = np.ones(N)
                weights[chosen] = 0.0
                if weights.sum() <= 0:
                    weights = np.ones(N)
            n = int(rng.choice(N, p=weights / weights.sum()))
            chosen.append(n)
            closest = np.maximum(closest, X @ X[n])
        mu = X[chosen].copy()
    elif config.init == "random-directions":
        mu = _unit(rng.standard_normal((K, D)))
    else:
        mean = X.sum(axis=0)
        base = _unit(mean) if np.linalg.norm(mean) > 0 else _unit(rng.standard_normal(D))
        mu = _unit(base + 0.5 * _unit(rng.standard_normal((K, D))))
    return ModelParams(config.alpha, mu, np.full(K, float(config.kappa_init)))


def initial_state(corpus: Corpus, K: int, alpha: float) -> VariationalState:
    pi = np.full((corpus.num_tokens, K), 1.0 / K)
    phi = np.repeat(alpha + corpus.doc_lengths[:, None] / K, K, axis=1).astype(float)
    return VariationalState(pi, phi)


def fit(corpus: Corpus, config: FitConfig, init_params: Optional[ModelParams] = None):
    """
    Run variational EM.

    Parameters
    ----------
    corpus : Corpus
    config : FitConfig
    init_params : ModelParams, optional
        Explicit starting components; overrides ``config.init``.

    Returns
    -------
    params : ModelParams
    state : VariationalState
    report : FitReport
        ``elbo_trace[t]`` is the bound after iteration ``t + 1``. The loop
        stops once the relative improvement drops below ``config.rel_tol``.
    """
    if corpus.num_docs == 0:
        raise ValueError("empty corpus")
    rng = np.random.default_rng(config.seed)
    params = init_params if init_params is not None else initial_params(corpus, config, rng)
    if params.K != config.K or params.dim != corpus.dim:
        raise ValueError("initial parameters do not match config.K / corpus dimension")
    state = initial_state(corpus, config.K, config.alpha)
    report = FitReport()
    det = config.deterministic
    start = time.perf_counter()
    if config.trace_substeps:
        report.initial_elbo = elbo(corpus, params, state)

    for it in range(config.max_iters):
        pi = update_responsibilities(corpus, params, state.phi, det)
        if config.trace_substeps:
            after_pi = elbo(corpus, params, VariationalState(pi, state.phi))
        state = VariationalState(pi, update_dirichlet(corpus, pi, params.alpha))
        stats = accumulate_stats(corpus, state, deterministic=det)
        if config.trace_substeps:
            after_phi = elbo(corpus, params, state, stats)

        res = m_step(stats, corpus.dim, corpus, state, config.kappa_init)
        report.num_kappa_clamped += len(res.clamped)
        report.num_reseeded += len(res.reseeded)
        params = ModelParams(config.alpha, res.mu, res.kappa)
        value = elbo(corpus, params, state, stats)

        report.elbo_trace.append(value)
        report.iter_times.append(time.perf_counter() - start)
        if config.trace_substeps:
            report.substep_trace.append((after_pi, after_phi, value))
        report.iterations = it + 1
        logger.debug("iter %d elbo %.10g", it + 1, value)
        if it > 0:
            prev = report.elbo_trace[-2]
            if value - prev < config.rel_tol * abs(prev):
                report.converged = True
                break

    report.wall_time = time.perf_counter() - start
    return params, state, report
