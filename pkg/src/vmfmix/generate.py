"""
Synthetic corpora from the generative process.

For each document: ``theta ~ Dir(alpha)``, then per token ``z ~ Cat(theta)``
and ``x ~ vMF(mu_z, kappa_z)``.

Randomness comes from numpy's counter-based Philox bit generator. The
document streams are spawned from ``SeedSequence(seed)`` by document index,
so document ``i`` is identical regardless of how many documents are drawn or
in which order they are generated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Corpus, Document, ModelParams


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_dirichlet(alpha: float, K: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw from a symmetric Dirichlet by normalizing Gamma variates.

    Works in log space with the ``Gamma(a) = Gamma(a + 1) U^(1/a)`` boost so
    that very small ``alpha`` does not underflow every Gamma draw to zero.
    """
    if not alpha > 0 or K < 1:
        raise ValueError("need alpha > 0 and K >= 1")
    if K == 1:
        return np.ones(1)
    log_g = np.log(rng.gamma(alpha + 1.0, size=K)) + np.log(rng.uniform(size=K)) / alpha
    w = np.exp(log_g - log_g.max())
    return w / w.sum()


def sample_uniform_sphere(dim: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    shape = (dim,) if size is None else (size, dim)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _sample_cosines(kappa: float, dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    # Wood (1994) envelope rejection for w = mu . x
    m = dim - 1.0
    b = m / (2.0 * kappa + np.sqrt(4.0 * kappa**2 + m**2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * np.log(1.0 - x0**2)
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        z = rng.beta(m / 2.0, m / 2.0, size=need)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=need)
        ok = kappa * w + m * np.log1p(-x0 * w) - c >= np.log(u)
        acc = w[ok]
        out[filled : filled + len(acc)] = acc
        filled += len(acc)
    return out


def sample_vmf(mu, kappa: float, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """
    Draw from vMF(mu, kappa) on S^{D-1}.

    The cosine to ``mu`` comes from the rejection sampler; the remaining
    direction is a uniform unit vector in the tangent space of ``mu``.
    ``kappa = 0`` gives the uniform distribution.
    """
    mu = np.asarray(mu, dtype=float)
    if abs(np.linalg.norm(mu) - 1.0) > 1e-9:
        raise ValueError("mu must be a unit vector")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    dim = mu.shape[0]
    n = 1 if size is None else size
    w = _sample_cosines(float(kappa), dim, n, rng)
    v = rng.standard_normal((n, dim))
    v -= np.outer(v @ mu, mu)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x = w[:, None] * mu + np.sqrt(np.clip(1.0 - w**2, 0.0, None))[:, None] * v
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[0] if size is None else x


@dataclass
class GenSpec:
    K: int
    D: int
    num_docs: int
    tokens_min: int
    tokens_max: int
    alpha: float = 1.0
    kappa: float = 50.0
    true_params: Optional[ModelParams] = None
    seed: int = 0

    def __post_init__(self):
        if min(self.K, self.num_docs, self.tokens_min) < 1 or self.D < 2:
            raise ValueError("K, num_docs, tokens_min must be >= 1 and D >= 2")
        if self.tokens_max < self.tokens_min:
            raise ValueError("tokens_max must be >= tokens_min")
        if not self.alpha > 0 or self.kappa < 0:
            raise ValueError("need alpha > 0 and kappa >= 0")
        if self.true_params is not None and (self.true_params.K, self.true_params.dim) != (self.K, self.D):
            raise ValueError("true_params shape does not match K, D")


@dataclass
class GroundTruth:
    params: ModelParams
    theta: np.ndarray  # (num_docs, K)
    z: list  # per-document int arrays of component indices, 0-based


def sample_corpus(spec: GenSpec, label: Optional[str] = None, id_prefix: str = "doc"):
    """Sample a corpus and its latent variables. Component indices are 0-based."""
    root = np.random.SeedSequence(spec.seed)
    param_ss, doc_ss = root.spawn(2)
    if spec.true_params is not None:
        params = spec.true_params
    else:
        prng = np.random.Generator(np.random.Philox(param_ss))
        params = ModelParams(spec.alpha, sample_uniform_sphere(spec.D, prng, spec.K), np.full(spec.K, float(spec.kappa)))

    docs, thetas, zs = [], [], []
    for i, ss in enumerate(doc_ss.spawn(spec.num_docs)):
        rng = np.random.Generator(np.random.Philox(ss))
        n = int(rng.integers(spec.tokens_min, spec.tokens_max + 1))
        theta = sample_dirichlet(spec.alpha, spec.K, rng)
        z = rng.choice(spec.K, size=n, p=theta)
        x = np.empty((n, spec.D))
        for k in np.unique(z):
            sel = z == k
            x[sel] = sample_vmf(params.mu[k], params.kappa[k], rng, size=int(sel.sum()))
        docs.append(Document(f"{id_prefix}{i}", x, label))
        thetas.append(theta)
        zs.append(z)
    return Corpus(docs), GroundTruth(params, np.array(thetas), zs)
