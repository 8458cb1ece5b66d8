"""Corpus, parameter and variational-state containers plus sufficient statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

#: Upper clamp on component concentrations.
KAPPA_MAX = 1e5
#: Components whose soft count falls below this are reseeded.
EPS_COUNT = 1e-8
UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class Document:
    id: str
    vectors: np.ndarray
    label: Optional[str] = None

    def __len__(self) -> int:
        return len(self.vectors)


class Corpus:
    """
    A ragged collection of documents of unit vectors in R^D.

    Token vectors of all documents are stacked into one ``(N, D)`` array
    ``X``; document ``i`` owns rows ``offsets[i]:offsets[i+1]``. Vectors that
    are not unit-norm on ingestion are normalized and counted in
    ``num_normalized``; zero vectors are rejected.
    """

    def __init__(self, docs: Sequence[Document]):
        if len(docs) == 0:
            raise ValueError("corpus must contain at least one document")
        dims = {np.asarray(d.vectors).shape[1] if np.ndim(d.vectors) == 2 else -1 for d in docs}
        if len(dims) != 1 or -1 in dims:
            raise ValueError(f"all documents must be 2-d arrays with a common dimension, got {sorted(dims)}")
        dim = dims.pop()
        if dim < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {dim}")
        for d in docs:
            if len(d.vectors) == 0:
                raise ValueError(f"document {d.id!r} has no vectors")

        X = np.concatenate([np.asarray(d.vectors, dtype=float) for d in docs], axis=0)
        if not np.all(np.isfinite(X)):
            raise ValueError("corpus contains non-finite values")
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise ValueError(f"corpus contains {int(np.sum(norms == 0.0))} zero vector(s)")
        off_norm = np.abs(norms - 1.0) > UNIT_NORM_TOL
        self.num_normalized = int(off_norm.sum())
        if self.num_normalized:
            logger.warning("normalized %d non-unit vectors", self.num_normalized)
        # rows already unit to rounding are left alone so re-ingestion is idempotent
        rescale = np.abs(norms - 1.0) > 1e-12
        X[rescale] /= norms[rescale, None]
        X.setflags(write=False)

        self.X = X
        self.dim = dim
        lengths = np.array([len(d.vectors) for d in docs])
        self.offsets = np.concatenate([[0], np.cumsum(lengths)])
        self.doc_index = np.repeat(np.arange(len(docs)), lengths)
        self.docs = [
            Document(d.id, X[self.offsets[i] : self.offsets[i + 1]], d.label) for i, d in enumerate(docs)
        ]

    @classmethod
    def from_arrays(cls, arrays, ids=None, labels=None) -> "Corpus":
        ids = ids if ids is not None else [f"doc{i}" for i in range(len(arrays))]
        labels = labels if labels is not None else [None] * len(arrays)
        return cls([Document(str(i), np.atleast_2d(np.asarray(a, dtype=float)), lab)
                    for i, a, lab in zip(ids, arrays, labels)])

    @property
    def num_docs(self) -> int:
        return len(self.docs)

    @property
    def num_tokens(self) -> int:
        return self.X.shape[0]

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def labels(self) -> list:
        return [d.label for d in self.docs]

    def subset(self, indices) -> "Corpus":
        return Corpus([self.docs[i] for i in indices])

    def __len__(self) -> int:
        return self.num_docs

    def __repr__(self) -> str:
        return f"Corpus(num_docs={self.num_docs}, num_tokens={self.num_tokens}, dim={self.dim})"


@dataclass
class ModelParams:
    """Symmetric Dirichlet hyperparameter plus K vMF components.

    ``mu`` is ``(K, D)`` with unit rows, ``kappa`` is ``(K,)``.
    """

    alpha: float
    mu: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        self.kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.mu.shape[0] != self.kappa.shape[0] or self.mu.shape[0] < 1:
            raise ValueError("mu and kappa must describe the same K >= 1 components")
        if np.any(np.abs(np.linalg.norm(self.mu, axis=1) - 1.0) > 1e-9):
            raise ValueError("mean directions must be unit vectors")
        if np.any(self.kappa < 0) or np.any(self.kappa > KAPPA_MAX) or not np.all(np.isfinite(self.kappa)):
            raise ValueError(f"kappa must lie in [0, {KAPPA_MAX}]")

    @property
    def K(self) -> int:
        return self.mu.shape[0]

    @property
    def dim(self) -> int:
        return self.mu.shape[1]

    def permuted(self, perm) -> "ModelParams":
        perm = np.asarray(perm)
        return ModelParams(self.alpha, self.mu[perm], self.kappa[perm])

    @staticmethod
    def concatenate(models: Sequence["ModelParams"]) -> "ModelParams":
        if len(models) == 0:
            raise ValueError("need at least one model")
        dims = {m.dim for m in models}
        if len(dims) != 1:
            raise ValueError(f"models disagree on dimension: {sorted(dims)}")
        alphas = {m.alpha for m in models}
        if len(alphas) != 1:
            raise ValueError(f"models disagree on alpha: {sorted(alphas)}")
        return ModelParams(
            models[0].alpha,
            np.concatenate([m.mu for m in models]),
            np.concatenate([m.kappa for m in models]),
        )


@dataclass
class VariationalState:
    """
    Variational parameters for one corpus.

    ``pi`` is the dense ``(N, K)`` matrix of token responsibilities, in the
    corpus' stacked token order; ``phi`` is the ``(M, K)`` matrix of
    per-document Dirichlet parameters.
    """

    pi: np.ndarray
    phi: np.ndarray

    @property
    def phi0(self) -> np.ndarray:
        return self.phi.sum(axis=1)

    @property
    def K(self) -> int:
        return self.phi.shape[1]

    def doc_pi(self, corpus: Corpus, i: int) -> np.ndarray:
        return self.pi[corpus.offsets[i] : corpus.offsets[i + 1]]

    def check(self, corpus: Corpus) -> None:
        """Raise ``ValueError`` unless shapes match ``corpus`` and the invariants hold."""
        if self.pi.shape != (corpus.num_tokens, self.K) or self.phi.shape[0] != corpus.num_docs:
            raise ValueError(
                f"state shapes pi={self.pi.shape}, phi={self.phi.shape} do not match "
                f"corpus with {corpus.num_tokens} tokens in {corpus.num_docs} docs"
            )
        if np.any(self.pi < 0) or np.any(np.abs(self.pi.sum(axis=1) - 1.0) > 1e-10):
            raise ValueError("responsibility rows must be probability vectors")
        if np.any(self.phi <= 0):
            raise ValueError("Dirichlet parameters must be positive")

    def copy(self) -> "VariationalState":
        return VariationalState(self.pi.copy(), self.phi.copy())


@dataclass
class SufficientStats:
    n_ik: np.ndarray  # (M, K) soft counts per document
    n_k: np.ndarray  # (K,)
    r_k: np.ndarray  # (K, D) resultant vectors

    @property
    def rbar(self) -> np.ndarray:
        """Mean resultant lengths ``|r_k| / n_k`` (0 where ``n_k`` is 0)."""
        norms = np.linalg.norm(self.r_k, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n_k > 0, norms / self.n_k, 0.0)


@dataclass
class FitReport:
    elbo_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    wall_time: float = 0.0
    # per-iteration wall-clock seconds since the start of the fit
    iter_times: list = field(default_factory=list)
    # (after pi update, after phi update, after M-step), when requested
    substep_trace: list = field(default_factory=list)
    initial_elbo: Optional[float] = None
    num_kappa_clamped: int = 0
    num_reseeded: int = 0


def accumulate_stats(corpus: Corpus, state: VariationalState, deterministic: bool = True) -> SufficientStats:
    """
    Soft counts and resultant vectors from responsibilities.

    Per-document counts use ``np.add.reduceat`` over contiguous token
    blocks. In deterministic mode the resultants are summed by a plain
    ``einsum`` loop rather than BLAS, so the reduction order does not depend
    on the threading of the linear-algebra backend.
    """
    pi = state.pi
    if pi.shape[0] != corpus.num_tokens:
        raise ValueError(f"pi has {pi.shape[0]} rows but corpus has {corpus.num_tokens} tokens")
    if state.phi.shape[0] != corpus.num_docs:
        raise ValueError(f"phi has {state.phi.shape[0]} rows but corpus has {corpus.num_docs} docs")
    n_ik = np.add.reduceat(pi, corpus.offsets[:-1], axis=0)
    n_k = n_ik.sum(axis=0)
    if deterministic:
        r_k = np.einsum("nk,nd->kd", pi, corpus.X, optimize=False)
    else:
        r_k = pi.T @ corpus.X
    return SufficientStats(n_ik, n_k, r_k)
