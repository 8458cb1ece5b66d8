"""Topic-proportion features from fitted (or combined) topic embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Corpus, ModelParams, VariationalState
from .inference import doc_bounds, e_step, initial_state

MAX_SWEEPS = 50
REL_TOL = 1e-6


@dataclass
class TopicFeatures:
    doc_id: str
    proportions: np.ndarray


def doc_proportions(state: VariationalState, doc_index: int) -> np.ndarray:
    """Posterior mean of the document's topic proportions, ``phi_i / phi_i0``."""
    if not 0 <= doc_index < state.phi.shape[0]:
        raise IndexError(f"document index {doc_index} out of range for {state.phi.shape[0]} documents")
    row = state.phi[doc_index]
    return row / row.sum()


def infer_state(
    corpus: Corpus,
    params: ModelParams,
    max_sweeps: int = MAX_SWEEPS,
    rel_tol: float = REL_TOL,
):
    """
    E-step-only inference with the components held fixed.

    Sweeps until every document's bound changes by less than ``rel_tol``
    (relative) or ``max_sweeps`` is reached. Returns the state, the number of
    sweeps and whether the tolerance was met.
    """
    if params.dim != corpus.dim:
        raise ValueError(f"model dimension {params.dim} does not match corpus dimension {corpus.dim}")
    state = initial_state(corpus, params.K, params.alpha)
    prev = None
    for sweep in range(1, max_sweeps + 1):
        state = e_step(corpus, params, state)
        bounds = doc_bounds(corpus, params, state)
        if prev is not None and np.all(np.abs(bounds - prev) <= rel_tol * np.abs(prev)):
            return state, sweep, True
        prev = bounds
    return state, max_sweeps, False


def combine_and_infer(
    models: Sequence[ModelParams],
    corpus: Corpus,
    max_sweeps: int = MAX_SWEEPS,
    rel_tol: float = REL_TOL,
) -> list[TopicFeatures]:
    """Concatenate the components of all models and infer every document's proportions over them."""
    combined = ModelParams.concatenate(models)
    state, _, _ = infer_state(corpus, combined, max_sweeps, rel_tol)
    return [TopicFeatures(doc.id, doc_proportions(state, i)) for i, doc in enumerate(corpus.docs)]
