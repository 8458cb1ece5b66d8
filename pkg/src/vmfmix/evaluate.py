"""Recovery metrics: align fitted components with ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class Matching:
    true_to_fit: np.ndarray  # fitted component index for each true component
    cosines: np.ndarray  # cosine between each true mu and its match


def match_components(fit_mu: np.ndarray, true_mu: np.ndarray) -> Matching:
    """Hungarian matching maximizing the total cosine similarity."""
    if fit_mu.shape != true_mu.shape:
        raise ValueError(f"shape mismatch: fitted {fit_mu.shape} vs true {true_mu.shape}")
    cos = true_mu @ fit_mu.T
    rows, cols = linear_sum_assignment(-cos)
    order = np.argsort(rows)
    return Matching(cols[order], cos[rows, cols][order])


def assignment_accuracy(pi: np.ndarray, z: np.ndarray, matching: Matching) -> tuple[float, float]:
    """
    Soft and hard agreement between responsibilities and true labels.

    Soft accuracy is the mean responsibility placed on the matched true
    component; hard accuracy uses the argmax (ties go to the lowest index).
    """
    target = matching.true_to_fit[z]
    soft = float(pi[np.arange(len(z)), target].mean())
    hard = float(np.mean(np.argmax(pi, axis=1) == target))
    return soft, hard
