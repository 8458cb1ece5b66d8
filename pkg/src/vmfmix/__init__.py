"""Multi-document von Mises-Fisher mixture with a Dirichlet prior, fit by variational EM."""

from .core import (
    EPS_COUNT,
    KAPPA_MAX,
    Corpus,
    Document,
    FitReport,
    ModelParams,
    SufficientStats,
    VariationalState,
    accumulate_stats,
)
from .features import TopicFeatures, combine_and_infer, doc_proportions, infer_state
from .generate import GenSpec, GroundTruth, sample_corpus, sample_dirichlet, sample_vmf
from .inference import FitConfig, doc_bounds, e_step, elbo, fit, m_step

__version__ = "0.1.0"
