"""Budgeted active sample selection and synthetic conversational data generation."""

__version__ = "0.1.0"

from .clustering import Clustering, distances_to_centers, kmeans  # noqa: E402
from .core import (  # noqa: E402
    QueryTemplateSet,
    SeedDataset,
    SeedSample,
    SyntheticPair,
    load_seed_dataset,
    load_templates,
)
from .embeddings import EmbeddingMatrix, FusionSpec, fuse, load_embeddings  # noqa: E402
from .evaluation import EvalRecord, EvalReport, evaluate, ndcg_at_k, normalize_title, recall_at_k  # noqa: E402
from .selectors import (  # noqa: E402
    STRATEGIES,
    FisherState,
    JsState,
    cluster_distribution,
    entropy,
    fisher_gain,
    fisher_select_next,
    js_divergence,
    js_select_next,
    random_select_next,
    select_batch,
    sherman_morrison_update,
)
