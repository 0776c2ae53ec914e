"""Topological features of transformer attention maps and embeddings."""

from ._core import (
    LinearModel,
    TopoheadError,
    accuracy,
    asymmetry_sum,
    attention_feature_names,
    attention_features,
    colored_barcode,
    diagonal_means,
    eer,
    embedding_feature_names,
    embedding_features,
    h0_barcode,
    h0_mean,
    h0m_pc,
    h0m_sym,
    mst,
    pearson,
    pooled_baseline,
    rank_heads,
    read_tensor,
    rtd0,
    run_cli,
    separation_quality,
    sym_adjacency,
    train_l1_logreg,
    write_tensor,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
