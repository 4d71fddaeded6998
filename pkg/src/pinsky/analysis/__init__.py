"""Post-hoc analysis of run logs: embeddings, speciation, transfer statistics."""

from .embedding import Embedding, embed_level
from .report import Analysis, analyse, summarise, write_report
from .species import SpeciesArchive, classify, cosine_similarity, speciate, support
from .transfers import (TransferCurves, TransferMatrix, conditional_solve_probability, rank_test,
                        transfer_curves, transfer_matrix)
from .tree import export_tree

__all__ = [
    "Embedding", "embed_level", "SpeciesArchive", "cosine_similarity", "speciate", "classify",
    "support", "TransferCurves", "TransferMatrix", "transfer_curves", "transfer_matrix",
    "conditional_solve_probability", "rank_test", "export_tree", "Analysis", "analyse",
    "summarise", "write_report",
]
