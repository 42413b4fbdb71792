"""ID recoding and the in-memory message arrays of recoded mode."""

from .digest import CombineArray, DigestArray, combine_outgoing
from .preprocess import RecodePreprocessor, assign_new_ids, read_recode_map, rewrite_adjacency

__all__ = [
    "CombineArray", "DigestArray", "combine_outgoing",
    "RecodePreprocessor", "assign_new_ids", "read_recode_map", "rewrite_adjacency",
]
