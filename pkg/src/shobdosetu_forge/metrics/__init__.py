"""WER and DER scoring."""

from .annotation import Annotation, SpeakerSegment
from .assignment import linear_assignment, max_weight_matching
from .der import DerReport, corpus_der, der, optimal_mapping
from .rttm import load_rttm, parse_rttm, write_rttm
from .wer import TokenAlignment, WerReport, align_tokens, corpus_wer, tokenize, wer

__all__ = [
    "Annotation",
    "DerReport",
    "SpeakerSegment",
    "TokenAlignment",
    "WerReport",
    "align_tokens",
    "corpus_der",
    "corpus_wer",
    "der",
    "linear_assignment",
    "load_rttm",
    "max_weight_matching",
    "optimal_mapping",
    "parse_rttm",
    "tokenize",
    "wer",
    "write_rttm",
]
