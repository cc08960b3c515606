"""Training-corpus construction from timestamped subtitle chunks."""

from .boundary import (
    BoundaryAction,
    BoundaryDecision,
    Candidate,
    Origin,
    audio_tail,
    candidate_list,
    null_nonspeech,
    realign,
    select_boundary,
)
from .chunks import SubtitleChunk, load_chunks, parse_chunks
from .gestalt import similarity_ratio
from .manifest import (
    CorpusSummary,
    ManifestEntry,
    Split,
    build_manifest,
    read_manifest,
    split_train_val,
    write_manifest,
)
from .pipeline import CorpusOptions, CorpusSource, build_corpus
from .providers import (
    EndpointProvider,
    FileProvider,
    FileReplacementProvider,
    RemoteProvider,
    ReplacementProvider,
)
from .script import FilterResult, LanguageVerdict, ScriptClass, classify_token_script, filter_language

__all__ = [
    "BoundaryAction",
    "BoundaryDecision",
    "Candidate",
    "CorpusOptions",
    "CorpusSource",
    "CorpusSummary",
    "EndpointProvider",
    "FileProvider",
    "FileReplacementProvider",
    "FilterResult",
    "LanguageVerdict",
    "ManifestEntry",
    "Origin",
    "RemoteProvider",
    "ReplacementProvider",
    "ScriptClass",
    "Split",
    "SubtitleChunk",
    "audio_tail",
    "build_corpus",
    "build_manifest",
    "candidate_list",
    "classify_token_script",
    "filter_language",
    "load_chunks",
    "null_nonspeech",
    "parse_chunks",
    "read_manifest",
    "realign",
    "select_boundary",
    "similarity_ratio",
    "split_train_val",
    "write_manifest",
]
