"""Python surface over the patch-localization core."""

from ._patchscout import (
    CandidateStats,
    EvalReport,
    FunctionContext,
    PerCveScore,
    VoteTally,
    candidate_stats,
    compare_versions,
    detect_language,
    enclosing_functions,
    estimate_tokens,
    extract_commit_choice,
    normalize_message,
    normalize_version,
    parse_unified_diff,
    score,
    tally,
    valid_cve_id,
)

__all__ = [
    "CandidateStats",
    "EvalReport",
    "FunctionContext",
    "PerCveScore",
    "VoteTally",
    "candidate_stats",
    "compare_versions",
    "detect_language",
    "enclosing_functions",
    "estimate_tokens",
    "extract_commit_choice",
    "normalize_message",
    "normalize_version",
    "parse_unified_diff",
    "score",
    "tally",
    "valid_cve_id",
]
