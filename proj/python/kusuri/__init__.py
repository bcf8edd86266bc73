"""Medication-mention classification for tweets (C++ core)."""

from ._kusuri import (
    Embeddings,
    Ensemble,
    KusuriError,
    Lexicon,
    PatternSet,
    WeakModel,
    build_variant_lexicon,
    classify,
    cohen_kappa,
    confusion,
    f1_from_pr,
    generate_variants,
    gold_label,
    gradient_check,
    mcnemar,
    mine_context_ngrams,
    normalize,
    prf,
    run_cli,
    select_candidate,
    tokenize,
)

__all__ = [
    "Embeddings",
    "Ensemble",
    "KusuriError",
    "Lexicon",
    "PatternSet",
    "WeakModel",
    "build_variant_lexicon",
    "classify",
    "cohen_kappa",
    "confusion",
    "f1_from_pr",
    "generate_variants",
    "gold_label",
    "gradient_check",
    "mcnemar",
    "mine_context_ngrams",
    "normalize",
    "prf",
    "run_cli",
    "select_candidate",
    "tokenize",
]
