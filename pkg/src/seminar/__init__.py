"""Detection and analysis of seminar users (coordinated political-propaganda accounts)."""
from .corpus import (
    FilterConfig, Lexicon, Tweet, UserAggregate, ingest_stream, load_corpus,
    normalize_arabic,
)
from .features import FEATURE_NAMES, FeatureConfig, FeatureExtractor, featurize
from .svm import EvalReport, KernelSvmModel, SeminarSVC, evaluate, loocv

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES", "EvalReport", "FeatureConfig", "FeatureExtractor", "FilterConfig",
    "KernelSvmModel", "Lexicon", "SeminarSVC", "Tweet", "UserAggregate", "evaluate",
    "featurize", "ingest_stream", "load_corpus", "loocv", "normalize_arabic",
]
