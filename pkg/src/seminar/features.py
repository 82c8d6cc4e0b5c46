"""Per-user feature vectors: interaction, diversity and style fractions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import UserAggregate

INTERACTION = ("pct_retweets", "pct_urls", "pct_hashtags", "pct_mentions", "pct_media")
STYLE = ("pct_sentiment", "pct_vulgar")


class InsufficientHistory(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    retweet_mention_top_n: tuple[int, ...] = (1, 3, 10, 20)
    hashtag_top_n: tuple[int, ...] = (5, 15)
    word_top_n: tuple[int, ...] = (10, 30, 50)
    min_tweets: int = 10
    # "all": divide by every kept tweet; "class": by tweets containing that item class
    denominator: str = "all"

    def __post_init__(self):
        for ns in (self.retweet_mention_top_n, self.hashtag_top_n, self.word_top_n):
            if not ns or any(n < 1 for n in ns) or any(a >= b for a, b in zip(ns, ns[1:])):
                raise ValueError(f"top-n values must be positive and increasing: {ns}")
        if self.denominator not in ("all", "class"):
            raise ValueError(f"unknown denominator {self.denominator!r}")

    @property
    def diversity_names(self) -> tuple[str, ...]:
        return (
            tuple(f"top{n}_retweeted" for n in self.retweet_mention_top_n)
            + tuple(f"top{n}_mentioned" for n in self.retweet_mention_top_n)
            + tuple(f"top{n}_hashtags" for n in self.hashtag_top_n)
            + tuple(f"top{n}_words" for n in self.word_top_n)
        )

    @property
    def names(self) -> tuple[str, ...]:
        return INTERACTION + self.diversity_names + STYLE

    def groups(self) -> dict[str, tuple[str, ...]]:
        return {"interaction": INTERACTION, "diversity": self.diversity_names, "style": STYLE}


DEFAULT_CONFIG = FeatureConfig()
FEATURE_NAMES = DEFAULT_CONFIG.names
FEATURE_GROUPS = DEFAULT_CONFIG.groups()


def feature_subset(spec: str | Iterable[str], cfg: FeatureConfig = DEFAULT_CONFIG) -> list[str]:
    """Resolve ``"interaction+diversity"``, ``"all"`` or a list of group names to columns."""
    groups = cfg.groups()
    if isinstance(spec, str):
        spec = list(groups) if spec == "all" else spec.replace(",", "+").split("+")
    wanted = set()
    for g in spec:
        g = g.strip().lower()
        if g not in groups:
            raise ValueError(f"unknown feature group {g!r}")
        wanted.update(groups[g])
    return [n for n in cfg.names if n in wanted]


def _check(a: UserAggregate, cfg: FeatureConfig) -> None:
    if a.total_tweets < max(cfg.min_tweets, 1):
        raise InsufficientHistory(
            f"insufficient history: user {a.user_id} has {a.total_tweets} tweets "
            f"(< {max(cfg.min_tweets, 1)})")


def _frac(num: int, den: int) -> float:
    return num / den if den else 0.0


def interaction_features(a: UserAggregate, cfg: FeatureConfig = DEFAULT_CONFIG) -> list[float]:
    _check(a, cfg)
    n = a.total_tweets
    return [_frac(c, n) for c in (a.retweet_count, a.url_count, a.hashtag_tweet_count,
                                  a.mention_tweet_count, a.media_count)]


def top_items(tally: Mapping[str, int], n: int) -> list[str]:
    """The ``n`` most frequent items; ties broken by lexicographic order."""
    return [k for k, _ in sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))[:n]]


def _coverage(a: UserAggregate, slot: int, top: set[str]) -> int:
    return sum(cnt for sig, cnt in a.signatures.items() if not top.isdisjoint(sig[slot]))


def diversity_features(a: UserAggregate, cfg: FeatureConfig = DEFAULT_CONFIG) -> list[float]:
    """Share of tweets containing at least one of the user's top-n items, per class."""
    _check(a, cfg)
    everything = a.total_tweets
    if cfg.denominator == "class":
        word_tweets = sum(cnt for sig, cnt in a.signatures.items() if sig[2])
        dens = (a.retweet_count, a.mention_tweet_count, a.hashtag_tweet_count, word_tweets)
    else:
        dens = (everything,) * 4
    out = []
    rt = a.retweeted_account_tally
    # each retweet has exactly one source account, so coverage is a tally sum
    for n in cfg.retweet_mention_top_n:
        out.append(_frac(sum(rt[k] for k in top_items(rt, n)), dens[0]))
    for slot, tally, ns, den in (
        (0, a.mentioned_account_tally, cfg.retweet_mention_top_n, dens[1]),
        (1, a.hashtag_tally, cfg.hashtag_top_n, dens[2]),
        (2, a.word_tally, cfg.word_top_n, dens[3]),
    ):
        for n in ns:
            out.append(_frac(_coverage(a, slot, set(top_items(tally, n))), den))
    return out


def style_features(a: UserAggregate, cfg: FeatureConfig = DEFAULT_CONFIG) -> list[float]:
    _check(a, cfg)
    return [_frac(a.sentiment_tweet_count, a.total_tweets),
            _frac(a.vulgar_tweet_count, a.total_tweets)]


def featurize(a: UserAggregate, cfg: FeatureConfig = DEFAULT_CONFIG) -> np.ndarray:
    return np.array(interaction_features(a, cfg) + diversity_features(a, cfg)
                    + style_features(a, cfg), dtype=float)


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Transform a sequence of :class:`UserAggregate` into a feature matrix.

    Parameters mirror :class:`FeatureConfig`.  Users below ``min_tweets``
    raise :class:`InsufficientHistory` unless ``skip_insufficient`` is set,
    in which case they are dropped and listed in ``skipped_``.
    """

    def __init__(self, retweet_mention_top_n=(1, 3, 10, 20), hashtag_top_n=(5, 15),
                 word_top_n=(10, 30, 50), min_tweets=10, denominator="all",
                 skip_insufficient=False):
        self.retweet_mention_top_n = retweet_mention_top_n
        self.hashtag_top_n = hashtag_top_n
        self.word_top_n = word_top_n
        self.min_tweets = min_tweets
        self.denominator = denominator
        self.skip_insufficient = skip_insufficient

    def _config(self) -> FeatureConfig:
        return FeatureConfig(tuple(self.retweet_mention_top_n), tuple(self.hashtag_top_n),
                             tuple(self.word_top_n), self.min_tweets, self.denominator)

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.feature_names_out_ = np.array(self.config_.names, dtype=object)
        self.n_features_out_ = len(self.feature_names_out_)
        return self

    def transform(self, X: Sequence[UserAggregate]) -> np.ndarray:
        cfg = getattr(self, "config_", None) or self._config()
        rows, kept, skipped = [], [], []
        for a in X:
            try:
                rows.append(featurize(a, cfg))
                kept.append(a.user_id)
            except InsufficientHistory:
                if not self.skip_insufficient:
                    raise
                skipped.append(a.user_id)
        self.user_ids_ = kept
        self.skipped_ = skipped
        if not rows:
            return np.zeros((0, len(cfg.names)))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array(self._config().names, dtype=object)


def write_feature_matrix(path, user_ids: Sequence[str], X: np.ndarray,
                         names: Sequence[str] = FEATURE_NAMES) -> None:
    """Tab-separated matrix: header with feature names, one row per user."""
    X = np.asarray(X, dtype=float)
    if X.shape != (len(user_ids), len(names)):
        raise ValueError(f"matrix shape {X.shape} does not match ids/names")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id\t" + "\t".join(names) + "\n")
        for uid, row in zip(user_ids, X):
            fh.write(uid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


def read_feature_matrix(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if not header or header[0] != "user_id":
            raise ValueError(f"{path}: missing user_id header")
        ids, rows = [], []
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(header):
                raise ValueError(f"{path}: row for {parts[0]!r} has {len(parts)} fields")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    X = np.array(rows, dtype=float).reshape(len(rows), len(header) - 1)
    return ids, header[1:], X
