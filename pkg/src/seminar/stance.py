"""Pro/anti stance labeling by retweet-consistency label propagation.

Starting from manually labeled seed users, every round (1) tags the
topic-mentioning tweets of labeled users with their stance and (2) labels
each unlabeled user whose retweets of tagged tweets agree consistently
enough with one stance.  Labels are write-once.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from sklearn.base import BaseEstimator

from .corpus import Corpus, Tweet, normalize_tag

STANCES = ("pro", "anti")


@dataclass(frozen=True)
class PropagationConfig:
    topic_terms: frozenset[str] = frozenset()
    max_iterations: int = 3
    min_evidence: int = 5
    consistency: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.consistency <= 1.0:
            raise ValueError("consistency must be in (0.5, 1]")
        if self.min_evidence < 1:
            raise ValueError("min_evidence must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        object.__setattr__(self, "topic_terms",
                           frozenset(normalize_tag(t) for t in self.topic_terms))


@dataclass
class StanceState:
    labels: dict[str, str] = field(default_factory=dict)
    iteration_added: dict[str, int] = field(default_factory=dict)
    tagged_tweets: dict[str, str] = field(default_factory=dict)

    def add(self, user_id: str, stance: str, iteration: int) -> None:
        if user_id in self.labels:
            return
        self.labels[user_id] = stance
        self.iteration_added[user_id] = iteration

    def rounds(self) -> dict[int, dict[str, str]]:
        out: dict[int, dict[str, str]] = {}
        for u in sorted(self.labels):
            out.setdefault(self.iteration_added[u], {})[u] = self.labels[u]
        return dict(sorted(out.items()))


def mentions_topic(t: Tweet, terms: frozenset[str]) -> bool:
    return not (terms.isdisjoint(t.tokens) and terms.isdisjoint(t.hashtags)
                and terms.isdisjoint(t.mentions))


def _content_key(username: str, tokens: list[str]) -> tuple:
    return (username, tuple(tokens))


def _retweet_key(t: Tweet) -> tuple:
    # "RT @author: original text" -> the original's tokens
    toks = list(t.tokens)
    if toks and toks[0] == "rt":
        toks = toks[1:]
    return _content_key(t.retweet_of or "", toks)


def tag_topic_tweets(state: StanceState, corpus: Iterable[Tweet],
                     topic_terms: Iterable[str]) -> dict[str, str]:
    """Tag every topic tweet authored by a labeled user with that user's stance."""
    terms = frozenset(normalize_tag(t) for t in topic_terms)
    for t in corpus:
        stance = state.labels.get(t.user_id)
        if stance is not None and t.tweet_id not in state.tagged_tweets \
                and mentions_topic(t, terms):
            state.tagged_tweets[t.tweet_id] = stance
    return state.tagged_tweets


def _evidence(state: StanceState, corpus: Iterable[Tweet]) -> dict[str, Counter]:
    tweets = list(corpus)
    by_content: dict[tuple, str] = {}
    for t in tweets:
        stance = state.tagged_tweets.get(t.tweet_id)
        if stance is not None and t.retweet_of is None:
            by_content.setdefault(_content_key(t.username, t.tokens), stance)
    ev: dict[str, Counter] = {}
    for t in tweets:
        if t.retweet_of is None or t.user_id in state.labels:
            continue
        if t.retweeted_id is not None:
            stance = state.tagged_tweets.get(t.retweeted_id)
        else:
            stance = by_content.get(_retweet_key(t))
        if stance is not None:
            ev.setdefault(t.user_id, Counter())[stance] += 1
    return ev


def propagate_step(state: StanceState, corpus: Iterable[Tweet],
                   cfg: PropagationConfig) -> dict[str, str]:
    """Return the users that qualify for a stance this round (not yet committed).

    A user qualifies for stance ``s`` when they retweeted at least
    ``min_evidence`` tagged tweets and the share tagged ``s`` is at least
    ``consistency``.  Retweets are matched by ``retweeted_id``, or by author
    and text when the archive lacks it.
    """
    new = {}
    for user, counts in sorted(_evidence(state, corpus).items()):
        total = sum(counts.values())
        if total < cfg.min_evidence:
            continue
        hits = [s for s in STANCES if counts[s] / total >= cfg.consistency]
        if len(hits) == 1:
            new[user] = hits[0]
    return new


def propagate(seeds: Mapping[str, str], corpus: Corpus | Iterable[Tweet],
              cfg: PropagationConfig) -> StanceState:
    if not seeds:
        raise ValueError("empty seeds")
    bad = {s for s in seeds.values()} - set(STANCES)
    if bad:
        raise ValueError(f"unknown stances {sorted(bad)}")
    tweets = list(corpus)
    state = StanceState()
    for u in sorted(seeds):
        state.add(u, seeds[u], 0)
    for r in range(1, cfg.max_iterations + 1):
        tag_topic_tweets(state, tweets, cfg.topic_terms)
        new = propagate_step(state, tweets, cfg)
        if not new:
            break
        for u, s in new.items():
            state.add(u, s, r)
    tag_topic_tweets(state, tweets, cfg.topic_terms)
    return state


def sample_for_validation(state: StanceState, k: int, seed: int = 0) -> list[str]:
    """Uniform sample of ``k`` labeled users without replacement."""
    users = sorted(state.labels)
    if k > len(users):
        raise ValueError(f"k={k} exceeds the {len(users)} labeled users")
    return random.Random(seed).sample(users, k)


class StancePropagator(BaseEstimator):
    """Estimator wrapper: ``fit(tweets, seeds)`` sets ``labels_`` and ``state_``."""

    def __init__(self, topic_terms=(), max_iterations=3, min_evidence=5, consistency=1.0):
        self.topic_terms = topic_terms
        self.max_iterations = max_iterations
        self.min_evidence = min_evidence
        self.consistency = consistency

    def fit(self, X, y: Mapping[str, str]):
        cfg = PropagationConfig(frozenset(self.topic_terms), self.max_iterations,
                                self.min_evidence, self.consistency)
        self.state_ = propagate(y, X, cfg)
        self.labels_ = dict(sorted(self.state_.labels.items()))
        return self

    def predict(self, user_ids: Iterable[str]) -> list[str | None]:
        return [self.labels_.get(u) for u in user_ids]


def read_stance_file(path) -> dict[str, str]:
    """Read ``user_id<TAB>stance[<TAB>iteration]`` rows; a header line is optional."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if not parts[0] or parts[0].startswith("#") or parts[0] == "user_id":
                continue
            if len(parts) < 2 or parts[1] not in STANCES:
                raise ValueError(f"{path}: bad stance row {line.rstrip()!r}")
            out[parts[0]] = parts[1]
    return out


def write_stance_file(path, state: StanceState) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id\tstance\titeration_added\n")
        for u in sorted(state.labels):
            fh.write(f"{u}\t{state.labels[u]}\t{state.iteration_added[u]}\n")
