"""Hashtag campaign scoring, ranking and mainstream-penetration statistics.

A campaign is a hashtag whose daily usage is both heavy and bursty.  It is
scored as the population standard deviation of its daily counts over the
window divided by its total volume.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Tweet, normalize_tag


@dataclass(frozen=True)
class CampaignScore:
    hashtag: str
    daily_counts: tuple[int, ...]
    total: int
    sigma: float
    score: float


@dataclass(frozen=True)
class PenetrationReport:
    appearance_pct: float
    avg_rank: float | None
    volume_magnification: float | None
    shared: tuple[str, ...]
    seminar_top: tuple[str, ...]
    reference_top: tuple[str, ...]


def _window(window: tuple[int, int]) -> tuple[int, int]:
    start, end = window
    if end < start:
        raise ValueError("empty window")
    return start, end


class HashtagIndex:
    """Per-hashtag daily counts for one group of users.

    ``per_tweet=False`` (default) counts every occurrence of a tag;
    ``per_tweet=True`` counts each tweet at most once per tag.
    """

    def __init__(self, tweets: Iterable[Tweet], users: Iterable[str] | None = None,
                 per_tweet: bool = False):
        users = None if users is None else set(users)
        self.days: dict[str, Counter] = {}
        for t in tweets:
            if users is not None and t.user_id not in users:
                continue
            tags = set(t.hashtags) if per_tweet else t.hashtags
            for h in tags:
                c = self.days.get(h)
                if c is None:
                    c = self.days[h] = Counter()
                c[t.day_index] += 1

    def series(self, hashtag: str, window: tuple[int, int]) -> list[int]:
        start, end = _window(window)
        c = self.days.get(normalize_tag(hashtag), Counter())
        return [c.get(d, 0) for d in range(start, end + 1)]

    def volumes(self, window: tuple[int, int]) -> Counter:
        start, end = _window(window)
        out = Counter()
        for h, c in self.days.items():
            v = sum(n for d, n in c.items() if start <= d <= end)
            if v:
                out[h] = v
        return out


def daily_series(corpus: Iterable[Tweet], users: Iterable[str] | None, hashtag: str,
                 window: tuple[int, int], per_tweet: bool = False) -> list[int]:
    return HashtagIndex(corpus, users, per_tweet).series(hashtag, window)


def _pstdev(xs: Sequence[int]) -> float:
    # integer sums keep the variance exact up to the final division and sqrt
    n = len(xs)
    s = sum(xs)
    ss = sum(x * x for x in xs)
    num = n * ss - s * s
    return math.sqrt(num) / n if num > 0 else 0.0


def campaign_score(daily_counts: Sequence[int], hashtag: str = "") -> CampaignScore:
    counts = tuple(int(c) for c in daily_counts)
    if any(c < 0 for c in counts):
        raise ValueError("daily counts must be non-negative")
    total = sum(counts)
    if total <= 0:
        raise ValueError("no volume")
    sigma = _pstdev(counts)
    return CampaignScore(hashtag, counts, total, sigma, sigma / total)


def _score_all(index: HashtagIndex, window, min_volume: int = 1) -> list[CampaignScore]:
    out = []
    for h, v in index.volumes(window).items():
        if v >= min_volume:
            out.append(campaign_score(index.series(h, window), h))
    return out


def rank_campaigns(corpus: Iterable[Tweet], users: Iterable[str] | None,
                   window: tuple[int, int], min_volume: int, k: int = 15,
                   per_tweet: bool = False) -> list[CampaignScore]:
    """Hashtags with volume >= ``min_volume`` ordered by score, best first."""
    if min_volume <= 0:
        raise ValueError("min_volume must be positive")
    scores = _score_all(HashtagIndex(corpus, users, per_tweet), window, min_volume)
    scores.sort(key=lambda c: (-c.score, -c.total, c.hashtag))
    return scores[:k]


def top_by_volume(index: HashtagIndex, window, K: int,
                  score_floor: float | None = None) -> list[tuple[str, int]]:
    """Volume-ranked (hashtag, volume) list, optionally keeping only score > floor."""
    vols = index.volumes(window)
    items = []
    for h, v in vols.items():
        if score_floor is not None and campaign_score(index.series(h, window)).score <= score_floor:
            continue
        items.append((h, v))
    items.sort(key=lambda hv: (-hv[1], hv[0]))
    return items[:K]


def penetration(seminar_group: Iterable[str], reference_group: Iterable[str],
                corpus: Iterable[Tweet], window: tuple[int, int], K: int = 100,
                score_floor: float = 0.02, per_tweet: bool = False) -> PenetrationReport:
    """How far a seminar group's top hashtags reach the reference population.

    Both groups' lists hold the top-``K`` hashtags by volume among those
    scoring above ``score_floor``.  ``avg_rank`` is the mean 1-based rank of
    the shared tags in the reference list; ``volume_magnification`` is the
    reference volume over the seminar volume, summed over shared tags.  Both
    are ``None`` when nothing is shared.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    tweets = list(corpus)
    sem = top_by_volume(HashtagIndex(tweets, seminar_group, per_tweet), window, K, score_floor)
    ref = top_by_volume(HashtagIndex(tweets, reference_group, per_tweet), window, K, score_floor)
    if not sem:
        raise ValueError("empty seminar hashtag list")
    ref_rank = {h: i + 1 for i, (h, _) in enumerate(ref)}
    ref_vol = dict(ref)
    shared = [(h, v) for h, v in sem if h in ref_rank]
    if shared:
        avg_rank = sum(ref_rank[h] for h, _ in shared) / len(shared)
        mag = sum(ref_vol[h] for h, _ in shared) / sum(v for _, v in shared)
    else:
        avg_rank = mag = None
    return PenetrationReport(len(shared) / len(sem), avg_rank, mag,
                             tuple(h for h, _ in shared), tuple(h for h, _ in sem),
                             tuple(h for h, _ in ref))


def shared_hashtags(group_a: Iterable[str], group_b: Iterable[str],
                    corpus: Iterable[Tweet], K: int = 100,
                    window: tuple[int, int] | None = None,
                    per_tweet: bool = False) -> list[tuple[str, float, float]]:
    """Tags in both groups' top-``K`` volume lists with each camp's usage share."""
    if K < 1:
        raise ValueError("K must be >= 1")
    tweets = list(corpus)
    if window is None:
        days = [t.day_index for t in tweets] or [0]
        window = (min(days), max(days))
    a = dict(top_by_volume(HashtagIndex(tweets, group_a, per_tweet), window, K))
    b = dict(top_by_volume(HashtagIndex(tweets, group_b, per_tweet), window, K))
    both = sorted(set(a) & set(b), key=lambda h: (-(a[h] + b[h]), h))
    return [(h, a[h] / (a[h] + b[h]), b[h] / (a[h] + b[h])) for h in both]


def write_campaign_report(path, scores: Sequence[CampaignScore]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rank\thashtag\ttotal\tsigma\tscore\tdaily_counts\n")
        for i, c in enumerate(scores, 1):
            fh.write(f"{i}\t{c.hashtag}\t{c.total}\t{c.sigma!r}\t{c.score!r}\t"
                     + ",".join(map(str, c.daily_counts)) + "\n")


def write_series(path, scores: Sequence[CampaignScore], start_day: int) -> None:
    """Long-format day series (hashtag, day, count) for plotting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("hashtag\tday\tcount\n")
        for c in scores:
            for d, n in enumerate(c.daily_counts, start_day):
                fh.write(f"{c.hashtag}\t{d}\t{n}\n")
