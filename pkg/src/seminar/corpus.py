"""Tweet ingestion, Arabic normalization and per-user aggregation.

Archived tweets arrive as line-delimited JSON.  Each line is parsed into a
:class:`Tweet`, auto-generated religious posts are dropped, and the rest are
folded into one :class:`UserAggregate` per author.  Aggregates are mergeable
(associative and commutative), so a corpus may be ingested in shards and the
pieces combined afterwards with an identical result.
"""
from __future__ import annotations

import gzip
import io
import json
import logging
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple
from urllib.parse import urlsplit

logger = logging.getLogger(__name__)

DEFAULT_START = "2015-12-01"

DEFAULT_SERVICE_DOMAINS = frozenset({
    "du3a.org", "ghared.com", "7asnat.com", "mezani.net",
    "d3waapp.org", "zad-muslim.com", "rtw8.com",
})
DEFAULT_BANNED_HASHTAGS = frozenset({"quran", "hadith"})
DEFAULT_MEDIA_HOSTS = frozenset({
    "pic.twitter.com", "pbs.twimg.com", "twitpic.com", "instagram.com",
    "imgur.com", "i.imgur.com", "yfrog.com",
})

# Arabic diacritics (tashkeel), superscript alef and Quranic marks
_DIACRITICS = (
    [chr(c) for c in range(0x0610, 0x061B)]
    + [chr(c) for c in range(0x064B, 0x0660)]
    + ["ٰ", "ـ"]  # superscript alef, tatweel
)
_CHAR_MAP = str.maketrans(
    {**{c: None for c in _DIACRITICS},
     "آ": "ا", "أ": "ا", "إ": "ا",  # alef variants
     "ة": "ه",  # ta marbuta -> ha
     "ى": "ي"}  # alef maqsura -> ya
)
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TOKEN_RE = re.compile(r"([#@]?)(\w+)")


class Token(NamedTuple):
    text: str
    kind: str  # "word", "hashtag" or "mention"

    def render(self) -> str:
        prefix = {"hashtag": "#", "mention": "@"}.get(self.kind, "")
        return prefix + self.text


def normalize_text(text: str) -> str:
    """Character-level normalization: strip diacritics, unify letter variants, casefold."""
    return text.translate(_CHAR_MAP).casefold()


def _split(text: str) -> tuple[list[str], list[str], list[str]]:
    """Return (words, hashtags, mentions) of already-normalized text, URLs removed."""
    words: list[str] = []
    hashtags: list[str] = []
    mentions: list[str] = []
    for prefix, body in _TOKEN_RE.findall(_URL_RE.sub(" ", text)):
        if not prefix:
            words.append(body)
        elif prefix == "#":
            hashtags.append(body)
        else:
            mentions.append(body)
    return words, hashtags, mentions


def normalize_arabic(text: str) -> list[Token]:
    """Normalize ``text`` and split it into word, hashtag and mention tokens.

    >>> [t.text for t in normalize_arabic("أحمد إلى آخر")]
    ['احمد', 'الي', 'اخر']
    >>> normalize_arabic("RT @x #Quran")
    [Token(text='rt', kind='word'), Token(text='x', kind='mention'), Token(text='quran', kind='hashtag')]
    """
    if not text:
        return []
    out = []
    for prefix, body in _TOKEN_RE.findall(_URL_RE.sub(" ", normalize_text(text))):
        kind = "hashtag" if prefix == "#" else "mention" if prefix == "@" else "word"
        out.append(Token(body, kind))
    return out


def normalize_tag(tag: str) -> str:
    """Normalize a hashtag or username as stored in records (leading sigil removed)."""
    return normalize_text(tag.strip().lstrip("#@"))


# ---------------------------------------------------------------------------
# Lexicons and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lexicon:
    """A normalized word/phrase list.  Phrases match as exact token sequences."""

    name: str
    entries: frozenset[tuple[str, ...]]
    match_mode: str = "word"

    def __post_init__(self):
        if not self.entries:
            raise ValueError(f"lexicon {self.name!r} has no entries")
        if self.match_mode not in ("word", "phrase"):
            raise ValueError(f"unknown match_mode {self.match_mode!r}")
        singles = frozenset(e[0] for e in self.entries if len(e) == 1)
        phrases: dict[str, list[tuple[str, ...]]] = {}
        for e in sorted(self.entries):
            if len(e) > 1:
                phrases.setdefault(e[0], []).append(e)
        object.__setattr__(self, "_singles", singles)
        object.__setattr__(self, "_phrases", phrases)

    @classmethod
    def from_entries(cls, name: str, entries: Iterable[str]) -> "Lexicon":
        normed = set()
        for raw in entries:
            toks = tuple(t.text for t in normalize_arabic(raw))
            if toks:
                normed.add(toks)
        mode = "phrase" if any(len(e) > 1 for e in normed) else "word"
        return cls(name, frozenset(normed), mode)

    @classmethod
    def from_file(cls, path, name: str | None = None) -> "Lexicon":
        return cls.from_entries(name or Path(path).stem, read_list_file(path))

    def matches(self, words: list[str]) -> bool:
        if not self._singles.isdisjoint(words):
            return True
        if self.match_mode == "phrase":
            phrases = self._phrases
            for i, w in enumerate(words):
                for p in phrases.get(w, ()):
                    if tuple(words[i:i + len(p)]) == p:
                        return True
        return False


def read_list_file(path) -> list[str]:
    """Read a one-entry-per-line UTF-8 file; lines starting with ``#`` are comments."""
    with open(path, encoding="utf-8") as fh:
        return _parse_list(fh)


def _parse_list(lines: Iterable[str]) -> list[str]:
    out = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def _data_lines(name: str) -> list[str]:
    text = resources.files("seminar").joinpath("data").joinpath(name).read_text(encoding="utf-8")
    return _parse_list(text.splitlines())


def default_stopwords() -> frozenset[str]:
    return load_stopwords(None)


def load_stopwords(path=None) -> frozenset[str]:
    raw = _data_lines("stopwords.txt") if path is None else read_list_file(path)
    return frozenset(t.text for line in raw for t in normalize_arabic(line))


def sample_lexicon(name: str) -> Lexicon:
    """Tiny shipped lexicon (``"sentiment"`` or ``"vulgar"``), for tests and demos only."""
    return Lexicon.from_entries(name, _data_lines(f"{name}_sample.txt"))


@dataclass(frozen=True)
class FilterConfig:
    service_domains: frozenset[str] = DEFAULT_SERVICE_DOMAINS
    banned_hashtags: frozenset[str] = DEFAULT_BANNED_HASHTAGS
    banned_retweet_sources: frozenset[str] = frozenset()

    @classmethod
    def from_dict(cls, d: Mapping) -> "FilterConfig":
        base = cls()
        return cls(
            service_domains=frozenset(
                s.lower() for s in d.get("service_domains", base.service_domains)),
            banned_hashtags=frozenset(
                normalize_tag(h) for h in d.get("banned_hashtags", base.banned_hashtags)),
            banned_retweet_sources=frozenset(
                normalize_tag(u) for u in d.get("banned_retweet_sources", ())),
        )


def url_host(url: str) -> str:
    if "//" not in url:
        url = "//" + url
    try:
        host = urlsplit(url).hostname or ""
    except ValueError:
        return ""
    return host[4:] if host.startswith("www.") else host


def _host_in(host: str, domains: frozenset[str]) -> bool:
    if host in domains:
        return True
    # subdomains: a.b.du3a.org -> b.du3a.org -> du3a.org
    while "." in host:
        host = host.split(".", 1)[1]
        if host in domains:
            return True
    return False


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class Tweet:
    tweet_id: str
    user_id: str
    username: str
    timestamp: float
    day_index: int
    text: str
    tokens: list[str]
    hashtags: list[str]
    mentions: list[str]
    urls: list[str]
    has_media: bool = False
    retweet_of: str | None = None
    retweeted_id: str | None = None
    self_declared_location: str | None = None


class MalformedRecord(ValueError):
    pass


# Field paths for raw Twitter API (v1.1) statuses.  "a.b[].c" maps over a list.
TWITTER_API_FIELDS = {
    "id": "id_str",
    "user_id": "user.id_str",
    "username": "user.screen_name",
    "created_at": "created_at",
    "text": "full_text|text",
    "hashtags": "entities.hashtags[].text",
    "mentions": "entities.user_mentions[].screen_name",
    "urls": "entities.urls[].expanded_url",
    "has_media": "entities.media",
    "retweet_of": "retweeted_status.user.screen_name",
    "retweeted_id": "retweeted_status.id_str",
    "location": "user.location",
}


def _lookup(obj, path: str):
    for alt in path.split("|"):
        val = _walk(obj, alt.split("."))
        if val is not None:
            return val
    return None


def _walk(obj, parts: list[str]):
    for i, part in enumerate(parts):
        if obj is None:
            return None
        if part.endswith("[]"):
            seq = obj.get(part[:-2]) if isinstance(obj, dict) else None
            if seq is None:
                return None
            return [v for v in (_walk(item, parts[i + 1:]) for item in seq) if v is not None]
        obj = obj.get(part) if isinstance(obj, dict) else None
    return obj


def remap_record(raw: Mapping, field_map: Mapping[str, str]) -> dict:
    """Project a raw archive record onto the canonical input schema."""
    return {name: _lookup(raw, path) for name, path in field_map.items()}


_TWITTER_TIME = "%a %b %d %H:%M:%S %z %Y"


def parse_time(value) -> float:
    """Seconds since the epoch (UTC) from ISO-8601, Twitter's format, or a number."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise MalformedRecord(f"bad created_at {value!r}")
    s = value.strip()
    try:
        if s.endswith("Z"):
            s = s[:-1] + "+00:00"
        dt = datetime.fromisoformat(s)
    except ValueError:
        try:
            dt = datetime.strptime(s, _TWITTER_TIME)
        except ValueError:
            raise MalformedRecord(f"bad created_at {value!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def corpus_start(start=DEFAULT_START) -> float:
    """Epoch seconds of the corpus start (a date string, datetime or epoch number)."""
    if isinstance(start, datetime):
        return (start if start.tzinfo else start.replace(tzinfo=timezone.utc)).timestamp()
    return parse_time(start)


def _str_list(value, what: str) -> list[str] | None:
    if value is None:
        return None
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise MalformedRecord(f"{what} must be a list of strings")
    return value


def parse_record(obj: Mapping, start: float | None = None,
                 media_hosts: frozenset[str] = DEFAULT_MEDIA_HOSTS) -> Tweet:
    """Build a :class:`Tweet` from one decoded input record.

    Hashtags and mentions are taken from the record when present and
    otherwise extracted from the text.  ``day_index`` counts whole days since
    ``start`` (0 when no start is given).  Raises :class:`MalformedRecord`.
    """
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object")
    tweet_id = obj.get("id")
    user_id = obj.get("user_id")
    if tweet_id is None or user_id is None or tweet_id == "" or user_id == "":
        raise MalformedRecord("missing id or user_id")
    text = obj.get("text") or ""
    if not isinstance(text, str):
        raise MalformedRecord("text must be a string")
    ts = parse_time(obj.get("created_at"))
    if start is not None and ts < start:
        raise MalformedRecord("created_at precedes corpus start")
    words, tags, ments = _split(normalize_text(text))
    rec_tags = _str_list(obj.get("hashtags"), "hashtags")
    rec_ments = _str_list(obj.get("mentions"), "mentions")
    urls = _str_list(obj.get("urls"), "urls") or []
    hashtags = tags if rec_tags is None else [normalize_tag(h) for h in rec_tags]
    mentions = ments if rec_ments is None else [normalize_tag(m) for m in rec_ments]
    hashtags = [h for h in hashtags if h and not any(c.isspace() for c in h)]
    mentions = [m for m in mentions if m and not any(c.isspace() for c in m)]
    has_media = bool(obj.get("has_media")) or any(
        _host_in(url_host(u), media_hosts) for u in urls)
    rt = obj.get("retweet_of")
    rt_id = obj.get("retweeted_id")
    loc = obj.get("location")
    if loc is not None and not isinstance(loc, str):
        raise MalformedRecord("location must be a string")
    return Tweet(
        tweet_id=str(tweet_id),
        user_id=str(user_id),
        username=normalize_tag(str(obj.get("username") or "")),
        timestamp=ts,
        day_index=0 if start is None else int((ts - start) // 86400),
        text=text,
        tokens=words,
        hashtags=hashtags,
        mentions=mentions,
        urls=urls,
        has_media=has_media,
        retweet_of=normalize_tag(str(rt)) if rt else None,
        retweeted_id=str(rt_id) if rt_id else None,
        self_declared_location=(loc.strip() or None) if loc else None,
    )


def is_religious_autopost(t: Tweet, cfg: FilterConfig) -> bool:
    """True if the tweet came from a religious auto-posting service."""
    if t.retweet_of is not None and t.retweet_of in cfg.banned_retweet_sources:
        return True
    if cfg.banned_hashtags and not cfg.banned_hashtags.isdisjoint(t.hashtags):
        return True
    return any(_host_in(url_host(u), cfg.service_domains) for u in t.urls)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

_COUNT_FIELDS = (
    "total_tweets", "retweet_count", "url_count", "hashtag_tweet_count",
    "mention_tweet_count", "media_count", "sentiment_tweet_count",
    "vulgar_tweet_count", "filtered_out_count",
)
_TALLY_FIELDS = (
    "retweeted_account_tally", "mentioned_account_tally", "hashtag_tally",
    "word_tally", "location_tally", "signatures",
)


@dataclass
class UserAggregate:
    """Per-user counters and item tallies.

    ``signatures`` counts tweets by their (mentions, hashtags, words) item
    sets, each a sorted tuple of distinct items.  It is what lets per-tweet
    coverage of any top-n item set be computed without the raw corpus.
    """

    user_id: str
    username: str = ""
    total_tweets: int = 0
    retweet_count: int = 0
    url_count: int = 0
    hashtag_tweet_count: int = 0
    mention_tweet_count: int = 0
    media_count: int = 0
    sentiment_tweet_count: int = 0
    vulgar_tweet_count: int = 0
    filtered_out_count: int = 0
    retweeted_account_tally: Counter = field(default_factory=Counter)
    mentioned_account_tally: Counter = field(default_factory=Counter)
    hashtag_tally: Counter = field(default_factory=Counter)
    word_tally: Counter = field(default_factory=Counter)
    location_tally: Counter = field(default_factory=Counter)
    signatures: Counter = field(default_factory=Counter)

    def merge(self, other: "UserAggregate") -> "UserAggregate":
        if other.user_id != self.user_id:
            raise ValueError(f"cannot merge {self.user_id!r} with {other.user_id!r}")
        names = [n for n in (self.username, other.username) if n]
        out = UserAggregate(self.user_id, min(names) if names else "")
        for name in _COUNT_FIELDS:
            setattr(out, name, getattr(self, name) + getattr(other, name))
        for name in _TALLY_FIELDS:
            c = Counter(getattr(self, name))
            c.update(getattr(other, name))
            setattr(out, name, c)
        return out

    __add__ = merge

    @property
    def location(self) -> str | None:
        if not self.location_tally:
            return None
        return min(self.location_tally.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def to_json(self) -> dict:
        d = {"user_id": self.user_id, "username": self.username}
        for name in _COUNT_FIELDS:
            d[name] = getattr(self, name)
        for name in _TALLY_FIELDS[:-1]:
            d[name] = dict(sorted(getattr(self, name).items()))
        d["signatures"] = [
            [list(m), list(h), list(w), n]
            for (m, h, w), n in sorted(self.signatures.items())
        ]
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "UserAggregate":
        agg = cls(d["user_id"], d.get("username", ""))
        for name in _COUNT_FIELDS:
            setattr(agg, name, int(d.get(name, 0)))
        for name in _TALLY_FIELDS[:-1]:
            setattr(agg, name, Counter(d.get(name, {})))
        agg.signatures = Counter({
            (tuple(m), tuple(h), tuple(w)): n for m, h, w, n in d.get("signatures", [])
        })
        return agg


@dataclass
class IngestResult:
    aggregates: dict[str, UserAggregate]
    lines: int = 0
    malformed: int = 0
    filtered: int = 0

    def merge(self, other: "IngestResult") -> "IngestResult":
        return IngestResult(
            merge_aggregates(self.aggregates, other.aggregates),
            self.lines + other.lines,
            self.malformed + other.malformed,
            self.filtered + other.filtered,
        )


def merge_aggregates(*maps: Mapping[str, UserAggregate]) -> dict[str, UserAggregate]:
    out: dict[str, UserAggregate] = {}
    for m in maps:
        for uid, agg in m.items():
            out[uid] = out[uid].merge(agg) if uid in out else agg.merge(UserAggregate(uid))
    return dict(sorted(out.items()))


class Aggregator:
    """Streaming accumulator of :class:`UserAggregate` objects."""

    def __init__(self, sentiment: Lexicon | None = None, vulgar: Lexicon | None = None,
                 cfg: FilterConfig | None = None, stopwords: frozenset[str] | None = None,
                 media_hosts: frozenset[str] = DEFAULT_MEDIA_HOSTS,
                 field_map: Mapping[str, str] | None = None):
        self.sentiment = sentiment
        self.vulgar = vulgar
        self.cfg = cfg or FilterConfig()
        self.stopwords = default_stopwords() if stopwords is None else stopwords
        self.media_hosts = media_hosts
        self.field_map = field_map
        self.result = IngestResult({})

    def _get(self, t: Tweet) -> UserAggregate:
        aggs = self.result.aggregates
        agg = aggs.get(t.user_id)
        if agg is None:
            agg = aggs[t.user_id] = UserAggregate(t.user_id, t.username)
        elif t.username and (not agg.username or t.username < agg.username):
            agg.username = t.username
        return agg

    def add_line(self, line: str) -> None:
        self.result.lines += 1
        if not line.strip():
            self.result.malformed += 1
            return
        try:
            obj = json.loads(line)
            if self.field_map is not None:
                obj = remap_record(obj, self.field_map)
            t = parse_record(obj, None, self.media_hosts)
        except (ValueError, TypeError, AttributeError):
            self.result.malformed += 1
            return
        self.add_tweet(t)

    def add_tweet(self, t: Tweet) -> None:
        agg = self._get(t)
        if is_religious_autopost(t, self.cfg):
            agg.filtered_out_count += 1
            self.result.filtered += 1
            return
        agg.total_tweets += 1
        if t.retweet_of is not None:
            agg.retweet_count += 1
            agg.retweeted_account_tally[t.retweet_of] += 1
        if t.urls:
            agg.url_count += 1
        if t.hashtags:
            agg.hashtag_tweet_count += 1
            agg.hashtag_tally.update(t.hashtags)
        if t.mentions:
            agg.mention_tweet_count += 1
            agg.mentioned_account_tally.update(t.mentions)
        if t.has_media:
            agg.media_count += 1
        words = t.tokens
        if self.sentiment is not None and self.sentiment.matches(words):
            agg.sentiment_tweet_count += 1
        if self.vulgar is not None and self.vulgar.matches(words):
            agg.vulgar_tweet_count += 1
        stop = self.stopwords
        content = [w for w in words if w not in stop]
        agg.word_tally.update(content)
        if t.self_declared_location:
            agg.location_tally[t.self_declared_location] += 1
        agg.signatures[(
            tuple(sorted(set(t.mentions))),
            tuple(sorted(set(t.hashtags))),
            tuple(sorted(set(content))),
        )] += 1


def iter_lines(source) -> Iterator[str]:
    """Yield text lines from a path (``.gz`` aware), a file object, or an iterable."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        opener = gzip.open if path.suffix == ".gz" else open
        try:
            fh = opener(path, "rt", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read {path}: {exc}") from exc
        with fh:
            yield from fh
    elif isinstance(source, io.IOBase):
        yield from source
    else:
        yield from source


def ingest_stream(source, sentiment: Lexicon | None = None, vulgar: Lexicon | None = None,
                  cfg: FilterConfig | None = None, *, stopwords: frozenset[str] | None = None,
                  media_hosts: frozenset[str] = DEFAULT_MEDIA_HOSTS,
                  field_map: Mapping[str, str] | None = None) -> IngestResult:
    """Aggregate every non-filtered tweet in ``source`` by author.

    Malformed lines are skipped and counted in ``IngestResult.malformed``.
    """
    agg = Aggregator(sentiment, vulgar, cfg, stopwords, media_hosts, field_map)
    for line in iter_lines(source):
        agg.add_line(line)
    agg.result.aggregates = dict(sorted(agg.result.aggregates.items()))
    return agg.result


def _ingest_chunk(args) -> IngestResult:
    lines, kwargs = args
    return ingest_stream(lines, **kwargs)


def ingest_files(paths: Iterable, sentiment: Lexicon | None = None,
                 vulgar: Lexicon | None = None, cfg: FilterConfig | None = None, *,
                 stopwords: frozenset[str] | None = None,
                 media_hosts: frozenset[str] = DEFAULT_MEDIA_HOSTS,
                 field_map: Mapping[str, str] | None = None,
                 threads: int = 1, chunk_lines: int = 50_000) -> IngestResult:
    """Ingest several files, optionally sharding lines across worker processes.

    The merged result does not depend on ``threads`` or ``chunk_lines``.
    """
    kwargs = dict(sentiment=sentiment, vulgar=vulgar, cfg=cfg,
                  stopwords=default_stopwords() if stopwords is None else stopwords,
                  media_hosts=media_hosts, field_map=field_map)
    paths = list(paths)
    if threads <= 1:
        total = IngestResult({})
        for p in paths:
            total = total.merge(ingest_stream(p, **kwargs))
        return total

    def chunks():
        for p in paths:
            it = iter_lines(p)
            while batch := list(islice(it, chunk_lines)):
                yield batch, kwargs

    total = IngestResult({})
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(_ingest_chunk, chunks()):
            total = total.merge(part)
    return total


def write_aggregates(aggregates: Mapping[str, UserAggregate], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for uid in sorted(aggregates):
            fh.write(json.dumps(aggregates[uid].to_json(), ensure_ascii=False,
                                sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_aggregates(path) -> dict[str, UserAggregate]:
    out = {}
    for line in iter_lines(path):
        if line.strip():
            agg = UserAggregate.from_json(json.loads(line))
            out[agg.user_id] = agg
    return out


# ---------------------------------------------------------------------------
# Tweet-level corpus (case-study analyses need individual tweets)
# ---------------------------------------------------------------------------

@dataclass
class Corpus:
    tweets: list[Tweet]
    start: float = 0.0
    malformed: int = 0
    filtered: int = 0
    duplicates: int = 0

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self.tweets)

    def by_user(self, users: Iterable[str] | None = None) -> Iterator[Tweet]:
        if users is None:
            return iter(self.tweets)
        users = set(users)
        return (t for t in self.tweets if t.user_id in users)


def load_corpus(source, start=DEFAULT_START, cfg: FilterConfig | None = None, *,
                media_hosts: frozenset[str] = DEFAULT_MEDIA_HOSTS,
                field_map: Mapping[str, str] | None = None) -> Corpus:
    """Parse a tweet stream into memory, dropping religious autoposts.

    Tweets are ordered by tweet_id so downstream results do not depend on
    input order.  Repeated tweet ids keep the first occurrence.
    """
    cfg = cfg or FilterConfig()
    t0 = corpus_start(start)
    corpus = Corpus([], t0)
    seen: set[str] = set()
    for line in iter_lines(source):
        try:
            obj = json.loads(line)
            if field_map is not None:
                obj = remap_record(obj, field_map)
            t = parse_record(obj, t0, media_hosts)
        except (ValueError, TypeError, AttributeError):
            corpus.malformed += 1
            continue
        if t.tweet_id in seen:
            corpus.duplicates += 1
            continue
        seen.add(t.tweet_id)
        if is_religious_autopost(t, cfg):
            corpus.filtered += 1
            continue
        corpus.tweets.append(t)
    corpus.tweets.sort(key=lambda t: t.tweet_id)
    return corpus


# ---------------------------------------------------------------------------
# Group reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupStats:
    users: int
    tweets: int
    avg_tweets: float
    topic_tweets: int
    avg_topic_tweets: float


def _topic_set(topic_terms: Iterable[str]) -> frozenset[str]:
    return frozenset(normalize_tag(t) for t in topic_terms if normalize_tag(t))


def topic_tweet_count(agg: UserAggregate, topic_terms: Iterable[str]) -> int:
    """Tweets whose words, hashtags or mentions include any topic term."""
    terms = _topic_set(topic_terms)
    return sum(n for (m, h, w), n in agg.signatures.items()
               if not (terms.isdisjoint(w) and terms.isdisjoint(h) and terms.isdisjoint(m)))


def group_stats(users: Iterable[str], aggregates: Mapping[str, UserAggregate],
                topic_terms: Iterable[str] = ()) -> GroupStats:
    users = sorted(set(users))
    if not users:
        raise ValueError("empty group")
    missing = [u for u in users if u not in aggregates]
    if missing:
        raise KeyError(f"users without aggregates: {missing[:5]}")
    terms = _topic_set(topic_terms)
    tweets = sum(aggregates[u].total_tweets for u in users)
    topic = sum(topic_tweet_count(aggregates[u], terms) for u in users) if terms else 0
    n = len(users)
    return GroupStats(n, tweets, round(tweets / n, 1), topic, round(topic / n, 1))


def top_retweeted(users: Iterable[str], aggregates: Mapping[str, UserAggregate],
                  k: int = 10) -> list[tuple[str, int]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    tally: Counter = Counter()
    for u in set(users):
        tally.update(aggregates[u].retweeted_account_tally)
    return sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def location_breakdown(users: Iterable[str], aggregates: Mapping[str, UserAggregate],
                       k: int = 5) -> list[tuple[str, int, int]]:
    """(location, user count, tweet count) buckets ranked by tweet count."""
    buckets: dict[str, list[int]] = {}
    for u in set(users):
        agg = aggregates[u]
        b = buckets.setdefault(agg.location or "undeclared", [0, 0])
        b[0] += 1
        b[1] += agg.total_tweets
    rows = [(loc, n, tw) for loc, (n, tw) in buckets.items()]
    rows.sort(key=lambda r: (-r[2], -r[1], r[0]))
    return rows[:k]
