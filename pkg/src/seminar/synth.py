"""Synthetic tweet corpora with planted seminar cliques, campaigns and stances.

Output is the ingestion input format plus gold files, and it is a pure
function of the config: the same seed gives byte-identical files.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator

import numpy as np

from .corpus import DEFAULT_START, _data_lines


@dataclass(frozen=True)
class GroupProfile:
    """Mean per-tweet rates for one user group; ``spread`` is the per-user jitter."""

    p_retweet: float
    p_url: float
    p_hashtag: float
    p_mention: float
    p_media: float
    p_sentiment: float
    p_vulgar: float
    spread: float = 0.1


SEMINAR_PROFILE = GroupProfile(0.50, 0.40, 0.50, 0.20, 0.30, 0.26, 0.10, spread=0.12)
NORMAL_PROFILE = GroupProfile(0.42, 0.20, 0.40, 0.38, 0.12, 0.12, 0.03, spread=0.12)


@dataclass(frozen=True)
class CliqueSpec:
    name: str
    accounts: int = 6
    hashtags: int = 8
    words: int = 30
    concentration: float = 0.3
    # per-user jitter of the concentration level
    spread: float = 0.15
    location: str | None = None


@dataclass(frozen=True)
class CampaignSpec:
    hashtag: str
    group: str  # "seminar", "normal", "all", or a clique name
    day: int
    count: int


@dataclass(frozen=True)
class StanceSpec:
    topic: str = "sisi"
    p_topic: float = 0.12
    topic_retweets: tuple[int, int] = (0, 6)
    seeds_per_stance: int = 5


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_seminar: int = 71
    n_normal: int = 79
    tweets_per_user: tuple[int, int] = (40, 120)
    days: int = 56
    start: str = DEFAULT_START
    cliques: tuple[CliqueSpec, ...] = (
        CliqueSpec("egypt", location="Egypt"),
        CliqueSpec("uae", location="UAE"),
        CliqueSpec("ksa", location="KSA"),
    )
    seminar: GroupProfile = SEMINAR_PROFILE
    normal: GroupProfile = NORMAL_PROFILE
    # normal users draw items Zipf-like from big shared pools
    normal_zipf: float = 1.05
    normal_word_zipf: float = 0.7
    campaigns: tuple[CampaignSpec, ...] = ()
    stance: StanceSpec | None = StanceSpec()
    p_religious: float = 0.03
    n_global_accounts: int = 400
    n_global_hashtags: int = 300
    n_global_words: int = 3000
    words_per_tweet: tuple[int, int] = (3, 7)

    def __post_init__(self):
        if self.n_seminar < 0 or self.n_normal < 0:
            raise ValueError("user counts must be >= 0")
        if self.n_seminar and not self.cliques:
            raise ValueError("seminar users need at least one clique")
        lo, hi = self.tweets_per_user
        if not 1 <= lo <= hi:
            raise ValueError("tweets_per_user must satisfy 1 <= min <= max")
        for c in self.cliques:
            if not 0 <= c.concentration <= 1:
                raise ValueError("concentration must be in [0, 1]")
        for p in (self.seminar, self.normal):
            for v in asdict(p).values():
                if not 0 <= v <= 1:
                    raise ValueError("rates must be in [0, 1]")
        if not 0 <= self.p_religious <= 1:
            raise ValueError("p_religious must be in [0, 1]")
        if self.stance is not None:
            n = self.n_seminar + self.n_normal
            if n and 2 * self.stance.seeds_per_stance > n:
                raise ValueError("stance seeds exceed the number of users")
        names = {c.name for c in self.cliques}
        for c in self.campaigns:
            if c.group not in {"seminar", "normal", "all"} | names:
                raise ValueError(f"campaign group {c.group!r} is unknown")
            if not 0 <= c.day < self.days:
                raise ValueError(f"campaign day {c.day} outside window")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "cliques" in d:
            d["cliques"] = tuple(CliqueSpec(**c) for c in d["cliques"])
        if "campaigns" in d:
            d["campaigns"] = tuple(CampaignSpec(**c) for c in d["campaigns"])
        for k in ("seminar", "normal"):
            if k in d:
                d[k] = GroupProfile(**d[k])
        if d.get("stance") is not None and isinstance(d["stance"], dict):
            s = dict(d["stance"])
            if "topic_retweets" in s:
                s["topic_retweets"] = tuple(s["topic_retweets"])
            d["stance"] = StanceSpec(**s)
        for k in ("tweets_per_user", "words_per_tweet"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


def acceptance_config(seed: int = 2) -> SynthConfig:
    """150 labeled users, 71 seminar / 79 normal, with well separated groups."""
    return SynthConfig(seed=seed, n_seminar=71, n_normal=79)


@dataclass
class GroundTruth:
    labels: dict[str, str] = field(default_factory=dict)
    cliques: dict[str, str] = field(default_factory=dict)
    stances: dict[str, str] = field(default_factory=dict)
    seeds: dict[str, str] = field(default_factory=dict)
    campaigns: dict[str, list[int]] = field(default_factory=dict)
    # per-user counts as the generator wrote them (religious posts excluded)
    totals: Counter = field(default_factory=Counter)
    filtered: Counter = field(default_factory=Counter)
    retweets: Counter = field(default_factory=Counter)
    hashtags: dict[str, Counter] = field(default_factory=dict)


@dataclass
class _User:
    uid: str
    username: str
    group: str
    clique: CliqueSpec | None
    stance: str
    location: str | None
    rates: np.ndarray
    concentration: float = 0.0


_RATE_KEYS = ("p_retweet", "p_url", "p_hashtag", "p_mention", "p_media",
              "p_sentiment", "p_vulgar")
_LOCATIONS = ("Egypt", "KSA", "UAE", "Kuwait", "Jordan", None, None, None)
_RELIGIOUS = ("du3a.org", "ghared.com", "7asnat.com", "zad-muslim.com")


class _Gen:
    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.t0 = datetime.fromisoformat(cfg.start).replace(tzinfo=timezone.utc)
        self.accounts = [f"acct{i:03d}" for i in range(cfg.n_global_accounts)]
        self.tags = [f"tag{i:03d}" for i in range(cfg.n_global_hashtags)]
        self.words = [f"w{i:03d}" for i in range(cfg.n_global_words)]
        self.sentiment = _data_lines("sentiment_sample.txt")
        self.vulgar = [v for v in _data_lines("vulgar_sample.txt") if " " not in v]
        self.records: list[dict] = []
        self.gold = GroundTruth()
        self.next_id = 0
        self._zipf: dict[tuple, np.ndarray] = {}

    def zipf_pick(self, pool: list[str], a: float) -> str:
        w = self._zipf.get((len(pool), a))
        if w is None:
            w = 1.0 / np.arange(1, len(pool) + 1) ** a
            w = self._zipf[(len(pool), a)] = w / w.sum()
        return pool[int(self.rng.choice(len(pool), p=w))]

    def pick(self, user: _User, kind: str) -> str:
        """One retweet source / hashtag / mention / word for ``user``."""
        cq = user.clique
        glob = {"account": self.accounts, "tag": self.tags, "word": self.words}[kind]
        if cq is not None and self.rng.random() < user.concentration:
            size = {"account": cq.accounts, "tag": cq.hashtags, "word": cq.words}[kind]
            prefix = {"account": "acct", "tag": "tag", "word": "w"}[kind]
            pool = [f"{cq.name}_{prefix}{i}" for i in range(size)]
            return self.zipf_pick(pool, 1.2)
        if cq is not None:
            return glob[int(self.rng.integers(len(glob)))]
        a = self.cfg.normal_word_zipf if kind == "word" else self.cfg.normal_zipf
        return self.zipf_pick(glob, a)

    def stamp(self, day: int | None = None) -> datetime:
        if day is None:
            day = int(self.rng.integers(self.cfg.days))
        return self.t0 + timedelta(days=day, seconds=int(self.rng.integers(86400)))

    def emit(self, user: _User, when: datetime, text: str, hashtags=(), mentions=(),
             urls=(), has_media=False, retweet_of=None, retweeted_id=None,
             religious=False) -> str:
        tid = f"t{self.next_id:08d}"
        self.next_id += 1
        self.records.append({
            "id": tid, "user_id": user.uid, "username": user.username,
            "created_at": when.strftime("%Y-%m-%dT%H:%M:%SZ"), "text": text,
            "hashtags": list(hashtags), "mentions": list(mentions), "urls": list(urls),
            "has_media": bool(has_media), "retweet_of": retweet_of,
            "retweeted_id": retweeted_id, "location": user.location,
            "_ts": when,
        })
        g = self.gold
        if religious:
            g.filtered[user.uid] += 1
        else:
            g.totals[user.uid] += 1
            if retweet_of is not None:
                g.retweets[user.uid] += 1
            g.hashtags.setdefault(user.uid, Counter()).update(hashtags)
        return tid

    def regular_tweet(self, user: _User, topic: bool, day: int | None = None,
                      extra_tag: str | None = None) -> tuple[str, datetime, str]:
        cfg, rng = self.cfg, self.rng
        r = user.rates
        lo, hi = cfg.words_per_tweet
        words = [self.pick(user, "word") for _ in range(int(rng.integers(lo, hi + 1)))]
        if rng.random() < r[5]:
            words.insert(int(rng.integers(len(words) + 1)),
                         self.sentiment[int(rng.integers(len(self.sentiment)))])
        if rng.random() < r[6]:
            words.insert(int(rng.integers(len(words) + 1)),
                         self.vulgar[int(rng.integers(len(self.vulgar)))])
        if topic and cfg.stance is not None:
            words.insert(0, cfg.stance.topic)
        tags = []
        if extra_tag is not None:
            tags.append(extra_tag)
        elif rng.random() < r[2]:
            tags = sorted({self.pick(user, "tag") for _ in range(int(rng.integers(1, 3)))})
        mentions = [self.pick(user, "account")] if rng.random() < r[3] else []
        urls = [f"https://news{int(rng.integers(50))}.example.com/a/{self.next_id}"] \
            if rng.random() < r[1] else []
        media = bool(rng.random() < r[4])
        rt = self.pick(user, "account") if extra_tag is None and rng.random() < r[0] else None
        body = " ".join(words + [f"#{t}" for t in tags] + [f"@{m}" for m in mentions] + urls)
        text = f"RT @{rt}: {body}" if rt else body
        when = self.stamp(day)
        tid = self.emit(user, when, text, tags, mentions, urls, media,
                        retweet_of=rt, retweeted_id=f"ext-{self.next_id}" if rt else None)
        return tid, when, text


def _users(gen: _Gen) -> list[_User]:
    cfg, rng = gen.cfg, gen.rng
    kinds = ["seminar"] * cfg.n_seminar + ["normal"] * cfg.n_normal
    order = rng.permutation(len(kinds))
    users = []
    for slot, k in enumerate(order):
        group = kinds[k]
        prof = cfg.seminar if group == "seminar" else cfg.normal
        means = np.array([getattr(prof, key) for key in _RATE_KEYS])
        rates = np.clip(means + rng.normal(0, prof.spread, len(means)), 0.0, 1.0)
        clique = cfg.cliques[k % len(cfg.cliques)] if group == "seminar" else None
        if clique is not None and clique.location is not None:
            loc = clique.location
        else:
            loc = _LOCATIONS[int(rng.integers(len(_LOCATIONS)))]
        stance = "pro" if rng.random() < 0.5 else "anti"
        conc = 0.0
        if clique is not None:
            conc = float(np.clip(clique.concentration + rng.normal(0, clique.spread), 0, 1))
        users.append(_User(f"u{slot:04d}", f"user{slot:04d}", group, clique, stance, loc,
                           rates, conc))
    return users


def generate(cfg: SynthConfig) -> tuple[list[dict], GroundTruth]:
    """Return (records, ground truth).  Records are ordered by timestamp then id."""
    gen = _Gen(cfg)
    rng = gen.rng
    users = _users(gen)
    g = gen.gold
    for u in users:
        g.labels[u.uid] = u.group
        g.stances[u.uid] = u.stance
        if u.clique is not None:
            g.cliques[u.uid] = u.clique.name

    topic_originals: dict[str, list[tuple[str, datetime, str, str]]] = {"pro": [], "anti": []}
    lo, hi = cfg.tweets_per_user
    p_topic = cfg.stance.p_topic if cfg.stance else 0.0
    for u in users:
        for _ in range(int(rng.integers(lo, hi + 1))):
            if rng.random() < cfg.p_religious:
                host = _RELIGIOUS[int(rng.integers(len(_RELIGIOUS)))]
                url = f"https://{host}/p/{gen.next_id}"
                gen.emit(u, gen.stamp(), f"دعاء {url}", urls=[url], religious=True)
                continue
            topic = bool(rng.random() < p_topic)
            tid, when, text = gen.regular_tweet(u, topic)
            rec = gen.records[-1]
            if topic and rec["retweet_of"] is None:
                topic_originals[u.stance].append((tid, when, u.username, text))

    if cfg.stance is not None:
        rlo, rhi = cfg.stance.topic_retweets
        for u in users:
            pool = [o for o in topic_originals[u.stance] if o[2] != u.username]
            if not pool:
                continue
            for _ in range(int(rng.integers(rlo, rhi + 1))):
                tid, when, author, text = pool[int(rng.integers(len(pool)))]
                end = gen.t0 + timedelta(days=cfg.days)
                span = max(1, int((end - when).total_seconds()) - 1)
                later = when + timedelta(seconds=int(rng.integers(span)))
                gen.emit(u, later, f"RT @{author}: {text}", retweet_of=author,
                         retweeted_id=tid)
        for stance in ("pro", "anti"):
            members = sorted(uid for uid, s in g.stances.items() if s == stance)
            k = min(cfg.stance.seeds_per_stance, len(members))
            for uid in sorted(rng.choice(members, size=k, replace=False).tolist()) if k else []:
                g.seeds[uid] = stance

    for camp in cfg.campaigns:
        if camp.group in ("seminar", "normal"):
            members = [u for u in users if u.group == camp.group]
        elif camp.group == "all":
            members = users
        else:
            members = [u for u in users if u.clique and u.clique.name == camp.group]
        if not members:
            continue
        series = g.campaigns.setdefault(camp.hashtag, [0] * cfg.days)
        for _ in range(camp.count):
            u = members[int(rng.integers(len(members)))]
            gen.regular_tweet(u, False, day=camp.day, extra_tag=camp.hashtag)
        series[camp.day] += camp.count

    records = sorted(gen.records, key=lambda r: (r["_ts"], r["id"]))
    for r in records:
        del r["_ts"]
    return records, g


def record_lines(records: list[dict]) -> Iterator[str]:
    for r in records:
        yield json.dumps(r, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"


def write_corpus(cfg: SynthConfig, out_dir) -> GroundTruth:
    """Write corpus.jsonl plus gold files (labels, stance, seeds, cliques, campaigns)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, g = generate(cfg)

    def write(name, lines):
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)

    write("corpus.jsonl", record_lines(records))
    write("labels.tsv", ["user_id\tlabel\n"]
          + [f"{u}\t{lab}\n" for u, lab in sorted(g.labels.items())])
    write("stance_gold.tsv", ["user_id\tstance\titeration_added\n"]
          + [f"{u}\t{s}\t0\n" for u, s in sorted(g.stances.items())])
    write("seeds.tsv", ["user_id\tstance\n"]
          + [f"{u}\t{s}\n" for u, s in sorted(g.seeds.items())])
    write("cliques.tsv", ["user_id\tclique\n"]
          + [f"{u}\t{c}\n" for u, c in sorted(g.cliques.items())])
    write("campaigns_gold.tsv", ["hashtag\tday\tcount\n"]
          + [f"{h}\t{d}\t{n}\n" for h, s in sorted(g.campaigns.items())
             for d, n in enumerate(s) if n])
    write("config.json", [json.dumps(cfg.to_json(), sort_keys=True, indent=2) + "\n"])
    return g


def bulk_lines(n_tweets: int, n_users: int = 10_000, seed: int = 0) -> Iterator[str]:
    """Cheap stream of valid input lines for throughput measurement."""
    rng = np.random.default_rng(seed)
    users = rng.integers(n_users, size=n_tweets)
    kinds = rng.integers(8, size=n_tweets)
    words = [f"w{i}" for i in range(2000)]
    bodies = [" ".join(rng.choice(words, size=8).tolist()) for _ in range(1024)]
    for i in range(n_tweets):
        u = int(users[i])
        k = int(kinds[i])
        rec = {
            "id": f"b{i}", "user_id": f"u{u}", "username": f"user{u}",
            "created_at": f"2015-12-{1 + i % 28:02d}T12:00:00Z",
            "text": bodies[i & 1023],
            "hashtags": [f"tag{(u + k) % 300}"] if k < 4 else [],
            "mentions": [f"acct{k * 7 % 97}"] if k % 3 == 0 else [],
            "urls": ["https://du3a.org/x"] if k == 7 and u % 5 == 0
            else ([f"https://n.example.com/{k}"] if k % 2 else []),
            "has_media": k == 5,
            "retweet_of": f"acct{u % 50}" if k < 3 else None,
            "location": None,
        }
        yield json.dumps(rec, separators=(",", ":")) + "\n"
