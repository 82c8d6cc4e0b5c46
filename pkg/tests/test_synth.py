import dataclasses
import json

import numpy as np
import pytest

from seminar import corpus, synth
from seminar.campaigns import HashtagIndex
from seminar.features import FEATURE_NAMES, FeatureExtractor
from seminar.synth import CampaignSpec, CliqueSpec, SynthConfig, generate, write_corpus


def small(**kw):
    return SynthConfig(**{"seed": 4, "n_seminar": 12, "n_normal": 12,
                          "tweets_per_user": (15, 30), "days": 14, **kw})


def test_same_seed_same_bytes(tmp_path):
    write_corpus(small(), tmp_path / "a")
    write_corpus(small(), tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_different_seed_differs():
    a, _ = generate(small())
    b, _ = generate(small(seed=5))
    assert a != b


def test_empty_config(tmp_path):
    g = write_corpus(SynthConfig(n_seminar=0, n_normal=0, stance=None), tmp_path)
    assert (tmp_path / "corpus.jsonl").read_text() == ""
    assert (tmp_path / "labels.tsv").read_text() == "user_id\tlabel\n"
    assert g.labels == {}


def test_planted_campaign_series():
    cfg = small(campaigns=(CampaignSpec("burst", "seminar", 5, 40),))
    records, g = generate(cfg)
    want = [0] * 14
    want[5] = 40
    assert g.campaigns["burst"] == want
    c = corpus.load_corpus(synth.record_lines(records), cfg.start)
    assert HashtagIndex(c).series("burst", (0, 13)) == want


def test_recount_matches_generator_tallies():
    records, g = generate(small(p_religious=0.1))
    res = corpus.ingest_stream(synth.record_lines(records))
    assert set(res.aggregates) == set(g.labels)
    for uid, a in res.aggregates.items():
        assert a.total_tweets == g.totals[uid]
        assert a.filtered_out_count == g.filtered[uid]
        assert a.retweet_count == g.retweets[uid]
        assert a.hashtag_tally == g.hashtags.get(uid, {})


def test_labels_and_seeds():
    _, g = generate(small())
    assert sum(v == "seminar" for v in g.labels.values()) == 12
    assert sorted(g.seeds.values()) == ["anti"] * 5 + ["pro"] * 5
    assert all(g.stances[u] == s for u, s in g.seeds.items())
    assert set(g.cliques) == {u for u, lab in g.labels.items() if lab == "seminar"}


def test_acceptance_config_shape():
    cfg = synth.acceptance_config()
    assert (cfg.n_seminar, cfg.n_normal) == (71, 79)


@pytest.mark.parametrize("bad", [
    dict(n_seminar=-1),
    dict(tweets_per_user=(5, 2)),
    dict(cliques=(CliqueSpec("x", concentration=1.5),)),
    dict(n_seminar=3, n_normal=3),  # 10 stance seeds > 6 users
    dict(campaigns=(CampaignSpec("h", "nobody", 1, 5),)),
    dict(campaigns=(CampaignSpec("h", "all", 99, 5),)),
])
def test_invalid_configs(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)


def test_config_json_roundtrip():
    cfg = small(campaigns=(CampaignSpec("h", "egypt", 2, 9),))
    back = SynthConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert back == cfg


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_concentration_raises_diversity_features(seed):
    means = []
    for conc in (0.1, 0.5, 0.9):
        cliques = tuple(dataclasses.replace(c, concentration=conc, spread=0.0)
                        for c in SynthConfig().cliques)
        cfg = small(seed=seed, n_seminar=20, n_normal=0, cliques=cliques, stance=None)
        records, g = generate(cfg)
        aggs = corpus.ingest_stream(synth.record_lines(records)).aggregates
        X = FeatureExtractor(min_tweets=1).fit_transform(list(aggs.values()))
        # smallest n of each family; larger n saturate near 1.0 at high concentration
        cols = [FEATURE_NAMES.index(n) for n in
                ("top1_retweeted", "top1_mentioned", "top5_hashtags", "top10_words")]
        means.append(X[:, cols].mean(axis=0))
    for lo, hi in zip(means, means[1:]):
        assert np.all(hi > lo)


def test_bulk_lines_parse():
    res = corpus.ingest_stream(synth.bulk_lines(2000, 50))
    assert res.malformed == 0 and res.lines == 2000 and res.filtered > 0
