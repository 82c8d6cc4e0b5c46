import json

import pytest

from seminar import corpus, synth


def rec(tid, uid, text="", day=1, **kw):
    """One input record on 2015-12-<day>."""
    r = {"id": str(tid), "user_id": uid, "username": kw.pop("username", uid),
         "created_at": f"2015-12-{day:02d}T10:00:00Z", "text": text}
    r.update(kw)
    return r


def lines(records):
    return [json.dumps(r, ensure_ascii=False) + "\n" for r in records]


@pytest.fixture(scope="session")
def acceptance_data():
    """Generated acceptance corpus, its aggregates and gold labels."""
    records, gold = synth.generate(synth.acceptance_config())
    res = corpus.ingest_stream(synth.record_lines(records), corpus.sample_lexicon("sentiment"),
                               corpus.sample_lexicon("vulgar"))
    return records, gold, res


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
