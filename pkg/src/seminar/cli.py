"""Command-line entry point: ``seminar <subcommand> [flags]``.

Every stage writes its artifacts to files and prints a one-line summary.
``--config FILE`` loads a JSON object whose keys are flag names (dashes or
underscores); a nested object under the subcommand's name applies to that
subcommand only.  Flags given on the command line win.

Exit codes: 0 success, 1 data error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import campaigns, corpus, features, network, stance, svm, synth

DEFAULT_SUBSETS = ("all", "interaction+diversity", "interaction", "diversity", "style")


class DataError(Exception):
    """Bad input data; reported on stderr with exit code 1."""


# ---------------------------------------------------------------------------
# small file helpers
# ---------------------------------------------------------------------------

def read_user_file(path, value: str | None = None) -> list[str]:
    """First column of a TSV (header optional); with ``value``, keep rows whose
    second column equals it."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if not parts[0] or parts[0].startswith("#") or parts[0] == "user_id":
                continue
            if value is not None and (len(parts) < 2 or parts[1] != value):
                continue
            out.append(parts[0])
    return sorted(set(out))


def read_labels(path) -> dict[str, int]:
    """``user_id<TAB>label`` with label seminar/normal (or 1/-1)."""
    names = {"seminar": 1, "1": 1, "+1": 1, "normal": -1, "-1": -1, "0": -1}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if not parts[0] or parts[0] == "user_id" or parts[0].startswith("#"):
                continue
            if len(parts) < 2 or parts[1].strip().lower() not in names:
                raise DataError(f"{path}: bad label row {line.rstrip()!r}")
            out[parts[0]] = names[parts[1].strip().lower()]
    return out


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def _lexicon(path, name):
    if path == "none":
        return None
    return corpus.Lexicon.from_file(path, name) if path else corpus.sample_lexicon(name)


def _day(date: str, start: str) -> int:
    return int((corpus.parse_time(date) - corpus.corpus_start(start)) // 86400)


def _window(args, tweets) -> tuple[int, int]:
    days = [t.day_index for t in tweets]
    lo = _day(args.window_start, args.start) if args.window_start else min(days, default=0)
    hi = _day(args.window_end, args.start) if args.window_end else max(days, default=0)
    if hi < lo:
        raise DataError("window end precedes window start")
    return lo, hi


def _load_corpus(args):
    c = corpus.load_corpus(args.corpus, args.start, _filters(args))
    return c


def _filters(args) -> corpus.FilterConfig:
    return corpus.FilterConfig.from_dict(args.filters or {})


def _matrix_for(features_path, labels_path):
    ids, names, X = features.read_feature_matrix(features_path)
    labels = read_labels(labels_path)
    keep = [i for i, u in enumerate(ids) if u in labels]
    if not keep:
        raise DataError("no labeled users in the feature matrix")
    y = np.array([labels[ids[i]] for i in keep])
    return [ids[i] for i in keep], names, X[keep], y


def _summary(msg: str) -> None:
    print(msg)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    res = corpus.ingest_files(
        args.input, _lexicon(args.sentiment, "sentiment"), _lexicon(args.vulgar, "vulgar"),
        _filters(args), stopwords=corpus.load_stopwords(args.stopwords),
        threads=args.threads)
    corpus.write_aggregates(res.aggregates, args.out)
    _summary(f"ingest: {res.lines} lines, {len(res.aggregates)} users, "
             f"{res.malformed} malformed, {res.filtered} filtered -> {args.out}")
    return 0


def cmd_featurize(args) -> int:
    aggs = corpus.read_aggregates(args.aggregates)
    fx = features.FeatureExtractor(min_tweets=args.min_tweets, skip_insufficient=True)
    X = fx.fit_transform([aggs[u] for u in sorted(aggs)])
    features.write_feature_matrix(args.out, fx.user_ids_, X, list(fx.get_feature_names_out()))
    _summary(f"featurize: {len(fx.user_ids_)} users, {len(fx.skipped_)} skipped "
             f"(< {args.min_tweets} tweets) -> {args.out}")
    return 0


def _svm_params(args) -> dict:
    gamma = args.gamma if args.gamma in (None, "auto") else float(args.gamma)
    return {"C": args.C, "gamma": gamma or "auto", "tol": args.tol,
            "standardize": args.standardize}


def cmd_train(args) -> int:
    ids, names, X, y = _matrix_for(args.features, args.labels)
    params = {**_svm_params(args), "feature_subset": args.feature_subset,
              "feature_names": tuple(names)}
    if args.tune:
        params.update(svm.grid_search(X, y, params))
    est = svm.SeminarSVC(**params).fit(X, y)
    est.model_.save(args.out)
    _summary(f"train: {len(ids)} users, {len(est.model_.alphas)} support vectors, "
             f"C={est.C} gamma={est.gamma_:g} converged={est.converged_} -> {args.out}")
    return 0


def cmd_loocv(args) -> int:
    ids, names, X, y = _matrix_for(args.features, args.labels)
    subsets = [s.strip() for s in args.feature_subsets.split(",") if s.strip()]
    reports = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", svm.ConvergenceWarning)
        for s in subsets:
            res = svm.loocv(X, y, threads=args.threads, tune=args.tune,
                            **_svm_params(args), feature_subset=s,
                            feature_names=tuple(names))
            reports[s] = res.report
    Path(args.out).write_text(svm.format_tsv(reports), encoding="utf-8")
    if args.table:
        Path(args.table).write_text(svm.format_table(reports), encoding="utf-8")
    best = ", ".join(f"{k}={r.macro_f1:.3f}" for k, r in reports.items())
    _summary(f"loocv: {len(ids)} users, macro-F1 {best} -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = svm.KernelSvmModel.load(args.model)
    ids, names, X = features.read_feature_matrix(args.features)
    est = svm.SeminarSVC.from_model(model, names)
    margins = est.decision_function(X)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id\tlabel\tmargin\n")
        for u, m in zip(ids, margins):
            fh.write(f"{u}\t{'seminar' if m > 0 else 'normal'}\t{float(m)!r}\n")
    n_sem = int(np.sum(margins > 0))
    _summary(f"predict: {len(ids)} users, {n_sem} seminar -> {args.out}")
    return 0


def cmd_propagate(args) -> int:
    c = _load_corpus(args)
    seeds = stance.read_stance_file(args.seeds)
    cfg = stance.PropagationConfig(frozenset(args.topic), args.max_iterations,
                                   args.min_evidence, args.consistency)
    state = stance.propagate(seeds, c, cfg)
    stance.write_stance_file(args.out, state)
    if args.sample:
        picked = stance.sample_for_validation(state, min(args.sample, len(state.labels)),
                                              _seed(args))
        with open(args.sample_out or f"{args.out}.sample", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("user_id\tstance\n")
            fh.writelines(f"{u}\t{state.labels[u]}\n" for u in picked)
    rounds = ", ".join(f"round {r}: {len(v)}" for r, v in state.rounds().items())
    _summary(f"propagate: {len(state.labels)} labeled ({rounds}) -> {args.out}")
    return 0


def _group(path, label):
    return read_user_file(path, label) if path else None


def cmd_campaigns(args) -> int:
    c = _load_corpus(args)
    users = _group(args.users, args.users_label)
    window = _window(args, c.tweets)
    scores = campaigns.rank_campaigns(c, users, window, args.min_volume, args.k)
    campaigns.write_campaign_report(args.out, scores)
    if args.series_out:
        campaigns.write_series(args.series_out, scores, window[0])
    _summary(f"campaigns: {len(scores)} hashtags with volume >= {args.min_volume} "
             f"over days {window[0]}..{window[1]} -> {args.out}")
    return 0


def cmd_penetration(args) -> int:
    c = _load_corpus(args)
    sem = _group(args.seminar_users, args.seminar_label)
    ref = _group(args.reference_users, args.reference_label)
    if ref is None:
        ref = sorted({t.user_id for t in c} - set(sem))
    window = _window(args, c.tweets)
    try:
        rep = campaigns.penetration(sem, ref, c, window, args.K, args.score_floor)
    except ValueError as e:
        raise DataError(str(e)) from None
    fmt = lambda v: "NA" if v is None else repr(v)  # noqa: E731
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("metric\tvalue\n")
        fh.write(f"appearance_pct\t{rep.appearance_pct * 100!r}\n")
        fh.write(f"avg_rank\t{fmt(rep.avg_rank)}\n")
        fh.write(f"volume_magnification\t{fmt(rep.volume_magnification)}\n")
        fh.write(f"shared\t{','.join(rep.shared)}\n")
    _summary(f"penetration: {rep.appearance_pct * 100:.1f}% of {len(rep.seminar_top)} "
             f"tags shared, avg rank {fmt(rep.avg_rank)}, "
             f"magnification {fmt(rep.volume_magnification)} -> {args.out}")
    return 0


def cmd_network(args) -> int:
    aggs = corpus.read_aggregates(args.aggregates)
    users = _group(args.users, args.users_label) or sorted(aggs)
    missing = [u for u in users if u not in aggs]
    if missing:
        raise DataError(f"{len(missing)} users have no aggregate, e.g. {missing[0]}")
    g = network.build_graph(users, aggs)
    pos = network.layout_force_directed(g, args.iterations, _seed(args))
    network.export_graph(g, args.out, pos, args.format, args.min_similarity)
    if args.components_out:
        network.write_components(args.components_out, g, args.band_floor)
    _, sizes = network.components(g, args.band_floor)
    _summary(f"network: {len(g.nodes)} users, {len(g.edges)} edges, "
             f"{len(sizes)} {args.band_floor} components -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    if args.synth_config:
        cfg = synth.SynthConfig.from_json(json.loads(Path(args.synth_config).read_text()))
    else:
        cfg = synth.acceptance_config() if args.acceptance else synth.SynthConfig()
    if args.seed is not None:
        cfg = synth.SynthConfig.from_json({**cfg.to_json(), "seed": args.seed})
    g = synth.write_corpus(cfg, args.out)
    n_sem = sum(1 for v in g.labels.values() if v == "seminar")
    _summary(f"synth: {len(g.labels)} users ({n_sem} seminar), "
             f"{sum(g.totals.values())} tweets, seed {cfg.seed} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

REQUIRED = {
    "ingest": ("input", "out"),
    "featurize": ("aggregates", "out"),
    "train": ("features", "labels", "out"),
    "loocv": ("features", "labels", "out"),
    "predict": ("model", "features", "out"),
    "propagate": ("corpus", "seeds", "topic", "out"),
    "campaigns": ("corpus", "min_volume", "out"),
    "penetration": ("corpus", "seminar_users", "out"),
    "network": ("aggregates", "out"),
    "synth": ("out",),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file supplying default flag values")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker processes (results do not depend on it)")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for randomized steps (default 0; synth: its config seed)")


def _corpus_flags(p) -> None:
    p.add_argument("--corpus", help="tweet JSONL (optionally .gz)")
    p.add_argument("--start", default=corpus.DEFAULT_START, help="corpus start date")
    p.add_argument("--filters", type=json.loads, default=None,
                   help="JSON object overriding the religious-service filter")


def _window_flags(p) -> None:
    p.add_argument("--window-start", help="first day (date), default corpus start")
    p.add_argument("--window-end", help="last day (date, inclusive)")


def _svm_flags(p) -> None:
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", default="auto", help="RBF gamma or 'auto' (1/n_features)")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--tune", action="store_true", help="grid-search C and gamma")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seminar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    ps = {}

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.set_defaults(func=fn)
        ps[name] = p
        return p

    p = add("ingest", cmd_ingest, "aggregate tweet streams per user")
    p.add_argument("--input", nargs="+", help="JSONL files")
    p.add_argument("--out", help="aggregates JSONL")
    p.add_argument("--sentiment", help="sentiment lexicon file ('none' disables)")
    p.add_argument("--vulgar", help="vulgar lexicon file ('none' disables)")
    p.add_argument("--stopwords", help="stopword list file")
    p.add_argument("--filters", type=json.loads, default=None)

    p = add("featurize", cmd_featurize, "per-user feature matrix")
    p.add_argument("--aggregates")
    p.add_argument("--out")
    p.add_argument("--min-tweets", type=int, default=10)

    p = add("train", cmd_train, "fit the SVM on labeled users")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--out", help="model file")
    p.add_argument("--feature-subset", default="all")
    _svm_flags(p)

    p = add("loocv", cmd_loocv, "leave-one-out evaluation per feature set")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--out", help="report TSV")
    p.add_argument("--table", help="optional plain-text table")
    p.add_argument("--feature-subsets", default=",".join(DEFAULT_SUBSETS))
    _svm_flags(p)

    p = add("predict", cmd_predict, "classify users with a saved model")
    p.add_argument("--model")
    p.add_argument("--features")
    p.add_argument("--out")

    p = add("propagate", cmd_propagate, "stance label propagation from seeds")
    _corpus_flags(p)
    p.add_argument("--seeds", help="user_id<TAB>pro|anti")
    p.add_argument("--topic", nargs="+", help="topic terms")
    p.add_argument("--max-iterations", type=int, default=3)
    p.add_argument("--min-evidence", type=int, default=5)
    p.add_argument("--consistency", type=float, default=1.0)
    p.add_argument("--sample", type=int, default=0, help="validation sample size")
    p.add_argument("--sample-out")
    p.add_argument("--out")

    p = add("campaigns", cmd_campaigns, "rank bursty hashtag campaigns")
    _corpus_flags(p)
    _window_flags(p)
    p.add_argument("--users", help="user list TSV (default: everyone)")
    p.add_argument("--users-label", help="keep rows whose second column equals this")
    p.add_argument("--min-volume", type=int)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--series-out")
    p.add_argument("--out")

    p = add("penetration", cmd_penetration, "seminar hashtag reach into a reference group")
    _corpus_flags(p)
    _window_flags(p)
    p.add_argument("--seminar-users")
    p.add_argument("--seminar-label")
    p.add_argument("--reference-users", help="default: every other author")
    p.add_argument("--reference-label")
    p.add_argument("--K", type=int, default=100)
    p.add_argument("--score-floor", type=float, default=0.02)
    p.add_argument("--out")

    p = add("network", cmd_network, "hashtag-similarity user graph")
    p.add_argument("--aggregates")
    p.add_argument("--users")
    p.add_argument("--users-label")
    p.add_argument("--min-similarity", type=float, default=0.3,
                   help="edges below this are left out of the file")
    p.add_argument("--band-floor", choices=network.BANDS, default="strong")
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--format", choices=("dot", "graphml"))
    p.add_argument("--components-out")
    p.add_argument("--out")

    p = add("synth", cmd_synth, "write a synthetic corpus with gold files")
    p.add_argument("--out", help="output directory")
    p.add_argument("--acceptance", action="store_true",
                   help="use the 150-user acceptance configuration")
    p.add_argument("--synth-config", help="generator configuration JSON")

    parser._subparsers_map = ps  # type: ignore[attr-defined]
    return parser


def _config_defaults(path, command: str, p: argparse.ArgumentParser) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        p.error(f"cannot read config {path}: {e}")
    if not isinstance(data, dict):
        p.error("config must be a JSON object")
    dests = {a.dest for a in p._actions}
    section = data.get(command) if isinstance(data.get(command), dict) else {}
    out = {}
    for key, value in [*data.items(), *section.items()]:
        dest = key.replace("-", "_")
        if dest in dests and dest not in ("config", "func"):
            out[dest] = value
    return out


def _check_ranges(args, p) -> None:
    if args.threads < 1:
        p.error("--threads must be >= 1")
    for name in ("min_volume", "K", "k", "min_evidence", "iterations", "min_tweets"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            p.error(f"--{name.replace('_', '-')} must be >= 1")
    for name in ("score_floor", "min_similarity"):
        v = getattr(args, name, None)
        if v is not None and not 0 <= v < 1:
            p.error(f"--{name.replace('_', '-')} must be in [0, 1)")
    if getattr(args, "consistency", None) is not None and not 0.5 < args.consistency <= 1:
        p.error("--consistency must be in (0.5, 1]")


def _check_paths(args, p) -> None:
    for name in ("corpus", "aggregates", "features", "labels", "model", "seeds",
                 "users", "seminar_users", "reference_users", "sentiment", "vulgar",
                 "stopwords", "synth_config"):
        v = getattr(args, name, None)
        if v and v != "none" and not Path(v).exists():
            p.error(f"--{name.replace('_', '-')}: no such file {v}")
    for v in getattr(args, "input", None) or []:
        if not Path(v).exists():
            p.error(f"--input: no such file {v}")


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers_map[args.command]  # type: ignore[attr-defined]
    if args.config:
        sub.set_defaults(**_config_defaults(args.config, args.command, sub))
        args = parser.parse_args(argv)
    missing = [n for n in REQUIRED[args.command] if getattr(args, n, None) in (None, [])]
    if missing:
        sub.error("missing required flags: "
                  + ", ".join("--" + n.replace("_", "-") for n in missing))
    _check_ranges(args, sub)
    _check_paths(args, sub)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ValueError, OSError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"seminar {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
