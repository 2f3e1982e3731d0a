"""Command-line pipeline: ingest, cohort, features, train, predict, report.

Every command reads the raw corpus plus lexicons, works deterministically
from the configured seed, and writes its artifacts under --out.  Report-style
commands render matplotlib figures next to their delimited output.  A
lockfile guards each output directory against concurrent runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import (
    DEFAULT_HORIZON_DAYS,
    DEFAULT_WINDOW_DAYS,
    CohortLabel,
    VenueConfig,
    build_survival_records,
    build_timelines,
    ingest_posts,
    label_transition_cohort,
)
from .features import (
    FAMILIES,
    FeatureSpec,
    FeatureVector,
    build_features,
    kw_table,
    load_embeddings,
)
from .forest import (
    ForestModel,
    evaluate,
    fit_forest,
    grid_search,
    predict_forest,
    stratified_split,
)
from .lexicon import CategoryLexicon, DrugLexicon, KeywordSet, select_keywords
from .survival import (
    CoxModel,
    c_index,
    fit_cox,
    km_estimate,
    per_covariate_cindex,
    predict_curve,
)

DEFAULT_FAMILIES = ("drugs", "categories", "keywords", "volume")
DEFAULT_TREE_GRID = (50, 100, 170)
LOCK_NAME = ".forumsurv.lock"


class UsageError(Exception):
    """Bad invocation or missing input path; exits with status 2."""


def _data_path(name: str):
    return resources.files("forumsurv").joinpath("data", name)


@dataclass
class RunConfig:
    corpus: Path | None = None
    venues: Path | None = None
    drug_lexicon: Path | None = None
    category_lexicon: Path | None = None
    embeddings: Path | None = None
    keywords: Path | None = None
    out: Path = Path("out")
    seed: int = 42
    window_days: int = DEFAULT_WINDOW_DAYS
    horizon_days: int = DEFAULT_HORIZON_DAYS
    alpha: float = 0.05
    trees: int | None = None
    families: tuple[str, ...] | None = None
    min_posts: int = 5
    svg: bool = False


def _read_config(path: Path) -> dict[str, str]:
    """Flat key=value config file; '#' starts a comment line."""
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_PATH_KEYS = ("corpus", "venues", "drug_lexicon", "category_lexicon", "embeddings", "keywords")


def _resolve(args: argparse.Namespace) -> RunConfig:
    """Merge CLI flags over config-file values over defaults; flags win."""
    file_cfg = _read_config(Path(args.config)) if getattr(args, "config", None) else {}

    def pick(key, cast, default):
        value = getattr(args, key, None)
        if value is None and key in file_cfg:
            value = cast(file_cfg[key])
        return default if value is None else value

    cfg = RunConfig(
        corpus=pick("corpus", Path, None),
        venues=pick("venues", Path, None),
        drug_lexicon=pick("drug_lexicon", Path, None),
        category_lexicon=pick("category_lexicon", Path, None),
        embeddings=pick("embeddings", Path, None),
        keywords=pick("keywords", Path, None),
        out=Path(pick("out", Path, Path("out"))),
        seed=int(pick("seed", int, 42)),
        window_days=int(pick("window_days", int, DEFAULT_WINDOW_DAYS)),
        horizon_days=int(pick("horizon_days", int, DEFAULT_HORIZON_DAYS)),
        alpha=float(pick("alpha", float, 0.05)),
        trees=pick("trees", int, None),
        families=pick("families", str, None),
        min_posts=int(pick("min_posts", int, 5)),
        svg=bool(pick("svg", lambda v: v.lower() in ("1", "true", "yes"), False)),
    )
    for key in ("corpus", "venues", "drug_lexicon", "category_lexicon", "embeddings", "keywords"):
        value = getattr(cfg, key)
        if isinstance(value, str):
            setattr(cfg, key, Path(value))
    if isinstance(cfg.families, str):
        cfg.families = tuple(f.strip() for f in cfg.families.split(",") if f.strip())
    if cfg.trees is not None:
        cfg.trees = int(cfg.trees)
    return cfg


def _require_file(path: Path | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing required input: {what}")
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return Path(path)


@contextmanager
def _output_lock(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise UsageError(
            f"output directory is locked by {lock}; "
            "another run may be active (remove the file if it is stale)"
        )
    try:
        os.write(fd, b"locked\n")
        os.close(fd)
        yield
    finally:
        try:
            lock.unlink()
        except FileNotFoundError:
            pass


# ---------------------------------------------------------------------------
# Shared pipeline steps


@dataclass
class FeatureContext:
    spec: FeatureSpec
    drug_lexicon: DrugLexicon
    category_lexicon: CategoryLexicon
    embeddings: dict | None


def _load_venues(cfg: RunConfig) -> VenueConfig:
    if cfg.venues is None:
        return VenueConfig.load(_data_path("venues.cfg"))
    return VenueConfig.load(_require_file(cfg.venues, "venues config"))


def _load_timelines(cfg: RunConfig, venues: VenueConfig):
    path = _require_file(cfg.corpus, "corpus")
    with open(path, encoding="utf-8") as fh:
        result = ingest_posts(fh, venues)
    return build_timelines(result.posts), result


def _feature_context(cfg: RunConfig) -> FeatureContext:
    drug_path = cfg.drug_lexicon or _data_path("drug_lexicon.tsv")
    cat_path = cfg.category_lexicon or _data_path("categories.tsv")
    drug_lex = DrugLexicon.load(drug_path)
    cat_lex = CategoryLexicon.load(cat_path)
    families = cfg.families
    embeddings = None
    d_emb = 100
    if cfg.embeddings is not None:
        embeddings = load_embeddings(_require_file(cfg.embeddings, "embeddings file"))
        sizes = {v.size for table in embeddings.values() for v in table.values()}
        if len(sizes) != 1:
            raise ValueError("embeddings file mixes vector widths")
        d_emb = sizes.pop()
        if families is None:
            families = DEFAULT_FAMILIES + ("embedding",)
    if families is None:
        families = DEFAULT_FAMILIES
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise UsageError(f"unknown feature families: {sorted(unknown)}")
    if not families:
        raise UsageError("at least one feature family is required")
    if "embedding" in families and embeddings is None:
        raise UsageError("embedding family requested but no --embeddings file given")
    spec = FeatureSpec(families=tuple(families), d_emb=d_emb)
    return FeatureContext(spec, drug_lex, cat_lex, embeddings)


def _featurizer(ctx: FeatureContext, keywords: KeywordSet | None):
    def featurize(author: str, posts) -> FeatureVector:
        posts = list(posts)
        vectors = None
        if "embedding" in ctx.spec.families:
            table = ctx.embeddings.get(author, {})
            vectors = [table[i] for i in range(len(posts)) if i in table]
        return build_features(
            posts,
            ctx.spec,
            drug_lexicon=ctx.drug_lexicon,
            category_lexicon=ctx.category_lexicon,
            keywords=keywords,
            post_vectors=vectors,
        )

    return featurize


def _cohort_with_keywords(cfg: RunConfig, timelines, venues, ctx: FeatureContext):
    """Label the cohort, split it, and select keywords on the training rows."""
    cohort = label_transition_cohort(
        timelines,
        venues,
        window_days=cfg.window_days,
        horizon_days=cfg.horizon_days,
        seed=cfg.seed,
    )
    y = np.array([int(ex.label is CohortLabel.CAS_TO_RECOV) for ex in cohort])
    train_idx, test_idx = stratified_split(y, test_frac=0.2, seed=cfg.seed)
    keywords = None
    if "keywords" in ctx.spec.families:
        cas_posts = [
            p for i in train_idx if cohort[i].label is CohortLabel.CAS
            for p in cohort[i].window_posts
        ]
        rec_posts = [
            p for i in train_idx if cohort[i].label is CohortLabel.CAS_TO_RECOV
            for p in cohort[i].window_posts
        ]
        keywords = select_keywords(cas_posts, rec_posts, min_posts=cfg.min_posts)
    return cohort, y, train_idx, test_idx, keywords


def _cohort_matrix(cohort, ctx: FeatureContext, keywords):
    featurize = _featurizer(ctx, keywords)
    vectors = [featurize(ex.author, ex.window_posts) for ex in cohort]
    names = vectors[0].names
    X = np.stack([v.values for v in vectors])
    return X, names


def _write_csv(path, header, rows, comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def _figure_name(stem: str, cfg: RunConfig) -> str:
    return f"{stem}.svg" if cfg.svg else f"{stem}.png"


def _write_keywords(cfg: RunConfig, keywords: KeywordSet | None) -> None:
    if keywords is not None:
        keywords.save(cfg.out / "keywords.tsv")


def _load_keywords_for_predict(cfg: RunConfig, ctx: FeatureContext) -> KeywordSet | None:
    if "keywords" not in ctx.spec.families:
        return None
    path = cfg.keywords or (cfg.out / "keywords.tsv")
    return KeywordSet.load(
        _require_file(path, "keyword set (run cohort/train first, or pass --keywords)")
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(cfg: RunConfig) -> int:
    venues = _load_venues(cfg)
    timelines, result = _load_timelines(cfg, venues)
    if not timelines:
        print("warning: corpus contained no usable posts", file=sys.stderr)
    with open(cfg.out / "timelines.jsonl", "w", encoding="utf-8") as fh:
        for tl in timelines:
            fh.write(
                json.dumps(
                    {
                        "author": tl.author,
                        "posts": [
                            {
                                "subreddit": p.subreddit,
                                "created_utc": p.created,
                                "title": p.title,
                                "body": p.body,
                            }
                            for p in tl.posts
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    summary = {
        "users": len(timelines),
        "posts": len(result.posts),
        "malformed": result.malformed,
        "off_venue": result.off_venue,
    }
    _write_json(cfg.out / "ingest_summary.json", summary)
    for key in ("users", "posts", "malformed", "off_venue"):
        print(f"{key}: {summary[key]}")
    return 0


def cmd_cohort(cfg: RunConfig) -> int:
    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    ctx = _feature_context(cfg)
    cohort, y, train_idx, test_idx, keywords = _cohort_with_keywords(
        cfg, timelines, venues, ctx
    )
    records, skipped = build_survival_records(
        timelines, venues, _featurizer(ctx, keywords), horizon_days=cfg.horizon_days
    )
    _write_csv(
        cfg.out / "cohort.csv",
        ["author", "label", "n_window_posts"],
        [[ex.author, ex.label.value, len(ex.window_posts)] for ex in cohort],
    )
    if records:
        names = records[0].covariates.names
        _write_csv(
            cfg.out / "survival.csv",
            ["author", "time_days", "event", *names],
            [
                [r.author, r.time_days, int(r.event)]
                + [_fmt(v) for v in r.covariates.values]
                for r in records
            ],
        )
    _write_keywords(cfg, keywords)
    events = sum(int(r.event) for r in records)
    summary = {
        "seed": cfg.seed,
        "window_days": cfg.window_days,
        "horizon_days": cfg.horizon_days,
        "positives": int(y.sum()),
        "negatives": int((1 - y).sum()),
        "survival_records": len(records),
        "events": events,
        "censoring_rate": (1.0 - events / len(records)) if records else None,
        "ineligible_users": skipped,
    }
    _write_json(cfg.out / "cohort_summary.json", summary)
    for key in ("positives", "negatives", "survival_records", "events", "ineligible_users"):
        print(f"{key}: {summary[key]}")
    return 0


def cmd_features(cfg: RunConfig) -> int:
    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    ctx = _feature_context(cfg)
    cohort, y, train_idx, test_idx, keywords = _cohort_with_keywords(
        cfg, timelines, venues, ctx
    )
    X, names = _cohort_matrix(cohort, ctx, keywords)
    _write_csv(
        cfg.out / "features.csv",
        ["author", "label", *names],
        [
            [ex.author, ex.label.value] + [_fmt(v) for v in row]
            for ex, row in zip(cohort, X)
        ],
    )
    _write_keywords(cfg, keywords)
    print(f"users: {X.shape[0]}")
    print(f"features: {X.shape[1]}")
    return 0


def cmd_train_forest(cfg: RunConfig) -> int:
    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    ctx = _feature_context(cfg)
    cohort, y, train_idx, test_idx, keywords = _cohort_with_keywords(
        cfg, timelines, venues, ctx
    )
    X, names = _cohort_matrix(cohort, ctx, keywords)
    X_train, y_train = X[train_idx], y[train_idx]
    X_test, y_test = X[test_idx], y[test_idx]
    if cfg.trees is not None:
        best, cv_scores = cfg.trees, {}
    else:
        k_folds = min(10, int(np.bincount(y_train).min()))
        best, cv_scores = grid_search(
            X_train, y_train, DEFAULT_TREE_GRID, k_folds=k_folds, seed=cfg.seed
        )
    model = fit_forest(X_train, y_train, n_trees=best, seed=cfg.seed, feature_names=names)
    report = evaluate(model, X_test, y_test)
    model.save(cfg.out / "forest_model.json")
    _write_keywords(cfg, keywords)
    _write_json(
        cfg.out / "forest_eval.json",
        {
            "seed": cfg.seed,
            "n_trees": best,
            "cv_scores": {str(k): v for k, v in cv_scores.items()},
            "n_train": int(train_idx.size),
            "n_test": int(test_idx.size),
            "accuracy": report.accuracy,
            "f1": report.f1,
            "confusion": {"tp": report.tp, "fp": report.fp, "fn": report.fn, "tn": report.tn},
        },
    )
    print(f"trees: {best}")
    print(f"test accuracy: {report.accuracy:.4f}")
    print(f"test f1: {report.f1:.4f}")
    return 0


def _survival_records(cfg: RunConfig, timelines, venues, ctx, keywords):
    records, skipped = build_survival_records(
        timelines, venues, _featurizer(ctx, keywords), horizon_days=cfg.horizon_days
    )
    if not records:
        raise ValueError("no eligible survival records in the corpus")
    return records, skipped


def cmd_train_cox(cfg: RunConfig) -> int:
    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    ctx = _feature_context(cfg)
    keywords = None
    if "keywords" in ctx.spec.families:
        _, _, _, _, keywords = _cohort_with_keywords(cfg, timelines, venues, ctx)
    records, skipped = _survival_records(cfg, timelines, venues, ctx, keywords)
    events = np.array([int(r.event) for r in records])
    train_idx, test_idx = stratified_split(events, test_frac=0.25, seed=cfg.seed)
    train = [records[i] for i in train_idx]
    test = [records[i] for i in test_idx]
    model = fit_cox(train)
    risks_train = [model.risk_score(r.covariates) for r in train]
    cindex_train = c_index(risks_train, train).c_index
    risks_test = [model.risk_score(r.covariates) for r in test]
    cindex_test = c_index(risks_test, test).c_index
    model.save(cfg.out / "cox_model.json")
    _write_keywords(cfg, keywords)
    _write_json(
        cfg.out / "cox_eval.json",
        {
            "seed": cfg.seed,
            "n_train": len(train),
            "n_test": len(test),
            "events_train": int(events[train_idx].sum()),
            "events_test": int(events[test_idx].sum()),
            "cindex_train": cindex_train,
            "cindex_test": cindex_test,
            "converged": model.converged,
            "ridge": model.ridge,
            "ineligible_users": skipped,
        },
    )
    print(f"records: {len(records)} (train {len(train)}, test {len(test)})")
    print(f"train c-index: {cindex_train:.4f}")
    print(f"test c-index: {cindex_test:.4f}")
    return 0


def cmd_predict(cfg: RunConfig, model_path: str, author: str) -> int:
    with open(_require_file(Path(model_path), "model file"), encoding="utf-8") as fh:
        kind = json.load(fh).get("format")
    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    timeline = next((tl for tl in timelines if tl.author == author), None)
    if timeline is None:
        raise ValueError(f"unknown author: {author}")
    ctx = _feature_context(cfg)
    keywords = _load_keywords_for_predict(cfg, ctx)
    t0 = timeline.posts[0].created
    window = [
        p for p in timeline.posts
        if (p.created - t0) // 86_400 <= cfg.window_days
    ]
    vector = _featurizer(ctx, keywords)(author, window)

    if kind == "forest-model":
        model = ForestModel.load(model_path)
        label, score = predict_forest(model, vector.values, vector.names)
        payload = {
            "author": author,
            "label": CohortLabel.CAS_TO_RECOV.value if label else CohortLabel.CAS.value,
            "score": score,
        }
        _write_json(cfg.out / "prediction.json", payload)
        print(f"label: {payload['label']}")
        print(f"score: {score:.4f}")
        return 0
    if kind == "cox-model":
        from . import plots

        model = CoxModel.load(model_path)
        curve = predict_curve(model, vector, cfg.horizon_days)
        _write_csv(
            cfg.out / "survival_curve.csv",
            ["t", "survival"],
            [[_fmt(t), f"{s:.6f}"] for t, s in curve.points],
        )
        figure = cfg.out / _figure_name("survival_curve", cfg)
        plots.save_step_curve(curve, figure, title=f"predicted survival: {author}")
        horizon_s = curve.value_at(cfg.horizon_days)
        _write_json(
            cfg.out / "prediction.json",
            {"author": author, "horizon_days": cfg.horizon_days, "survival_at_horizon": horizon_s},
        )
        print(f"survival at {cfg.horizon_days} days: {horizon_s:.4f}")
        return 0
    raise ValueError(f"unrecognized model format in {model_path}")


def cmd_report(cfg: RunConfig) -> int:
    from . import plots

    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    ctx = _feature_context(cfg)
    cohort, y, train_idx, test_idx, keywords = _cohort_with_keywords(
        cfg, timelines, venues, ctx
    )
    X, names = _cohort_matrix(cohort, ctx, keywords)

    table = kw_table(X[train_idx], names, y[train_idx])
    _write_csv(
        cfg.out / "screening.csv",
        ["feature", "H", "p", "selected"],
        [
            [r.name, _fmt(r.H), _fmt(r.p), int(r.p < cfg.alpha)]
            for r in sorted(table, key=lambda r: (r.p, r.name))
        ],
        comment=f"Kruskal-Wallis screening on training rows; alpha={cfg.alpha}; seed={cfg.seed}",
    )
    selected = [r for r in sorted(table, key=lambda r: (r.p, r.name)) if r.p < cfg.alpha]
    top = selected[:20]
    if top:
        plots.save_bars(
            [r.name for r in top],
            [-np.log10(max(r.p, 1e-300)) for r in top],
            cfg.out / _figure_name("screening_pvalues", cfg),
            title="feature screening",
            xlabel="-log10 p",
        )

    rows = []
    for j, name in enumerate(names):
        for cls, flag in ((CohortLabel.CAS, 0), (CohortLabel.CAS_TO_RECOV, 1)):
            vals = X[y == flag, j]
            q25, q50, q75 = np.percentile(vals, [25, 50, 75])
            rows.append(
                [name, cls.value, vals.size, _fmt(vals.mean()), _fmt(vals.std()),
                 _fmt(q25), _fmt(q50), _fmt(q75)]
            )
    _write_csv(
        cfg.out / "class_distributions.csv",
        ["feature", "label", "n", "mean", "std", "q25", "q50", "q75"],
        rows,
        comment="quartiles use linear interpolation (type 7)",
    )

    records, _ = _survival_records(cfg, timelines, venues, ctx, keywords)
    cov_rows, skipped = per_covariate_cindex(records)
    _write_csv(
        cfg.out / "covariate_cindex.csv",
        ["covariate", "c_index"],
        [[name, _fmt(c)] for name, c in cov_rows],
        comment=f"single-covariate hazard models, in-sample c-index; seed={cfg.seed}",
    )
    top_cov = cov_rows[:15]
    if top_cov:
        plots.save_bars(
            [name for name, _ in top_cov],
            [c for _, c in top_cov],
            cfg.out / _figure_name("covariate_cindex", cfg),
            title="single-covariate concordance",
            xlabel="c-index",
        )
    if skipped:
        print(f"skipped covariates: {', '.join(skipped)}")
    print(f"screened features: {len(selected)} of {len(names)}")
    print(f"covariate rows: {len(cov_rows)}")
    return 0


def cmd_km(cfg: RunConfig) -> int:
    from . import plots

    venues = _load_venues(cfg)
    timelines, _ = _load_timelines(cfg, venues)
    # KM needs only (time, event); skip feature assembly entirely.
    empty = lambda author, posts: FeatureVector(np.zeros(0), ())
    records, skipped = build_survival_records(
        timelines, venues, empty, horizon_days=cfg.horizon_days
    )
    if not records:
        raise ValueError("no eligible survival records in the corpus")
    curve = km_estimate(records)
    _write_csv(
        cfg.out / "km_curve.csv",
        ["t", "survival"],
        [[_fmt(t), f"{s:.6f}"] for t, s in curve.points],
    )
    plots.save_step_curve(
        curve, cfg.out / _figure_name("km_curve", cfg), title="Kaplan-Meier survival"
    )
    events = sum(int(r.event) for r in records)
    summary = {
        "records": len(records),
        "events": events,
        "censored": len(records) - events,
        "survival_at_horizon": curve.value_at(cfg.horizon_days),
        "ineligible_users": skipped,
    }
    _write_json(cfg.out / "km_summary.json", summary)
    for key in ("records", "events", "censored"):
        print(f"{key}: {summary[key]}")
    print(f"survival at {cfg.horizon_days} days: {summary['survival_at_horizon']:.4f}")
    return 0


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forumsurv",
        description="Survival and transition modeling over forum-post timelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key=value config file; flags win")
        sp.add_argument("--corpus", help="line-delimited JSON posts")
        sp.add_argument("--venues", help="venue config (defaults to the bundled one)")
        sp.add_argument("--drug-lexicon", dest="drug_lexicon")
        sp.add_argument("--category-lexicon", dest="category_lexicon")
        sp.add_argument("--embeddings", help="author<TAB>post_index<TAB>v1,v2,... file")
        sp.add_argument("--keywords", help="previously saved keyword set (predict)")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--window-days", dest="window_days", type=int)
        sp.add_argument("--horizon-days", dest="horizon_days", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--trees", type=int, help="fixed tree count; skips grid search")
        sp.add_argument("--families", help="comma list: drugs,categories,keywords,embedding,volume")
        sp.add_argument("--min-posts", dest="min_posts", type=int)
        sp.add_argument("--svg", action="store_true", default=None,
                        help="render figures as SVG instead of PNG")

    for name, help_text in (
        ("ingest", "parse the corpus into per-user timelines"),
        ("cohort", "build the transition cohort and survival dataset"),
        ("features", "export the cohort feature matrix"),
        ("train-forest", "train and evaluate the transition classifier"),
        ("train-cox", "fit and evaluate the hazard model"),
        ("report", "screening, per-covariate, and distribution reports"),
        ("km", "Kaplan-Meier curve over the survival dataset"),
    ):
        sp = sub.add_parser(name, help=help_text)
        common(sp)

    sp = sub.add_parser("predict", help="score one author with a saved model")
    common(sp)
    sp.add_argument("--model", required=True, help="saved forest or hazard model")
    sp.add_argument("--author", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        with _output_lock(cfg.out):
            if args.command == "ingest":
                return cmd_ingest(cfg)
            if args.command == "cohort":
                return cmd_cohort(cfg)
            if args.command == "features":
                return cmd_features(cfg)
            if args.command == "train-forest":
                return cmd_train_forest(cfg)
            if args.command == "train-cox":
                return cmd_train_cox(cfg)
            if args.command == "predict":
                return cmd_predict(cfg, args.model, args.author)
            if args.command == "report":
                return cmd_report(cfg)
            if args.command == "km":
                return cmd_km(cfg)
            raise UsageError(f"unknown command: {args.command}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
