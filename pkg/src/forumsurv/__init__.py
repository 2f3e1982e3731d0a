"""Survival analysis and transition classification for forum-post timelines."""

from .corpus import (
    CohortExample,
    CohortLabel,
    EmptyCohortError,
    Post,
    SurvivalRecord,
    UserTimeline,
    VenueConfig,
    build_survival_records,
    build_timelines,
    ingest_posts,
    label_transition_cohort,
)
from .features import (
    FeatureSpec,
    FeatureVector,
    KWResult,
    build_features,
    embed_centroid,
    feature_names,
    kruskal_wallis,
    load_embeddings,
    screen_features,
)
from .forest import (
    EvalReport,
    ForestModel,
    bootstrap_indices,
    evaluate,
    fit_forest,
    grid_search,
    predict_forest,
    stratified_split,
)
from .lexicon import (
    CategoryLexicon,
    DrugLexicon,
    KeywordSet,
    category_scores,
    count_drug_utterances,
    odds_ratio,
    post_text,
    select_keywords,
    tokenize,
)
from .survival import (
    ConcordanceReport,
    CoxModel,
    SurvCurve,
    c_index,
    fit_cox,
    km_estimate,
    per_covariate_cindex,
    predict_curve,
    predict_survival,
    survival_by_top_drug,
)

__version__ = "0.1.0"
