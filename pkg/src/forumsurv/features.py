"""Per-user feature assembly and Kruskal-Wallis feature screening."""

from __future__ import annotations

from dataclasses import dataclass
import itertools
import math

import numpy as np
from scipy.stats import chi2

from .lexicon import (
    CategoryLexicon,
    DrugLexicon,
    KeywordSet,
    category_scores,
    count_drug_utterances,
    post_text,
    tokenize,
)

# Canonical family order; vectors always concatenate the enabled blocks in
# this order regardless of how the caller listed them.
FAMILIES = ("drugs", "categories", "keywords", "embedding", "volume")


@dataclass(frozen=True)
class FeatureSpec:
    """Which feature families a vector carries, plus the embedding width."""

    families: tuple[str, ...] = ("drugs", "categories", "keywords", "volume")
    d_emb: int = 100

    def __post_init__(self):
        fams = tuple(f for f in FAMILIES if f in set(self.families))
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown feature families: {sorted(unknown)}")
        if not fams:
            raise ValueError("at least one feature family is required")
        if self.d_emb <= 0:
            raise ValueError("d_emb must be positive")
        object.__setattr__(self, "families", fams)


@dataclass(frozen=True)
class FeatureVector:
    """A named, finite feature vector; ``names`` aligns with ``values``."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", tuple(self.names))
        if vals.ndim != 1 or vals.size != len(self.names):
            raise ValueError("values and names lengths differ")
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("feature values must be finite")


def embed_centroid(post_vectors, d_emb: int) -> np.ndarray:
    """Coordinate-wise arithmetic mean of the per-post embedding vectors."""
    vecs = [np.asarray(v, dtype=float) for v in post_vectors]
    if not vecs:
        raise ValueError("no embedded posts to aggregate")
    for v in vecs:
        if v.shape != (d_emb,):
            raise ValueError(f"embedding has shape {v.shape}, expected ({d_emb},)")
    return np.mean(vecs, axis=0)


def feature_names(
    spec: FeatureSpec,
    drug_lexicon: DrugLexicon | None = None,
    category_lexicon: CategoryLexicon | None = None,
) -> tuple[str, ...]:
    """Fixed, reproducible column order for vectors built under ``spec``."""
    names: list[str] = []
    if "drugs" in spec.families:
        if drug_lexicon is None:
            raise ValueError("drugs family enabled but no drug lexicon given")
        names += [f"drug:{n}" for n in drug_lexicon.canonical_names]
    if "categories" in spec.families:
        if category_lexicon is None:
            raise ValueError("categories family enabled but no category lexicon given")
        names += [f"cat:{c}" for c in category_lexicon.names]
    if "keywords" in spec.families:
        names += ["kwrate:CAS", "kwrate:CAS_TO_RECOV"]
    if "embedding" in spec.families:
        names += [f"emb:{i:03d}" for i in range(spec.d_emb)]
    if "volume" in spec.families:
        names += ["vol:posts", "vol:mean_chars"]
    return tuple(names)


def build_features(
    posts,
    spec: FeatureSpec,
    *,
    drug_lexicon: DrugLexicon | None = None,
    category_lexicon: CategoryLexicon | None = None,
    keywords: KeywordSet | None = None,
    post_vectors=None,
) -> FeatureVector:
    """Assemble one user's feature vector from their posts.

    ``post_vectors`` carries whatever embedding vectors exist for these posts;
    posts without a vector simply contribute nothing to the centroid, but a
    user with no embedded posts at all is an error when the embedding family
    is enabled.
    """
    posts = list(posts)
    values: list[float] = []
    if "drugs" in spec.families:
        if drug_lexicon is None:
            raise ValueError("drugs family enabled but no drug lexicon given")
        props = count_drug_utterances(posts, drug_lexicon)
        values += [props.get(n, 0.0) for n in drug_lexicon.canonical_names]
    if "categories" in spec.families:
        if category_lexicon is None:
            raise ValueError("categories family enabled but no category lexicon given")
        scores = category_scores(posts, category_lexicon)
        values += [scores[c] for c in category_lexicon.names]
    if "keywords" in spec.families:
        if keywords is None:
            raise ValueError("keywords family enabled but no keyword set given")
        cas_words = keywords.words("CAS")
        rec_words = keywords.words("CAS_TO_RECOV")
        hits_cas = hits_rec = 0
        for p in posts:
            for tok in tokenize(post_text(p)):
                if tok in cas_words:
                    hits_cas += 1
                if tok in rec_words:
                    hits_rec += 1
        n = len(posts)
        values += [hits_cas / n if n else 0.0, hits_rec / n if n else 0.0]
    if "embedding" in spec.families:
        centroid = embed_centroid(post_vectors or [], spec.d_emb)
        values += centroid.tolist()
    if "volume" in spec.families:
        lengths = [len(post_text(p)) for p in posts]
        mean_len = sum(lengths) / len(lengths) if lengths else 0.0
        values += [float(len(posts)), mean_len]
    return FeatureVector(
        np.array(values, dtype=float),
        feature_names(spec, drug_lexicon, category_lexicon),
    )


def load_embeddings(path) -> dict[str, dict[int, np.ndarray]]:
    """Read ``author<TAB>post_index<TAB>v1,v2,...`` rows into nested dicts.

    ``post_index`` is the 0-based position of the post in the author's
    date-ordered timeline.
    """
    table: dict[str, dict[int, np.ndarray]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            author, idx_s, vec_s = parts
            try:
                idx = int(idx_s)
                vec = np.array([float(x) for x in vec_s.split(",")], dtype=float)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad embedding row") from exc
            table.setdefault(author, {})[idx] = vec
    return table


# ---------------------------------------------------------------------------
# Kruskal-Wallis screening


@dataclass(frozen=True)
class KWResult:
    name: str
    H: float
    p: float


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..N with ties sharing the average of their rank positions."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    sv = values[order]
    i = 0
    n = values.size
    while i < n:
        j = i
        while j < n and sv[j] == sv[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j + 1)
        i = j
    return ranks


def _h_statistic(rank_sums, sizes, n_total: int, tie_factor: float) -> float:
    raw = 12.0 / (n_total * (n_total + 1)) * sum(
        rs * rs / sz for rs, sz in zip(rank_sums, sizes)
    ) - 3.0 * (n_total + 1)
    return max(raw / tie_factor, 0.0)


def kruskal_wallis(groups, *, exact: bool = False) -> KWResult:
    """Tie-corrected Kruskal-Wallis H test across two or more samples.

    The p-value is the chi-square upper tail with k-1 degrees of freedom; with
    ``exact=True`` it is instead computed by enumerating every assignment of
    the pooled ranks to groups of the observed sizes (tiny inputs only).
    Degenerate all-identical input yields H=0, p=1.
    """
    gs = [np.asarray(g, dtype=float) for g in groups]
    if len(gs) < 2:
        raise ValueError("need at least two groups")
    if any(g.ndim != 1 or g.size == 0 for g in gs):
        raise ValueError("groups must be non-empty 1-D samples")
    pooled = np.concatenate(gs)
    n = pooled.size
    if np.all(pooled == pooled[0]):
        return KWResult("", 0.0, 1.0)
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_factor = 1.0 - float(np.sum(tie_counts**3 - tie_counts)) / (n**3 - n)
    ranks = _average_ranks(pooled)
    sizes = [g.size for g in gs]
    bounds = np.cumsum([0] + sizes)
    rank_sums = [float(ranks[bounds[k] : bounds[k + 1]].sum()) for k in range(len(gs))]
    h = _h_statistic(rank_sums, sizes, n, tie_factor)
    if exact:
        p = _exact_permutation_p(ranks, sizes, h, tie_factor)
    else:
        p = float(chi2.sf(h, len(gs) - 1))
    return KWResult("", h, p)


def _exact_permutation_p(ranks, sizes, h_obs: float, tie_factor: float) -> float:
    """Exact permutation tail: fraction of group assignments with H >= H_obs."""
    n = len(ranks)
    n_assignments = 1
    remaining = n
    for sz in sizes[:-1]:
        n_assignments *= math.comb(remaining, sz)
        remaining -= sz
    if n_assignments > 200_000:
        raise ValueError("too many assignments for an exact test")

    hits = 0

    def recurse(pool: tuple[int, ...], group: int, sums: list[float]):
        nonlocal hits
        if group == len(sizes) - 1:
            sums.append(float(sum(ranks[i] for i in pool)))
            h = _h_statistic(sums, sizes, n, tie_factor)
            if h >= h_obs - 1e-12:
                hits += 1
            sums.pop()
            return
        for combo in itertools.combinations(pool, sizes[group]):
            rest = tuple(i for i in pool if i not in set(combo))
            sums.append(float(sum(ranks[i] for i in combo)))
            recurse(rest, group + 1, sums)
            sums.pop()

    recurse(tuple(range(n)), 0, [])
    return hits / n_assignments


def kw_table(X, names, labels) -> list[KWResult]:
    """Kruskal-Wallis H and p for every feature column, split by label."""
    X = np.asarray(X, dtype=float)
    lab = np.asarray(labels)
    classes = np.unique(lab)
    if classes.size < 2:
        raise ValueError("labels must contain at least two classes")
    if X.shape[0] != lab.size or X.shape[1] != len(names):
        raise ValueError("matrix, names, and labels do not line up")
    out = []
    for j, name in enumerate(names):
        res = kruskal_wallis([X[lab == c, j] for c in classes])
        out.append(KWResult(name, res.H, res.p))
    return out


def screen_features(X, names, labels, alpha: float = 0.05) -> list[KWResult]:
    """Keep features with Kruskal-Wallis p < ``alpha``, most significant first.

    Pass training rows only; constant features never survive (H=0, p=1).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    kept = [r for r in kw_table(X, names, labels) if r.p < alpha]
    return sorted(kept, key=lambda r: (r.p, r.name))
