"""Feature assembly, embedding centroids, and Kruskal-Wallis screening."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from forumsurv.features import (
    FeatureSpec,
    FeatureVector,
    build_features,
    embed_centroid,
    feature_names,
    kruskal_wallis,
    kw_table,
    load_embeddings,
    screen_features,
)
from forumsurv.lexicon import CategoryLexicon, DrugLexicon, KeywordSet


def txt(body, title=""):
    return SimpleNamespace(title=title, body=body)


DRUGS = DrugLexicon.from_pairs([("heroin", "Heroin"), ("lsd", "LSD")])
CATS = CategoryLexicon.from_patterns([("informal", "lol"), ("leisure", "party")])
KWS = KeywordSet((("party", 4.0),), (("quit", 36.0),))


# -----------------------------------------------------------------------
# Spec and vector types
# -----------------------------------------------------------------------


def test_spec_normalizes_family_order():
    spec = FeatureSpec(families=("volume", "drugs"))
    assert spec.families == ("drugs", "volume")


def test_spec_rejects_bad_input():
    with pytest.raises(ValueError):
        FeatureSpec(families=("drugs", "nonsense"))
    with pytest.raises(ValueError):
        FeatureSpec(families=())
    with pytest.raises(ValueError):
        FeatureSpec(d_emb=0)


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        FeatureVector(np.array([1.0, 2.0]), ("a",))
    with pytest.raises(ValueError):
        FeatureVector(np.array([np.nan]), ("a",))
    v = FeatureVector(np.zeros(0), ())
    assert v.names == ()


# -----------------------------------------------------------------------
# Centroid
# -----------------------------------------------------------------------


def test_centroid_matches_naive_sum():
    rng = np.random.default_rng(0)
    vecs = [rng.normal(size=5) for _ in range(7)]
    naive = sum(vecs) / len(vecs)
    np.testing.assert_allclose(embed_centroid(vecs, 5), naive, rtol=1e-12)


def test_centroid_errors():
    with pytest.raises(ValueError):
        embed_centroid([], 3)
    with pytest.raises(ValueError):
        embed_centroid([np.zeros(4)], 3)


@given(st.lists(st.lists(st.floats(-100, 100), min_size=3, max_size=3), min_size=1, max_size=8))
def test_centroid_permutation_invariant(vectors):
    forward = embed_centroid(vectors, 3)
    backward = embed_centroid(vectors[::-1], 3)
    np.testing.assert_allclose(forward, backward, rtol=1e-12, atol=1e-12)


# -----------------------------------------------------------------------
# Assembled vectors
# -----------------------------------------------------------------------


def test_feature_names_block_order():
    spec = FeatureSpec(
        families=("drugs", "categories", "keywords", "embedding", "volume"), d_emb=2
    )
    assert feature_names(spec, DRUGS, CATS) == (
        "drug:Heroin",
        "drug:LSD",
        "cat:informal",
        "cat:leisure",
        "kwrate:CAS",
        "kwrate:CAS_TO_RECOV",
        "emb:000",
        "emb:001",
        "vol:posts",
        "vol:mean_chars",
    )
    with pytest.raises(ValueError):
        feature_names(FeatureSpec(families=("drugs",)), None, CATS)


def test_build_features_hand_example():
    posts = [txt("heroin lol party party"), txt("quit lsd heroin")]
    spec = FeatureSpec(families=("drugs", "categories", "keywords", "volume"))
    vec = build_features(
        posts, spec, drug_lexicon=DRUGS, category_lexicon=CATS, keywords=KWS
    )
    # 3 drug utterances (2 heroin, 1 lsd); 7 tokens; keyword hits 2 and 1
    # over 2 posts; mean length of the two bodies.
    expected = [2 / 3, 1 / 3, 100 / 7, 200 / 7, 1.0, 0.5, 2.0, 18.5]
    np.testing.assert_allclose(vec.values, expected, rtol=1e-12)


def test_build_features_missing_inputs():
    spec = FeatureSpec(families=("keywords",))
    with pytest.raises(ValueError):
        build_features([txt("a")], spec, keywords=None)
    spec = FeatureSpec(families=("embedding",), d_emb=2)
    with pytest.raises(ValueError):
        build_features([txt("a")], spec, post_vectors=[])


def test_build_features_embedding_block():
    spec = FeatureSpec(families=("embedding", "volume"), d_emb=2)
    vec = build_features(
        [txt("a"), txt("bb")],
        spec,
        post_vectors=[np.array([1.0, 3.0]), np.array([3.0, 5.0])],
    )
    np.testing.assert_allclose(vec.values, [2.0, 4.0, 2.0, 1.5])


def test_no_posts_yields_zero_volume():
    spec = FeatureSpec(families=("volume",))
    vec = build_features([], spec)
    np.testing.assert_allclose(vec.values, [0.0, 0.0])


def test_load_embeddings(tmp_path):
    p = tmp_path / "emb.tsv"
    p.write_text("# comment\nalice\t0\t1.0,2.0\nalice\t2\t3.0,4.0\n", encoding="utf-8")
    table = load_embeddings(p)
    assert set(table) == {"alice"}
    np.testing.assert_allclose(table["alice"][2], [3.0, 4.0])
    bad = tmp_path / "bad.tsv"
    bad.write_text("alice\tzero\t1.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_embeddings(bad)


# -----------------------------------------------------------------------
# Kruskal-Wallis
# -----------------------------------------------------------------------


def test_kw_hand_statistic():
    res = kruskal_wallis([[1, 2, 3], [4, 5, 6]])
    assert abs(res.H - 27 / 7) < 1e-12
    # Chi-square tail with 1 dof at H ~ 3.857 sits just under 0.05.
    assert 0.045 < res.p < 0.055


def test_kw_exact_permutation_p():
    res = kruskal_wallis([[1, 2, 3], [4, 5, 6]], exact=True)
    # Only the observed split and its mirror reach the maximal H: 2/20.
    assert res.p == 0.1


def test_kw_tie_correction_matches_reference():
    groups = [[1, 1, 2], [2, 3, 3]]
    res = kruskal_wallis(groups)
    assert res.H == pytest.approx(10 / 3, rel=1e-12)
    ref_h, ref_p = stats.kruskal(*groups)
    assert res.H == pytest.approx(ref_h, rel=1e-12)
    assert res.p == pytest.approx(ref_p, rel=1e-12)


def test_kw_degenerate_and_errors():
    res = kruskal_wallis([[2, 2], [2, 2, 2]])
    assert (res.H, res.p) == (0.0, 1.0)
    with pytest.raises(ValueError):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(ValueError):
        kruskal_wallis([[1], []])


@given(
    st.lists(st.integers(-50, 50), min_size=2, max_size=10),
    st.lists(st.integers(-50, 50), min_size=2, max_size=10),
)
def test_kw_invariances(g1, g2):
    base = kruskal_wallis([g1, g2])
    swapped = kruskal_wallis([g2, g1])
    assert base.H == pytest.approx(swapped.H, abs=1e-9)
    # H depends on the data only through ranks, so any strictly increasing
    # transform leaves it unchanged.
    f = lambda xs: [math.exp(x / 25) for x in xs]
    mono = kruskal_wallis([f(g1), f(g2)])
    assert base.H == pytest.approx(mono.H, abs=1e-9)


def test_kw_statistic_never_negative():
    res = kruskal_wallis([[1, 1], [1, 2]])
    assert res.H >= 0.0


# -----------------------------------------------------------------------
# Screening
# -----------------------------------------------------------------------


def _planted_matrix():
    rng = np.random.default_rng(5)
    labels = np.array([0] * 30 + [1] * 30)
    noise = rng.normal(size=(60, 2))
    signal = np.where(labels, 5.0, 0.0) + rng.normal(size=60)
    constant = np.full(60, 3.0)
    X = np.column_stack([noise[:, 0], signal, noise[:, 1], constant])
    return X, ("n1", "signal", "n2", "const"), labels


def test_kw_table_and_screen():
    X, names, labels = _planted_matrix()
    table = kw_table(X, names, labels)
    assert [r.name for r in table] == list(names)
    kept = screen_features(X, names, labels, alpha=0.05)
    assert kept[0].name == "signal"
    assert "const" not in {r.name for r in kept}


def test_screen_rejects_bad_input():
    X, names, labels = _planted_matrix()
    with pytest.raises(ValueError):
        screen_features(X, names, labels, alpha=1.5)
    with pytest.raises(ValueError):
        kw_table(X[:10], names, labels)
    with pytest.raises(ValueError):
        kw_table(X[labels == 0], names, labels[labels == 0])
