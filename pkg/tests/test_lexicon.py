"""Tokenization, lexicon scoring, and odds-ratio keyword selection."""

from types import SimpleNamespace

import pytest
from hypothesis import given, strategies as st

from forumsurv.lexicon import (
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


def txt(body, title=""):
    return SimpleNamespace(title=title, body=body)


# -----------------------------------------------------------------------
# Tokenization
# -----------------------------------------------------------------------


def test_tokenize_basics():
    assert tokenize("Don't stop!  2mg, now...") == ["don't", "stop", "2mg", "now"]
    assert tokenize("") == []
    assert tokenize("...!?;") == []


def test_tokenize_underscore_is_punctuation():
    assert tokenize("a_b c") == ["a", "b", "c"]


def test_tokenize_lowercases():
    assert tokenize("HeRoIn LSD") == ["heroin", "lsd"]


def test_post_text_joins_title_and_body():
    assert post_text(txt("body here", title="a title")) == "a title body here"
    assert post_text(txt("", title="only title")) == "only title"
    assert post_text(txt("only body")) == "only body"
    assert post_text(txt("")) == ""


# -----------------------------------------------------------------------
# Drug lexicon
# -----------------------------------------------------------------------


@pytest.fixture
def drug_lex():
    return DrugLexicon.from_pairs(
        [
            ("heroin", "Heroin"),
            ("dope", "Heroin"),
            ("crystal meth", "methamphetamine"),
            ("meth", "methamphetamine"),
            ("crystal", "quartz"),
            ("lsd", "LSD"),
        ]
    )


def test_canonical_names_sorted_unique(drug_lex):
    assert drug_lex.canonical_names == ("Heroin", "LSD", "methamphetamine", "quartz")
    assert drug_lex.max_alias_tokens == 2


def test_conflicting_alias_rejected():
    with pytest.raises(ValueError):
        DrugLexicon.from_pairs([("x", "A"), ("x", "B")])
    with pytest.raises(ValueError):
        DrugLexicon.from_pairs([])


def test_utterance_proportions(drug_lex):
    posts = [txt("heroin and dope and lsd")]
    props = count_drug_utterances(posts, drug_lex)
    assert props == {"Heroin": 2 / 3, "LSD": 1 / 3}
    assert sum(props.values()) == pytest.approx(1.0)


def test_multiword_alias_wins_leftmost_longest(drug_lex):
    # "crystal meth" must count once as methamphetamine, not as quartz + meth.
    props = count_drug_utterances([txt("crystal meth scene")], drug_lex)
    assert props == {"methamphetamine": 1.0}
    props = count_drug_utterances([txt("crystal ball and meth")], drug_lex)
    assert props == {"methamphetamine": 0.5, "quartz": 0.5}


def test_no_matches_gives_empty_dict(drug_lex):
    assert count_drug_utterances([txt("nothing relevant")], drug_lex) == {}
    assert count_drug_utterances([], drug_lex) == {}


def test_drug_lexicon_load_roundtrip(tmp_path, drug_lex):
    p = tmp_path / "drugs.tsv"
    p.write_text(
        "# comment\nheroin\tHeroin\topioid\nmeth\tmethamphetamine\n",
        encoding="utf-8",
    )
    lex = DrugLexicon.load(p)
    assert lex.canonical_names == ("Heroin", "methamphetamine")
    assert lex.risk_tiers == {"Heroin": "opioid"}
    bad = tmp_path / "bad.tsv"
    bad.write_text("only-one-field\n", encoding="utf-8")
    with pytest.raises(ValueError):
        DrugLexicon.load(bad)


# -----------------------------------------------------------------------
# Category lexicon
# -----------------------------------------------------------------------


@pytest.fixture
def cat_lex():
    return CategoryLexicon.from_patterns(
        [("informal", "lol"), ("leisure", "party"), ("leisure", "danc*")]
    )


def test_category_names_sorted(cat_lex):
    assert cat_lex.names == ("informal", "leisure")


def test_prefix_and_literal_matching(cat_lex):
    assert cat_lex.matches("leisure", "party")
    assert cat_lex.matches("leisure", "dancing")
    assert cat_lex.matches("leisure", "danc")
    assert not cat_lex.matches("leisure", "dan")
    assert not cat_lex.matches("informal", "party")


def test_category_scores_percentage(cat_lex):
    # 7 tokens total, 1 informal hit, 3 leisure hits.
    posts = [txt("lol party"), txt("dancing danced at a party")]
    scores = category_scores(posts, cat_lex)
    assert scores["informal"] == pytest.approx(100.0 / 7)
    assert scores["leisure"] == pytest.approx(400.0 / 7)


def test_category_scores_zero_tokens(cat_lex):
    assert category_scores([txt("")], cat_lex) == {"informal": 0.0, "leisure": 0.0}


def test_bare_star_pattern_rejected():
    with pytest.raises(ValueError):
        CategoryLexicon.from_patterns([("x", "*")])


def test_category_lexicon_load(tmp_path):
    p = tmp_path / "cats.tsv"
    p.write_text("informal\tlol\nleisure\tdanc*\n", encoding="utf-8")
    lex = CategoryLexicon.load(p)
    assert lex.matches("leisure", "dancing")


# -----------------------------------------------------------------------
# Odds ratios
# -----------------------------------------------------------------------


def test_odds_ratio_hand_values():
    assert odds_ratio(30, 70, 10, 90) == (30 * 90) / (10 * 70)
    for k, m in ((1, 1), (3, 5), (10, 90)):
        assert odds_ratio(k, m, k, m) == 1.0


def test_odds_ratio_smoothing_on_zero_cell():
    # One zero cell adds 0.5 to all four before forming the ratio.
    assert odds_ratio(5, 95, 0, 100) == (5.5 * 100.5) / (0.5 * 95.5)


def test_odds_ratio_errors():
    with pytest.raises(ValueError):
        odds_ratio(0, 0, 0, 0)
    with pytest.raises(ValueError):
        odds_ratio(-1, 2, 3, 4)


@given(st.tuples(*[st.integers(min_value=0, max_value=50)] * 4))
def test_odds_ratio_reciprocity(cells):
    a, b, c, d = cells
    if a + b + c + d == 0:
        return
    assert odds_ratio(a, b, c, d) * odds_ratio(c, d, a, b) == pytest.approx(
        1.0, abs=1e-12
    )


# -----------------------------------------------------------------------
# Keyword selection
# -----------------------------------------------------------------------


def quit_fixture():
    """'quit' in 8/10 transition posts and 1/10 casual posts."""
    rec = [txt("quit filler words")] * 8 + [txt("filler words")] * 2
    cas = [txt("quit filler words")] * 1 + [txt("filler words")] * 9
    return cas, rec


def test_keyword_odds_ratio_36():
    cas, rec = quit_fixture()
    ks = select_keywords(cas, rec)
    assert ks.cas_to_recov == (("quit", 36.0),)
    assert ks.cas == ()
    assert ks.words("CAS_TO_RECOV") == frozenset({"quit"})


def test_everywhere_word_not_selected():
    cas, rec = quit_fixture()
    ks = select_keywords(cas, rec)
    # "filler" and "words" appear in every post of both classes.
    assert "filler" not in ks.words("CAS") | ks.words("CAS_TO_RECOV")


def test_min_posts_threshold():
    cas = [txt("rare stuff")] + [txt("stuff")] * 9
    rec = [txt("stuff")] * 10
    # "rare" appears in 1 post total, below the default floor of 5.
    ks = select_keywords(cas, rec)
    assert "rare" not in ks.words("CAS")
    ks = select_keywords(cas, rec, min_posts=1)
    assert "rare" in ks.words("CAS")


def test_keyword_selection_needs_both_classes():
    with pytest.raises(ValueError):
        select_keywords([], [txt("a")])


def test_keywordset_roundtrip(tmp_path):
    ks = KeywordSet((("trip", 4.25),), (("quit", 36.0), ("clean", 3.5)))
    p = tmp_path / "kw.tsv"
    ks.save(p)
    assert KeywordSet.load(p) == ks
    bad = tmp_path / "bad.tsv"
    bad.write_text("NOPE\tw\t1.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        KeywordSet.load(bad)
