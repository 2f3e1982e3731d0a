"""Text primitives shared across the pipeline: tokenization, drug-alias
counting, category-lexicon scoring, and odds-ratio keyword selection.

Lexicon objects are immutable after loading, and every scoring function in
this module is pure, so callers may process users in any order (or in
parallel) without coordination.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
import re

# Tokens are maximal runs of letters, digits, or apostrophes ("don't" stays
# one token).  Underscore counts as punctuation here, unlike \w.
_TOKEN = re.compile(r"(?:[^\W_]|')+")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into tokens; empty tokens never appear."""
    return _TOKEN.findall(text.lower())


def post_text(post) -> str:
    """Title and body joined with a single space; either part may be empty."""
    title = post.title or ""
    body = post.body or ""
    if title and body:
        return title + " " + body
    return title or body


# ---------------------------------------------------------------------------
# Drug lexicon


@dataclass(frozen=True)
class DrugLexicon:
    """Alias table mapping surface forms to canonical drug names.

    Aliases are stored as lowercase token tuples so that multiword surface
    forms ("crystal meth") can be matched against token streams.  An optional
    per-canonical risk tier may come from a third column in the lexicon file;
    nothing in the shipped pipeline consumes it.
    """

    aliases: dict[tuple[str, ...], str]
    risk_tiers: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.aliases:
            raise ValueError("drug lexicon has no aliases")

    @property
    def canonical_names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.aliases.values())))

    @property
    def max_alias_tokens(self) -> int:
        return max(len(key) for key in self.aliases)

    @classmethod
    def from_pairs(cls, pairs, tiers=None) -> "DrugLexicon":
        aliases: dict[tuple[str, ...], str] = {}
        for surface, canonical in pairs:
            key = tuple(tokenize(surface))
            if not key or not canonical:
                raise ValueError(f"bad alias entry: {surface!r} -> {canonical!r}")
            if aliases.get(key, canonical) != canonical:
                raise ValueError(f"alias {surface!r} maps to two canonical names")
            aliases[key] = canonical
        return cls(aliases, dict(tiers or {}))

    @classmethod
    def load(cls, path) -> "DrugLexicon":
        """Parse ``alias<TAB>canonical[<TAB>tier]`` lines; '#' starts a comment."""
        pairs = []
        tiers: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) == 2:
                    pairs.append((parts[0], parts[1]))
                elif len(parts) == 3:
                    pairs.append((parts[0], parts[1]))
                    tiers[parts[1]] = parts[2]
                else:
                    raise ValueError(
                        f"{path}:{lineno}: expected 2 or 3 tab-separated fields"
                    )
        return cls.from_pairs(pairs, tiers)


def count_drug_utterances(posts, lexicon: DrugLexicon) -> dict[str, float]:
    """Proportion of drug utterances per canonical name, pooled over ``posts``.

    Matching is greedy leftmost-longest over the token stream: a multiword
    alias consumes its tokens, so "crystal meth" is one methamphetamine
    utterance, not a methamphetamine plus whatever "crystal" alone might be.
    Returns an empty dict when no alias matches; otherwise values sum to 1.
    """
    counts: Counter[str] = Counter()
    widest = lexicon.max_alias_tokens
    for post in posts:
        toks = tokenize(post_text(post))
        i = 0
        n = len(toks)
        while i < n:
            hit = None
            for width in range(min(widest, n - i), 0, -1):
                canonical = lexicon.aliases.get(tuple(toks[i : i + width]))
                if canonical is not None:
                    hit = (canonical, width)
                    break
            if hit is None:
                i += 1
            else:
                counts[hit[0]] += 1
                i += hit[1]
    total = sum(counts.values())
    if total == 0:
        return {}
    return {name: counts[name] / total for name in sorted(counts)}


# ---------------------------------------------------------------------------
# Category lexicon


@dataclass(frozen=True)
class CategoryLexicon:
    """Open word-category lexicon: each category owns literal words and/or
    ``prefix*`` patterns, and a token may score in several categories."""

    literals: dict[str, frozenset[str]]
    prefixes: dict[str, tuple[str, ...]]

    def __post_init__(self):
        if not self.names:
            raise ValueError("category lexicon has no categories")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.literals) | set(self.prefixes)))

    def matches(self, category: str, token: str) -> bool:
        if token in self.literals.get(category, ()):
            return True
        return any(token.startswith(p) for p in self.prefixes.get(category, ()))

    @classmethod
    def from_patterns(cls, items) -> "CategoryLexicon":
        literals: dict[str, set[str]] = {}
        prefixes: dict[str, list[str]] = {}
        for category, pattern in items:
            category = category.strip()
            pattern = pattern.strip().lower()
            if not category or not pattern:
                raise ValueError(f"bad category entry: {category!r} {pattern!r}")
            if pattern.endswith("*"):
                stem = pattern[:-1]
                if not stem:
                    raise ValueError(f"category {category!r} has a bare '*' pattern")
                prefixes.setdefault(category, []).append(stem)
            else:
                literals.setdefault(category, set()).add(pattern)
        return cls(
            {c: frozenset(v) for c, v in literals.items()},
            {c: tuple(sorted(set(v))) for c, v in prefixes.items()},
        )

    @classmethod
    def load(cls, path) -> "CategoryLexicon":
        """Parse ``category<TAB>pattern`` lines; '#' starts a comment."""
        items = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: expected 2 tab-separated fields"
                    )
                items.append((parts[0], parts[1]))
        return cls.from_patterns(items)


def category_scores(posts, lexicon: CategoryLexicon) -> dict[str, float]:
    """Per-category score: 100 * matching tokens / total tokens over ``posts``.

    Users with zero tokens score 0 in every category rather than erroring.
    """
    totals = {c: 0 for c in lexicon.names}
    n_tokens = 0
    for post in posts:
        for tok in tokenize(post_text(post)):
            n_tokens += 1
            for category in lexicon.names:
                if lexicon.matches(category, tok):
                    totals[category] += 1
    if n_tokens == 0:
        return {c: 0.0 for c in lexicon.names}
    return {c: 100.0 * totals[c] / n_tokens for c in lexicon.names}


# ---------------------------------------------------------------------------
# Odds ratios and keyword selection


def odds_ratio(
    n_c_with: float, n_c_without: float, n_notc_with: float, n_notc_without: float
) -> float:
    """Odds ratio of a word for a class from post-presence counts.

    The four cells are: posts in the class with/without the word, posts
    outside the class with/without the word.  If any cell is zero, 0.5 is
    added to all four (Haldane-Anscombe) before forming the ratio.
    """
    cells = (n_c_with, n_c_without, n_notc_with, n_notc_without)
    if any(c < 0 for c in cells):
        raise ValueError("negative cell count")
    if all(c == 0 for c in cells):
        raise ValueError("odds ratio undefined: all four cells are zero")
    if any(c == 0 for c in cells):
        cells = tuple(c + 0.5 for c in cells)
    a, b, c, d = cells
    return (a * d) / (c * b)


@dataclass(frozen=True)
class KeywordSet:
    """Class-discriminative keywords with their odds ratios, one list per
    cohort class, each sorted by descending odds ratio."""

    cas: tuple[tuple[str, float], ...]
    cas_to_recov: tuple[tuple[str, float], ...]

    def words(self, label: str) -> frozenset[str]:
        rows = self.cas if label == "CAS" else self.cas_to_recov
        return frozenset(w for w, _ in rows)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# class<TAB>word<TAB>odds_ratio\n")
            for label, rows in (("CAS", self.cas), ("CAS_TO_RECOV", self.cas_to_recov)):
                for word, ratio in rows:
                    fh.write(f"{label}\t{word}\t{ratio!r}\n")

    @classmethod
    def load(cls, path) -> "KeywordSet":
        buckets: dict[str, list[tuple[str, float]]] = {"CAS": [], "CAS_TO_RECOV": []}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or parts[0] not in buckets:
                    raise ValueError(f"{path}:{lineno}: bad keyword line")
                buckets[parts[0]].append((parts[1], float(parts[2])))
        return cls(tuple(buckets["CAS"]), tuple(buckets["CAS_TO_RECOV"]))


def select_keywords(
    cas_posts,
    recov_posts,
    *,
    min_posts: int = 5,
    min_odds: float = 2.0,
    min_gap: float = 2.0,
) -> KeywordSet:
    """Pick words whose class odds ratio clears ``min_odds`` and whose two
    per-class odds ratios differ by more than ``min_gap``.

    Frequencies are post-level presence counts.  Only words appearing in at
    least ``min_posts`` posts overall are considered, and only training posts
    should ever be passed in.
    """
    cas_sets = [frozenset(tokenize(post_text(p))) for p in cas_posts]
    rec_sets = [frozenset(tokenize(post_text(p))) for p in recov_posts]
    if not cas_sets or not rec_sets:
        raise ValueError("keyword selection needs posts from both classes")
    cas_with: Counter[str] = Counter()
    rec_with: Counter[str] = Counter()
    for s in cas_sets:
        cas_with.update(s)
    for s in rec_sets:
        rec_with.update(s)
    n_cas = len(cas_sets)
    n_rec = len(rec_sets)

    picked_cas = []
    picked_rec = []
    for word in set(cas_with) | set(rec_with):
        a = cas_with.get(word, 0)
        c = rec_with.get(word, 0)
        if a + c < min_posts:
            continue
        or_cas = odds_ratio(a, n_cas - a, c, n_rec - c)
        or_rec = odds_ratio(c, n_rec - c, a, n_cas - a)
        if or_cas > min_odds and abs(or_cas - or_rec) > min_gap:
            picked_cas.append((word, or_cas))
        if or_rec > min_odds and abs(or_rec - or_cas) > min_gap:
            picked_rec.append((word, or_rec))
    key = lambda row: (-row[1], row[0])
    return KeywordSet(tuple(sorted(picked_cas, key=key)), tuple(sorted(picked_rec, key=key)))
