"""Corpus ingestion and dataset construction.

Raw line-delimited JSON posts become per-user timelines, which in turn become
(a) a balanced transition cohort for the classifier and (b) right-censored
survival records for the hazard model.  All date arithmetic runs on whole-day
offsets from each user's first post.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
import json
import random
from typing import TYPE_CHECKING, Callable, Sequence

if TYPE_CHECKING:
    from .features import FeatureVector

SECONDS_PER_DAY = 86_400
DEFAULT_WINDOW_DAYS = 182   # six months of observed behavior
DEFAULT_HORIZON_DAYS = 365  # one year of follow-up after the window


class EmptyCohortError(ValueError):
    """Raised when cohort construction finds no positive examples."""


@dataclass(frozen=True)
class Post:
    author: str
    subreddit: str
    created: int
    title: str = ""
    body: str = ""

    def __post_init__(self):
        if not self.author or not self.subreddit:
            raise ValueError("post needs a non-empty author and subreddit")
        if self.created <= 0:
            raise ValueError("post timestamp must be positive")


@dataclass(frozen=True)
class UserTimeline:
    author: str
    posts: tuple[Post, ...]


class CohortLabel(str, Enum):
    CAS = "CAS"
    CAS_TO_RECOV = "CAS_TO_RECOV"


@dataclass(frozen=True)
class CohortExample:
    author: str
    label: CohortLabel
    window_posts: tuple[Post, ...]


@dataclass(frozen=True)
class SurvivalRecord:
    author: str
    time_days: int
    event: bool
    covariates: "FeatureVector"


@dataclass(frozen=True)
class VenueConfig:
    """Which subreddits count as casual-use venues vs. recovery venues.

    Names are matched case-insensitively and stored lowercased.
    """

    casual: frozenset[str]
    recovery: frozenset[str]

    def __post_init__(self):
        casual = frozenset(s.lower() for s in self.casual)
        recovery = frozenset(s.lower() for s in self.recovery)
        object.__setattr__(self, "casual", casual)
        object.__setattr__(self, "recovery", recovery)
        if not casual or not recovery:
            raise ValueError("both venue groups must be non-empty")
        if casual & recovery:
            raise ValueError(f"venues in both groups: {sorted(casual & recovery)}")

    def kind(self, subreddit: str) -> str | None:
        s = subreddit.lower()
        if s in self.casual:
            return "casual"
        if s in self.recovery:
            return "recovery"
        return None

    @classmethod
    def default(cls) -> "VenueConfig":
        return cls(
            frozenset({"opiates", "drugs"}),
            frozenset({"opiatesrecovery", "redditorsinrecovery"}),
        )

    @classmethod
    def load(cls, path) -> "VenueConfig":
        """Parse a plain-text config with ``[casual]`` / ``[recovery]`` sections."""
        groups: dict[str, set[str]] = {"casual": set(), "recovery": set()}
        section = None
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("[") and line.endswith("]"):
                    section = line[1:-1].strip().lower()
                    if section not in groups:
                        raise ValueError(f"{path}:{lineno}: unknown section {section!r}")
                    continue
                if section is None:
                    raise ValueError(f"{path}:{lineno}: venue name outside a section")
                groups[section].add(line)
        return cls(frozenset(groups["casual"]), frozenset(groups["recovery"]))


# ---------------------------------------------------------------------------
# Ingestion


@dataclass(frozen=True)
class IngestResult:
    posts: tuple[Post, ...]
    malformed: int
    off_venue: int


def ingest_posts(stream, venues: VenueConfig) -> IngestResult:
    """Parse line-delimited JSON posts, keeping only configured venues.

    Malformed lines (bad JSON, missing author/subreddit/created_utc, or a
    non-positive timestamp) are counted rather than fatal.  ``selftext`` is
    preferred over ``body`` for the post text.
    """
    posts: list[Post] = []
    malformed = 0
    off_venue = 0
    for raw in stream:
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except ValueError:
            malformed += 1
            continue
        if not isinstance(rec, dict):
            malformed += 1
            continue
        author = rec.get("author")
        subreddit = rec.get("subreddit")
        try:
            created = int(rec.get("created_utc"))
        except (TypeError, ValueError):
            malformed += 1
            continue
        if not author or not subreddit or created <= 0:
            malformed += 1
            continue
        if venues.kind(subreddit) is None:
            off_venue += 1
            continue
        body = rec.get("selftext")
        if body is None:
            body = rec.get("body") or ""
        title = rec.get("title") or ""
        posts.append(Post(str(author), str(subreddit), created, str(title), str(body)))
    return IngestResult(tuple(posts), malformed, off_venue)


def build_timelines(posts) -> list[UserTimeline]:
    """Group posts per author, each timeline date-ascending (stable on ties),
    and return the timelines sorted by author."""
    by_author: dict[str, list[Post]] = defaultdict(list)
    for p in posts:
        by_author[p.author].append(p)
    out = []
    for author in sorted(by_author):
        ordered = sorted(by_author[author], key=lambda p: p.created)
        out.append(UserTimeline(author, tuple(ordered)))
    return out


def _day_offset(post: Post, t0: int) -> int:
    return (post.created - t0) // SECONDS_PER_DAY


# ---------------------------------------------------------------------------
# Transition cohort


def label_transition_cohort(
    timelines: Sequence[UserTimeline],
    venues: VenueConfig,
    *,
    window_days: int = DEFAULT_WINDOW_DAYS,
    horizon_days: int = DEFAULT_HORIZON_DAYS,
    seed: int = 42,
    negatives_per_positive: int = 1,
) -> list[CohortExample]:
    """Label users as transitioners (CAS_TO_RECOV) or persistently casual (CAS).

    The observation window is anchored at each user's first post in a
    configured venue.  Positives post only in casual venues during the window
    and first post in a recovery venue within the following horizon.
    Negatives have casual-only histories spanning at least window + horizon
    days and no recovery post anywhere; any recovery post inside the window
    disqualifies a user from both classes.  Eligible users need >= 3 posts.
    Negatives are down-sampled with ``seed`` to ``negatives_per_positive``
    per positive.
    """
    if window_days <= 0 or horizon_days <= 0:
        raise ValueError("window_days and horizon_days must be positive")
    if negatives_per_positive < 1:
        raise ValueError("negatives_per_positive must be >= 1")
    positives: list[CohortExample] = []
    negatives: list[CohortExample] = []
    for tl in timelines:
        posts = [p for p in tl.posts if venues.kind(p.subreddit) is not None]
        if len(posts) < 3:
            continue
        t0 = posts[0].created
        window = tuple(p for p in posts if _day_offset(p, t0) <= window_days)
        if any(venues.kind(p.subreddit) == "recovery" for p in window):
            continue
        recovery_days = [
            _day_offset(p, t0)
            for p in posts
            if venues.kind(p.subreddit) == "recovery"
        ]
        if recovery_days:
            first_recovery = min(recovery_days)
            if window_days < first_recovery <= window_days + horizon_days:
                positives.append(
                    CohortExample(tl.author, CohortLabel.CAS_TO_RECOV, window)
                )
            # Recovery beyond the horizon: not a positive, and the recovery
            # post bars the user from the casual-only class too.
        else:
            span = _day_offset(posts[-1], t0)
            if span >= window_days + horizon_days:
                negatives.append(CohortExample(tl.author, CohortLabel.CAS, window))
    if not positives:
        raise EmptyCohortError("no transition examples found")
    rng = random.Random(seed)
    keep = min(len(negatives), negatives_per_positive * len(positives))
    sampled = rng.sample(negatives, keep)
    cohort = positives + sampled
    cohort.sort(key=lambda ex: (ex.label.value, ex.author))
    return cohort


# ---------------------------------------------------------------------------
# Survival records


def build_survival_records(
    timelines: Sequence[UserTimeline],
    venues: VenueConfig,
    featurize: Callable[[str, Sequence[Post]], "FeatureVector"],
    *,
    horizon_days: int = DEFAULT_HORIZON_DAYS,
) -> tuple[list[SurvivalRecord], int]:
    """Build right-censored time-to-first-recovery-post records.

    Eligible users have >= 10 posts, their first three posts in casual venues,
    and posts on at least two distinct days.  The event is the first recovery
    post at or before the horizon; otherwise the user is censored at
    min(last post day, horizon).  Users whose first recovery post lands on
    day 0 are excluded outright (no 0-day survival times).  ``featurize``
    receives the author and the posts strictly before the event/censor time,
    always a prefix of the timeline.  Returns (records, n_skipped).
    """
    if horizon_days <= 0:
        raise ValueError("horizon_days must be positive")
    records: list[SurvivalRecord] = []
    skipped = 0
    for tl in timelines:
        posts = [p for p in tl.posts if venues.kind(p.subreddit) is not None]
        if len(posts) < 10:
            skipped += 1
            continue
        if any(venues.kind(p.subreddit) != "casual" for p in posts[:3]):
            skipped += 1
            continue
        t0 = posts[0].created
        days = [_day_offset(p, t0) for p in posts]
        if len(set(days)) < 2:
            skipped += 1
            continue
        recovery_days = [
            d
            for p, d in zip(posts, days)
            if venues.kind(p.subreddit) == "recovery"
        ]
        if recovery_days and recovery_days[0] == 0:
            skipped += 1
            continue
        if recovery_days and recovery_days[0] <= horizon_days:
            time_days, event = recovery_days[0], True
        else:
            time_days, event = min(days[-1], horizon_days), False
        before = [p for p, d in zip(posts, days) if d < time_days]
        vector = featurize(tl.author, before)
        records.append(SurvivalRecord(tl.author, time_days, event, vector))
    return records, skipped
