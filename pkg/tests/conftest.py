"""Shared fixtures: a tiny two-venue world and post builders.

EPOCH is a multiple of 86_400 so that a post created at ``day(n)`` sits at
whole-day offset exactly n from a day-0 post.
"""

from importlib import resources

import pytest

from forumsurv.corpus import Post, VenueConfig

EPOCH = 18_000 * 86_400

CASUAL = "casual"
RECOVERY = "recovery"


def day(n: int, sec: int = 0) -> int:
    return EPOCH + n * 86_400 + sec


def mk_post(author, venue, n, sec=0, title="", body="x"):
    return Post(author, venue, day(n, sec), title, body)


@pytest.fixture
def venues() -> VenueConfig:
    return VenueConfig(frozenset({CASUAL}), frozenset({RECOVERY}))


@pytest.fixture(scope="session")
def demo_corpus():
    path = resources.files("forumsurv").joinpath("data", "demo_corpus.jsonl")
    assert path.is_file()
    return str(path)
