"""Seeded synthetic corpus generator with a planted risk signal.

Half the generated users lean on high-risk vocabulary (opioid aliases,
withdrawal talk) and tend to post in a recovery venue within months; the
other half stick to low-risk vocabulary and keep posting casually for well
over a year.  End-to-end tests train on this corpus and check that the
pipeline recovers the planted signal.
"""

from __future__ import annotations

import json
import random

EPOCH = 1_325_376_000  # fixed corpus start date

CASUAL_VENUES = ("Opiates", "Drugs")
RECOVERY_VENUES = ("OpiatesRecovery", "RedditorsInRecovery")

RISKY_WORDS = (
    "heroin dope oxy fent withdrawal sick tolerance dose nod cash need "
    "today now damn pain clinic bag gram cop score rough shaking"
).split()
SAFE_WORDS = (
    "lsd acid molly mdma shrooms music festival friends party weekend "
    "movie trip amazing colors dance visuals chill beautiful show lights"
).split()
COMMON_WORDS = (
    "the and was with have just really about some been this that when "
    "what your like from will know going"
).split()
RECOVERY_WORDS = (
    "quit clean sober anymore addiction help advice struggling day one "
    "proud finally done support"
).split()


def _body(rng: random.Random, pool, n_topic: int, n_common: int) -> str:
    words = rng.choices(pool, k=n_topic) + rng.choices(COMMON_WORDS, k=n_common)
    rng.shuffle(words)
    return " ".join(words)


def _post(author, subreddit, day, second, title, body):
    return {
        "author": author,
        "subreddit": subreddit,
        "created_utc": EPOCH + day * 86_400 + second,
        "title": title,
        "selftext": body,
    }


def generate_corpus(
    path,
    *,
    n_users: int = 2000,
    seed: int = 7,
    window_days: int = 182,
    horizon_days: int = 365,
    embeddings_path=None,
    d_emb: int = 8,
) -> dict:
    """Write a corpus JSONL (and optionally an embeddings TSV); returns counts."""
    rng = random.Random(seed)
    n_posts = 0
    n_risky = 0
    emb_lines: list[str] = []
    with open(path, "w", encoding="utf-8") as fh:
        for u in range(n_users):
            author = f"u{u:05d}"
            risky = rng.random() < 0.5
            pool = RISKY_WORDS if risky else SAFE_WORDS
            n_risky += int(risky)

            n_window = rng.randint(10, 16)
            days = [0] + sorted(rng.sample(range(1, window_days), n_window - 1))
            posts = []
            for day in days:
                venue = rng.choice(CASUAL_VENUES)
                title = _body(rng, pool, 2, 1)
                body = _body(rng, pool, rng.randint(6, 12), rng.randint(4, 8))
                posts.append(_post(author, venue, day, rng.randint(0, 86_399), title, body))

            if risky:
                recovery_day = 21 + int(rng.expovariate(1.0 / 170.0))
                if recovery_day <= window_days + horizon_days:
                    venue = rng.choice(RECOVERY_VENUES)
                    body = _body(rng, RECOVERY_WORDS, rng.randint(6, 10), rng.randint(3, 6))
                    posts.append(
                        _post(author, venue, recovery_day, rng.randint(0, 86_399), "day one", body)
                    )
            else:
                # Keep posting casually long enough to qualify as persistently
                # casual: the span must clear window + horizon days.
                tail_days = sorted(
                    rng.sample(
                        range(window_days + 30, window_days + horizon_days + 180),
                        3,
                    )
                )
                tail_days[-1] = max(tail_days[-1], window_days + horizon_days + rng.randint(5, 120))
                for day in tail_days:
                    venue = rng.choice(CASUAL_VENUES)
                    body = _body(rng, pool, rng.randint(6, 12), rng.randint(4, 8))
                    posts.append(_post(author, venue, day, rng.randint(0, 86_399), "", body))

            posts.sort(key=lambda p: p["created_utc"])
            for p in posts:
                fh.write(json.dumps(p, sort_keys=True) + "\n")
            n_posts += len(posts)

            if embeddings_path is not None:
                center = 1.0 if risky else -1.0
                for idx in range(len(posts)):
                    vec = [rng.gauss(center, 0.6), rng.gauss(-center, 0.6)] + [
                        rng.gauss(0.0, 1.0) for _ in range(d_emb - 2)
                    ]
                    emb_lines.append(
                        author + "\t" + str(idx) + "\t" + ",".join(f"{v:.6f}" for v in vec)
                    )

    if embeddings_path is not None:
        with open(embeddings_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(emb_lines) + "\n")

    return {"users": n_users, "posts": n_posts, "risky_users": n_risky}
