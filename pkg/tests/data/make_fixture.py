"""Regenerate the small MovieLens-format fixture in tests/data/ml_small/.

Users prefer one or two genres and rate matching movies higher. Run from the
repository root: ``python tests/data/make_fixture.py``.
"""

from pathlib import Path

import numpy as np

GENRES = ["Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
          "Documentary", "Drama", "Fantasy", "Horror", "Musical", "Mystery",
          "Romance", "Sci-Fi", "Thriller", "War", "Western"]

N_USERS, N_MOVIES, N_RATINGS, SEED = 60, 90, 1000, 2024


def main(out=Path(__file__).parent / "ml_small"):
    rng = np.random.default_rng(SEED)
    out.mkdir(parents=True, exist_ok=True)
    movies = {}
    for m in range(1, N_MOVIES + 1):
        k = int(rng.integers(1, 4))
        movies[m] = sorted(rng.choice(len(GENRES), size=k, replace=False).tolist())
    with open(out / "movies.dat", "w", encoding="latin-1", newline="\n") as f:
        for m, gs in movies.items():
            f.write(f"{m}::Movie {m} ({1980 + m % 40})::{'|'.join(GENRES[g] for g in gs)}\n")

    taste = {u: set(rng.choice(len(GENRES), size=int(rng.integers(1, 3)), replace=False).tolist())
             for u in range(1, N_USERS + 1)}
    per_user = 1 + rng.multinomial(N_RATINGS - N_USERS, np.full(N_USERS, 1 / N_USERS))
    lines = []
    for u in range(1, N_USERS + 1):
        liked = [m for m, gs in movies.items() if taste[u] & set(gs)]
        other = [m for m in movies if m not in liked]
        n = min(int(per_user[u - 1]), N_MOVIES)
        picks = []
        for _ in range(n):
            pool = liked if liked and rng.random() < 0.7 else other
            pool = [m for m in pool if m not in picks] or [m for m in movies if m not in picks]
            picks.append(int(rng.choice(pool)))
        t = 978_300_000 + int(rng.integers(0, 10_000_000))
        for m in picks:
            base = 4.3 if taste[u] & set(movies[m]) else 2.6
            r = int(np.clip(round(base + rng.normal(0, 0.8)), 1, 5))
            t += int(rng.integers(60, 86_400 * 3))
            lines.append((t, u, m, r))
    lines.sort()
    with open(out / "ratings.dat", "w", encoding="latin-1", newline="\n") as f:
        for t, u, m, r in lines:
            f.write(f"{u}::{m}::{r}::{t}\n")


if __name__ == "__main__":
    main()
