from pathlib import Path

import pytest

from dynrec.ingest import Dataset, generate_synthetic_dataset, parse_movielens_movies, parse_movielens_ratings

DATA = Path(__file__).parent / "data"
ML_SMALL = DATA / "ml_small"


@pytest.fixture(scope="session")
def ml_small() -> Dataset:
    ratings = parse_movielens_ratings((ML_SMALL / "ratings.dat").read_bytes())
    movies = parse_movielens_movies((ML_SMALL / "movies.dat").read_bytes())
    return Dataset(ratings, movies, name="movielens")


@pytest.fixture(scope="session")
def synthetic() -> Dataset:
    return generate_synthetic_dataset(40, 32, 1500, seed=5)


ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the outcome is filled in from the test result."""
    state = {}

    def record(number, name: str, detail: str = ""):
        state.update(number=number, name=name, detail=detail)

    yield record
    if state:
        rep = getattr(request.node, "rep_call", None)
        status = "SKIP" if rep is None or rep.skipped else ("PASS" if rep.passed else "FAIL")
        line = f"[{status}] criterion {state['number']}: {state['name']}"
        if state["detail"]:
            line += f" ({state['detail']})"
        ACCEPTANCE_LINES[str(state["number"])] = line


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abc")), k)):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
