import contextlib
import time

import pytest
from hypothesis import settings

from ringspice.models import default_cards_path, load_model_cards

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def cards():
    return load_model_cards(default_cards_path("035"))


@pytest.fixture(scope="session")
def nmos(cards):
    return cards["nmos035"]


@pytest.fixture(scope="session")
def pmos(cards):
    return cards["pmos035"]


@pytest.fixture
def criterion(request):
    """Context manager that times one acceptance criterion and records its verdict.

    The body may add to ``rec["seconds"]`` (work done earlier and cached) and
    put a short summary in ``rec["detail"]``. Exceeding the budget fails it.
    """
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    @contextlib.contextmanager
    def run(number, title, budget=None):
        rec = {"seconds": 0.0, "detail": ""}
        t0 = time.perf_counter()
        ok = False
        try:
            yield rec
            ok = True
        finally:
            rec["seconds"] += time.perf_counter() - t0
            over = budget is not None and rec["seconds"] > budget
            ok = ok and not over
            limit = f" / budget {budget:g} s" if budget is not None else ""
            note = "  OVER BUDGET" if over else ""
            log[number] = (f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  "
                           f"({rec['seconds']:.2f} s{limit}){note}  {rec['detail']}").rstrip()
        if over:
            raise AssertionError(f"criterion {number} took {rec['seconds']:.1f} s > {budget} s")

    return run


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if log:
        terminalreporter.section("acceptance criteria")
        for number in sorted(log):
            terminalreporter.write_line(log[number])
