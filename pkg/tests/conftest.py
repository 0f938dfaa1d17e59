from pathlib import Path

import pytest

from tensorbelief.model import load_network

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def chain2_path():
    return FIXTURES / "chain2.json"


@pytest.fixture
def chain2(chain2_path):
    return load_network(chain2_path.read_text())


@pytest.fixture
def tie_net():
    # uniform prior + identity link: (a0,b0) and (a1,b1) both score 0.5
    from tensorbelief.model import make_network

    return make_network(
        {"A": ["a0", "a1"], "B": ["b0", "b1"]},
        [("A", [], [0.5, 0.5]), ("B", ["A"], [1.0, 0.0, 0.0, 1.0])],
    )


ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the summary table."""
    notes = []
    yield notes
    rep = getattr(request.node, "rep_call", None)
    if rep is not None and rep.passed:
        ACCEPTANCE[request.node.name] = (True, "; ".join(notes))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and "criterion" in getattr(item, "fixturenames", ()):
        item.rep_call = rep
        if rep.failed:
            msg = str(call.excinfo.value).splitlines()[0][:120] if call.excinfo else "failed"
            ACCEPTANCE[item.name] = (False, msg)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, note = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {note}")
