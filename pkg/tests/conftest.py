import pytest

from lambdasc.evaluator import NormalReturn
from lambdasc.pretty import pretty
from lambdasc.session import Session


@pytest.fixture(scope="session")
def session():
    return Session()


def run_value(session, src: str, fuel: int = 200_000, use_bind: bool = False) -> str:
    """Evaluate a surface expression under the prelude and print its value."""
    r = session.run(session.expression(src), fuel, use_bind)
    assert isinstance(r, NormalReturn), r
    return pretty(r.value)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
