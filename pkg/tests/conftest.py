import pytest

from opmech.mechanics.builtins import BUILTINS, builtin
from opmech.mechanics.liouvillian import derive


@pytest.fixture(scope="session")
def systems():
    """One instance per builtin, derivations cached on the instance."""
    return {name: builtin(name) for name in BUILTINS}


@pytest.fixture(scope="session")
def spherical(systems):
    s = systems["spherical_pendulum"]
    derive(s)
    return s


def pytest_terminal_summary(terminalreporter):
    import sys

    mods = [m for n, m in sys.modules.items() if n.rsplit(".", 1)[-1] == "test_acceptance"]
    results = getattr(mods[0], "RESULTS", {}) if mods else {}
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
