"""Collects acceptance verdicts and prints one line per criterion at the end of the run."""
from collections import OrderedDict

import pytest

_VERDICTS: "OrderedDict[int, list]" = OrderedDict()


class Verdicts:
    """Record sub-checks of a criterion; the criterion passes iff all of them do."""

    def check(self, criterion: int, ok: bool, detail: str) -> bool:
        _VERDICTS.setdefault(criterion, []).append((bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        return bool(ok)


@pytest.fixture(scope="session")
def verdicts():
    return Verdicts()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_VERDICTS):
        checks = _VERDICTS[crit]
        ok = all(c[0] for c in checks)
        failed = [d for good, d in checks if not good]
        detail = "; ".join(failed) if failed else f"{len(checks)} check(s)"
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}: {detail}")
