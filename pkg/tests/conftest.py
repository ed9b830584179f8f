import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}


class CriterionLog:
    """Records one pass/fail line per acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks: list[tuple[str, bool]] = []

    def check(self, ok, detail: str) -> None:
        self.checks.append((detail, bool(ok)))
        _RESULTS[self.number] = (self.title, all(c[1] for c in self.checks),
                                 "; ".join(d for d, _ in self.checks))

    def finish(self) -> None:
        failed = [d for d, ok in self.checks if not ok]
        assert not failed, "failed: " + "; ".join(failed)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, title = marker.args
    log = CriterionLog(number, title)
    # a crash before the first check still shows up as a failure
    _RESULTS[number] = (title, False, "did not complete")
    yield log


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, ok, detail = _RESULTS[n]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {title} | {detail}")
