"""Shared fixtures; prints the acceptance criteria verdicts at the end of the run."""
import pytest

_VERDICTS: dict[int, tuple[bool, str, str]] = {}
_STARTED: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record the verdict of one acceptance criterion.

    Usage: ``criterion(3, "bimodal mode recovery")`` then ``.report(ok, detail)``.
    """

    class _Recorder:
        def __call__(self, number: int, title: str):
            self.number, self.title = number, title
            _STARTED[number] = title
            return self

        def report(self, ok: bool, detail: str):
            _VERDICTS[self.number] = (bool(ok), self.title, detail)
            assert ok, detail

    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _STARTED:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_STARTED):
        if n in _VERDICTS:
            ok, title, detail = _VERDICTS[n]
            tr.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        else:
            tr.write_line(f"criterion {n} [FAIL] {_STARTED[n]}: errored before a verdict")
