import warnings

import pytest

_RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    _RESULTS[n] = line
    print(line)


@pytest.fixture(autouse=True)
def _quiet_box_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*below two grid cells.*")
        yield


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n])
