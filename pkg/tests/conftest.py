from collections import defaultdict

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# criterion number -> list of (ok, message), filled by the acceptance suite
_ACCEPTANCE = defaultdict(list)


@pytest.fixture
def criterion():
    def record(number, ok, message):
        _ACCEPTANCE[number].append((bool(ok), message))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[number]
        status = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        detail = "; ".join(("" if ok else "[fail] ") + msg for ok, msg in checks)
        terminalreporter.write_line(f"{status} criterion {number}: {detail}")
