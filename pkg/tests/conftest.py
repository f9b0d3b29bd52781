import os
import re
import sys

sys.path.insert(0, os.path.dirname(__file__))

import acceptance_log  # noqa: E402


def _key(k):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", k)]


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(acceptance_log.RESULTS, key=_key):
        status, detail = acceptance_log.RESULTS[key]
        tr.write_line(f"criterion {key:<4} {status}  {detail}")
