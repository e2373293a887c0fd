"""Print one 'A<n>: PASS/FAIL' verdict line per acceptance criterion.

The acceptance tests are named test_a<n>_<topic>; this hook runs outside
pytest's output capture, so the verdicts stay visible in normal runs.
"""

import re

_CRITERION = re.compile(r"::test_(a\d+)_")


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    label = match.group(1).upper()
    if report.when == "call":
        print(f"\n{label}: {'PASS' if report.passed else 'FAIL'}", flush=True)
    elif report.failed:
        print(f"\n{label}: FAIL ({report.when})", flush=True)
