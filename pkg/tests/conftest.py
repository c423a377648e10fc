"""Shared test configuration.

Prints a one-line verdict per end-to-end acceptance check after the run, so
the overall gate status is readable without scanning the full pytest log.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    tr = terminalreporter
    verdicts = []
    for category, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in tr.stats.get(category, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" in nodeid and getattr(rep, "when", "call") == "call":
                verdicts.append((nodeid.split("::")[-1], label))
    if not verdicts:
        return
    tr.write_sep("-", "acceptance checks")
    for name, label in verdicts:
        tr.write_line(f"{label}  {name}")
