import acceptance_report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance check, derived from the real outcomes."""
    status = {}
    for key in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(key, []):
            if "test_acceptance" not in report.nodeid:
                continue
            name = report.nodeid.split("::")[-1]
            status[name] = "PASS" if key == "passed" else "FAIL"
    if not status:
        return
    terminalreporter.section("acceptance checks")
    for name, label in acceptance_report.LABELS.items():
        outcome = status.get(name)
        if outcome is None:
            continue
        detail = acceptance_report.DETAILS.get(name, "")
        line = "%-58s %s" % (label, outcome)
        if detail:
            line += "  (%s)" % detail
        terminalreporter.write_line(line)
