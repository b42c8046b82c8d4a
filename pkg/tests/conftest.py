def pytest_terminal_summary(terminalreporter):
    """Echo the per-criterion verdict lines collected by the acceptance suite."""
    try:
        import test_acceptance
    except ImportError:
        return
    lines = getattr(test_acceptance, "REPORT_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
