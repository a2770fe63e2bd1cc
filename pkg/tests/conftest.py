import sys


def pytest_terminal_summary(terminalreporter):
    """Print one verdict line per acceptance criterion that ran."""
    lines = {}
    for mod in list(sys.modules.values()):
        lines.update(getattr(mod, "ACCEPTANCE_RESULTS", None) or {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
    passed = sum(line.startswith("[PASS]") for line in lines.values())
    terminalreporter.write_line(f"{passed}/{len(lines)} criteria pass")
