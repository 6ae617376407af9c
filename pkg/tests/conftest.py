ACCEPTANCE = {}


def record(number, name, passed, detail):
    """Store one acceptance outcome for the terminal summary."""
    ACCEPTANCE[number] = (name, bool(passed), detail)
    print(f"criterion {number} ({name}): {'PASS' if passed else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} ({name}): {'PASS' if passed else 'FAIL'}: {detail}")
