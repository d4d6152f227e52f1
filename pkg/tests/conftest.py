"""Print the acceptance summary at the end of a pytest run."""


def pytest_terminal_summary(terminalreporter):
    lines = []
    for rep in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", []):
        for key, value in getattr(rep, "user_properties", []):
            if key == "acceptance" and rep.when == "call":
                lines.append(value)
    if lines:
        order = lambda s: int(s.split()[0].split("-")[1])
        terminalreporter.section("acceptance criteria")
        for s in sorted(lines, key=order):
            terminalreporter.write_line(s)
