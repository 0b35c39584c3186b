import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion test."""
    lines = []

    def report(number: int, text: str) -> None:
        lines.append((number, text))

    yield report
    failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
    if not lines:
        number = int(request.node.name.split("_")[1][1:])
        lines.append((number, f"{request.node.name} stopped before reporting"))
    for number, text in lines:
        line = f"{'FAIL' if failed else 'PASS'}  criterion {number:>2}: {text}"
        ACCEPTANCE.append(line)
        print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
