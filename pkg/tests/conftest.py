import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: dict = {}


class _Recorder:
    def __init__(self):
        self.keys = []

    def __call__(self, key, ok, detail):
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[str(key)] = line
        self.keys.append(key)
        print(line)
        return ok


@pytest.fixture
def report(request):
    rec = _Recorder()
    yield rec
    if not rec.keys:
        key = request.node.name.removeprefix("test_criterion_")
        ACCEPTANCE_LINES[key] = f"criterion {key}: FAIL  raised before a verdict was reached"


def _order(key):
    head = key.split("_")[0]
    return (int(head) if head.isdigit() else 99, key)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=_order):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
