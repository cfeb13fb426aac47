import pytest

CRITERIA = {
    1: "width-d^2 MXPJ program matches its oracle",
    2: "commutative PJ program matches its oracle and reorders freely",
    3: "xor-reordered PJ program matches the XRPJ oracle",
    4: "product-form probability equals direct simulation",
    5: "closeness properties 1-6",
    6: "same-bucket pairs respect the gap bound and decisions",
    7: "Sigma set size and distinguishing inputs",
    8: "bound formula values",
    9: "subfunction counts",
    10: "normalization audit",
}

_LOG = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_LOG] = {}


@pytest.fixture
def acceptance(request):
    log = request.config.stash[_LOG]

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {CRITERIA[number]}: {detail}"
        log[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_LOG, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        line = log.get(number, f"criterion {number:2d} [FAIL] {CRITERIA[number]}: not run")
        terminalreporter.write_line(line)
