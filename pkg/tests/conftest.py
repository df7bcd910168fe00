import pytest

from rnft.chain import ChainState, GenesisConfig, Mint, key_gen, tran_gen


@pytest.fixture
def users():
    return {name: key_gen(name) for name in ("alice", "bob", "carol", "dave", "erin")}


def build_intro_chain(users):
    """A, B, C are originals in block 1; D cites A in block 2; E cites A, B, C in block 3."""
    chain = ChainState(GenesisConfig(genesis_time=1_000, block_interval=12))
    for name in ("alice", "bob", "carol"):
        chain.submit_tx(tran_gen(users[name], Mint(), 0))
    chain.seal_block()
    chain.submit_tx(tran_gen(users["dave"], Mint((0,), (0.5,), ("remix",)), 0))
    chain.seal_block()
    chain.submit_tx(tran_gen(users["erin"], Mint((0, 1, 2), (0.2, 0.2, 0.2), ()), 0))
    chain.seal_block()
    return chain, dict(A=0, B=1, C=2, D=3, E=4)


@pytest.fixture
def intro(users):
    return build_intro_chain(users)


_ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = getattr(item, "acceptance_detail", "")
        _ACCEPTANCE[number] = (title, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome, detail = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {number}. {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
