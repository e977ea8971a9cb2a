import time

import pytest

from rangeguard.harness import load_config, run_batch

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def sec4():
    return load_config("paper_sec4")


@pytest.fixture(scope="session")
def sec4_batch(sec4):
    t0 = time.perf_counter()
    res = run_batch(sec4)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def noise_free(sec4):
    """Reference geometry with every noise source and target motion removed."""
    still = {"gamma": 1.0, "w1": [0, 0, 0], "w2": [0, 0, 0]}
    return sec4.replace(
        horizon=500,
        ranging={"sigma1": 0, "sigma2": 0},
        targets={"protected": still, "hostile": still},
        **{"filter.perfect_estimate": True, "agents.hostile.velocity": [0, 0, 0]},
    )
