import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from optostdp.data import xor_dataset  # noqa: E402
from optostdp.network import NetworkConfig, Topology, build_network  # noqa: E402

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    def _report(criterion: str, ok: bool, detail: str):
        line = f"{criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


@pytest.fixture(scope="session")
def xor():
    return xor_dataset()


@pytest.fixture
def small_fast_net():
    return build_network(Topology(3, 4, 2), seed=11, config=NetworkConfig())


@pytest.fixture
def small_full_net():
    return build_network(Topology(2, 2, 1), seed=3,
                         config=NetworkConfig(backend="full", i_max=30, synaptic_scale=0.35))


@pytest.fixture(scope="session")
def xor_config():
    from optostdp.config import load_config
    return load_config(preset="xor.default")


@pytest.fixture(scope="session")
def trained_xor(xor_config):
    """The xor.default preset trained once (seed 0) and shared across tests."""
    from optostdp.experiments import run_train
    return run_train(xor_config)
