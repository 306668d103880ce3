import numpy as np
import pytest

from bethebox.model import make_mrf, random_model

ACCEPTANCE_LINES = []


def mixed_model(rng, n, p=0.6, scale=3.0):
    """Random model with mixed-sign couplings, |W|, |theta| <= scale."""
    rng = np.random.default_rng(rng)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                w = rng.uniform(-scale, scale)
                if w != 0.0:
                    edges.append((i, j, w))
    return make_mrf(rng.uniform(-scale, scale, n), edges, allow_disconnected=True)


def assoc_model(rng, n, p=0.7, theta_range=(-1.0, 1.0), weight_range=(0.0, 2.0), unbias=True):
    return random_model(n, p, rng, theta_range=theta_range, weight_range=weight_range,
                        unbias=unbias, connected=True)


@pytest.fixture
def report():
    """Record one acceptance line; shown in the terminal summary and on stdout."""

    def _report(name, ok, detail):
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
