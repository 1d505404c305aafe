import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_weights(rng, n, nonneg=True, consistent=True):
    w = rng.random(n) if nonneg else rng.normal(size=n)
    # sparsify a little so jump structure varies
    w[rng.random(n) < 0.4] = 0.0
    if not w.any():
        w[rng.integers(n)] = 1.0
    if consistent:
        w = w / w.sum() if nonneg else w - (w.sum() - 1.0) / n
    return w


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line(request):
    """Record ``PASS/FAIL`` for an acceptance criterion; shown in the terminal summary."""
    def record(ok, detail, elapsed):
        line = f"[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail} ({elapsed:.2f} s)"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
