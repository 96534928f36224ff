import numpy as np
import pytest


def random_state(rng, d, rank=None):
    """Random density matrix from a d x rank Ginibre matrix."""
    rank = rank or d
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def random_contraction(rng, n=3, smax=0.6, fmax=0.4):
    """Affine data (D, f) that maps the unit ball into itself."""
    s = rng.uniform(0.05, smax, size=n)
    D = random_orthogonal(rng, n) @ np.diag(s) @ random_orthogonal(rng, n)
    f = rng.normal(size=n)
    f *= rng.uniform(0, fmax) / np.linalg.norm(f)
    return D, f


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_ac" in nodeid and rep.when == "call":
                lines.append((nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
