import random

import pytest

from kmboundary import exact
from kmboundary.degeneration import degenerate
from kmboundary.quadlattice import make_lattice
from kmboundary.seeds import type_ii_seed, type_iii_seed


def random_unimodular(n: int, seed: int, steps: int = 8):
    rnd = random.Random(seed)
    M = [list(r) for r in exact.identity(n)]
    for _ in range(steps):
        i, j = rnd.sample(range(n), 2)
        c = rnd.choice([-2, -1, 1, 2])
        for k in range(n):
            M[k][i] += c * M[k][j]  # column operation
        if rnd.random() < 0.3:
            for k in range(n):
                M[k][i], M[k][j] = M[k][j], M[k][i]
    return M


def conjugate(L, T, P):
    """Same degeneration written in the basis given by the columns of P."""
    gram = exact.matmul(exact.matmul(exact.transpose(P), L.gram), P)
    Pinv = exact.inverse(P)
    T2 = exact.matmul(exact.matmul(Pinv, T), P)
    return make_lattice(gram), [[int(x) for x in row] for row in T2]


@pytest.fixture(scope="session")
def seed_ii():
    L, T = type_ii_seed()
    return degenerate(L, T)


@pytest.fixture(scope="session")
def seed_ii_u():
    L, T = type_ii_seed(2)
    return degenerate(L, T)


@pytest.fixture(scope="session")
def seed_iii():
    L, T = type_iii_seed()
    return degenerate(L, T)


ACCEPTANCE = {
    "a1": "A1 exact invariant identities",
    "a2": "A2 Weil representation relations and intertwiners",
    "a3": "A3 theta series modularity",
    "a4": "A4 beta closed form vs quadrature",
    "a5": "A5 type III coefficient form vs integral form",
    "a6": "A6 residue asymptotics",
    "a7": "A7 holomorphic replacements and G2*",
    "a8": "A8 profile Fourier vanishing",
}
_outcomes: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_a" not in report.nodeid:
        return
    key = report.nodeid.split("::test_")[1][:2]
    if report.when == "call" or report.outcome != "passed":
        _outcomes[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key, name in ACCEPTANCE.items():
        status = {"passed": "PASS", "skipped": "SKIP", None: "NOT RUN"}.get(_outcomes.get(key), "FAIL")
        terminalreporter.write_line(f"{status:7s} {name}")
