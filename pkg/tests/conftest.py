import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def brute_h(k, nodes):
    """h_k by enumerating every degree-k monomial (multisets of indices)."""
    if k < 0:
        return 0.0
    total = 0.0
    for combo in itertools.combinations_with_replacement(range(len(nodes)), k):
        total += math.prod(nodes[i] for i in combo)
    return total


def mp_exp_divdiff(nodes, s, dps=60):
    """Divided difference of exp(t s) in high precision, distinct nodes."""
    with mpmath.workdps(dps):
        z = [mpmath.mpf(x) for x in nodes]
        s = mpmath.mpf(s)
        total = mpmath.mpf(0)
        for r, zr in enumerate(z):
            denom = mpmath.fprod([zr - zj for j, zj in enumerate(z) if j != r])
            total += mpmath.exp(zr * s) / denom
        return float(total)


def spaced_nodes(rng, n, lo, hi, gap):
    """n reals in [lo, hi] with pairwise gap >= gap (rejection sampling)."""
    while True:
        x = rng.uniform(lo, hi, n)
        if n == 1 or np.min(np.diff(np.sort(x))) >= gap:
            return x


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
