import os

import numpy as np
import pytest

from coevolab.neuroctl import ControllerTopology, Genotype, random_genotype


def pytest_collection_modifyitems(config, items):
    if os.environ.get("COEVOLAB_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="slow experiment; set COEVOLAB_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def topology():
    return ControllerTopology()


@pytest.fixture
def zero_genotype(topology):
    return Genotype(np.zeros(topology.gene_count), 0)


@pytest.fixture
def make_genotypes(topology):
    def make(count, seed=0, start_id=0):
        rng = np.random.default_rng(seed)
        return [random_genotype(topology, rng, start_id + i) for i in range(count)]
    return make


_criteria: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary prints them all at the end."""
    def record(number: int, title: str, ok: bool, detail: str = ""):
        _criteria.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else ""))
        print(_criteria[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criteria, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
