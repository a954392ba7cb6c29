from __future__ import annotations

import pytest

from lecopt.domain import CommunitySpec
from lecopt.fixtures import synthetic_community, write_fixture_files
from lecopt.model import AllocationMode, Objective
from lecopt.scenario import BaselineResult, SettlementReport, compute_baseline, run_scenario

from util import with_free_allocation


@pytest.fixture(scope="session")
def community48() -> CommunitySpec:
    return synthetic_community(48)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """Directory with the bundled fixture written out as CSVs + config JSON."""
    directory = tmp_path_factory.mktemp("fixture")
    write_fixture_files(directory, hours=48)
    return directory


@pytest.fixture(scope="session")
def baseline48(community48) -> BaselineResult:
    return compute_baseline(community48)


@pytest.fixture(scope="session")
def matrix48(community48) -> dict[tuple[Objective, AllocationMode], SettlementReport]:
    """All four objective x sharing scenario runs on the 48 h fixture."""
    out = {}
    for objective in (Objective.PRICE, Objective.ENVIRONMENT):
        for allocation in (AllocationMode.FIXED, AllocationMode.OPTIMIZED):
            spec = community48 if allocation is AllocationMode.FIXED else with_free_allocation(community48)
            out[(objective, allocation)] = run_scenario(spec, objective, allocation)
    return out
