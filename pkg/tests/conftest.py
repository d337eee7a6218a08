"""Shared fixtures: a fully built gold-event model and common paths.

The gold model is assembled once per session from the bundled fixtures
(structural triples, external registry, synthetic corpus) with gold
annotations standing in for a trained extractor, so graph-side tests never
pay for training.
"""

from __future__ import annotations

import pytest

from helpers import build_gold_model
from msem.datafiles import bundled_path


@pytest.fixture(scope="session")
def gold_built():
    return build_gold_model()


@pytest.fixture()
def gold_model(gold_built):
    # round-trip clone so tests can mutate freely
    from msem.model import EcosystemModel

    model, _ = gold_built
    return EcosystemModel.from_dict(model.to_dict())


@pytest.fixture()
def gold_events_list(gold_built):
    _, events = gold_built
    return events


@pytest.fixture(scope="session")
def rules_path() -> str:
    return bundled_path("evo_rules.json")
