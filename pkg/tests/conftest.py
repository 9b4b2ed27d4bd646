import hypothesis
import numpy as np
import pytest

from pgalign.objective import QuadraticObjective
from pgalign.optimizer import DomainObjectives
from pgalign.params import ParamLayout
from pgalign.testbeds.spurious import CEObjective, SharedSpecificClassifier

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def quad_pair():
    """Shared-only dim-1 pair: L_S = (w-1)^2/2, L_T = (w+1)^2/2."""
    layout = ParamLayout(1, (0,), 0)
    src = QuadraticObjective(layout, 0, [1.0])
    tgt = QuadraticObjective(layout, "target", [-1.0])
    return layout, DomainObjectives([src], tgt)


def make_ce_problem(rng, n_sources=1, n=60, n_features=8, n_classes=2):
    model = SharedSpecificClassifier(n_features, n_classes, n_sources)
    sources = []
    for i in range(n_sources):
        x = rng.standard_normal((n, n_features))
        y = rng.integers(0, n_classes, n)
        sources.append(CEObjective(model, x, y, i))
    x = rng.standard_normal((n, n_features))
    y = rng.integers(0, n_classes, n)
    target = CEObjective(model, x, y, "target", include=rng.random(n) < 0.8)
    return model, DomainObjectives(sources, target)


@pytest.fixture
def ce_problem():
    return make_ce_problem(np.random.default_rng(7))
