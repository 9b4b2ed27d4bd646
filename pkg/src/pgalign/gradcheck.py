"""Small instances of every shipped objective family, for finite-difference checks."""

from __future__ import annotations

import numpy as np

from pgalign.objective import QuadraticObjective
from pgalign.params import ParamLayout
from pgalign.testbeds.spurious import CEObjective, SharedSpecificClassifier
from pgalign.testbeds.zdt import zdt1_objectives


def shipped_objectives(rng: np.random.Generator):
    """Yield ``(name, objective, point_sampler)`` triples.

    CE instances are kept small (3 classes, 6 features) so a full central
    difference sweep stays cheap; the code path is the same at any size.
    """
    layout = ParamLayout(3, (2, 4), 2)
    a = rng.standard_normal((5, 5))
    yield (
        "quadratic",
        QuadraticObjective(layout, 0, rng.standard_normal(5), a @ a.T + np.eye(5)),
        lambda: rng.standard_normal(layout.total_dim),
    )

    model = SharedSpecificClassifier(n_features=6, n_classes=3, n_sources=2)
    x = rng.standard_normal((40, 6))
    y = rng.integers(0, 3, 40)
    include = rng.random(40) < 0.6
    sample_ce = lambda: rng.standard_normal(model.layout.total_dim)  # noqa: E731
    yield "ce_source", CEObjective(model, x, y, 1), sample_ce
    yield "ce_target_thresholded", CEObjective(model, x, y, "target", include=include), sample_ce

    f1, f2 = zdt1_objectives()
    sample_box = lambda: rng.uniform(0.01, 0.99, 30)  # noqa: E731
    yield "zdt1_f1", f1, sample_box
    yield "zdt1_f2", f2, sample_box
