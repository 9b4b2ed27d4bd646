import numpy as np
import pytest

from pgalign.objective import check_gradient
from pgalign.testbeds.zdt import X1_FLOOR, zdt1_objectives, zdt1_values


def _point(head):
    return np.array(head + [0.0] * (30 - len(head)))


def test_pareto_endpoint():
    f1, f2 = zdt1_objectives()
    x = _point([1.0])
    assert f1.value(x) == 1.0 and f2.value(x) == 0.0


def test_origin():
    f1, f2 = zdt1_objectives(project=True)
    # x1 = 0 is lifted to the floor when projecting
    x = np.zeros(30)
    assert f1.value(x) == X1_FLOOR
    assert zdt1_values(x) == (0.0, 1.0)


def test_quarter():
    _, f2 = zdt1_objectives()
    assert f2.value(_point([0.25])) == 0.5


def test_values_helper_matches_objectives():
    f1, f2 = zdt1_objectives()
    x = np.random.default_rng(0).uniform(0.01, 1.0, 30)
    assert zdt1_values(x) == (f1.value(x), f2.value(x))


@pytest.mark.parametrize("bad", [_point([1.2]), _point([0.5, -0.01]), _point([0.0])])
def test_out_of_domain(bad):
    _, f2 = zdt1_objectives()
    with pytest.raises(ValueError):
        f2.value(bad)


def test_f1_out_of_domain():
    f1, _ = zdt1_objectives()
    with pytest.raises(ValueError):
        f1.value(_point([1.5]))


def test_projection_clips_into_box():
    f1, f2 = zdt1_objectives(project=True)
    x = _point([1.5, -2.0])
    assert f1.value(x) == 1.0
    assert f2.value(x) == 0.0


def test_gradients_match_fd_on_pareto_face():
    rng = np.random.default_rng(1)
    f1, f2 = zdt1_objectives()
    for _ in range(20):
        x = _point([float(rng.uniform(0.05, 0.95))])
        x[1:] = 0.5  # keep the fd stencil inside the box
        assert check_gradient(f1, x).ok and check_gradient(f2, x).ok


def test_needs_two_variables():
    with pytest.raises(ValueError):
        zdt1_objectives(1)
