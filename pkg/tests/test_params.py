import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pgalign.params import (
    GradSlices,
    ParamLayout,
    ParamVector,
    block_perturb,
    dump_params,
    embed_full,
    load_params,
    slice,
)

SMALL = ParamLayout(2, (1,), 1)


def test_total_dim():
    assert ParamLayout(3, (2, 0, 4), 1).total_dim == 10
    assert ParamLayout(30).total_dim == 30


def test_negative_dim_rejected():
    with pytest.raises(ValueError):
        ParamLayout(-1, (), 0)


def test_slice_blocks():
    p = ParamVector(SMALL, [1.0, 2.0, 3.0, 4.0])
    assert slice(p, "shared").tolist() == [1.0, 2.0]
    assert slice(p, 0).tolist() == [3.0]
    assert slice(p, "target").tolist() == [4.0]


def test_slice_zdt_layout():
    layout = ParamLayout(30, (), 0)
    values = np.arange(30.0)
    p = ParamVector(layout, values)
    np.testing.assert_array_equal(slice(p, "shared"), values)
    assert slice(p, "target").size == 0
    # the empty placeholder source block of an N=0 layout
    assert slice(p, 0).size == 0


@pytest.mark.parametrize("block", ["bogus", 1, -1, True])
def test_slice_unknown_block(block):
    with pytest.raises(KeyError):
        slice(ParamVector.zeros(SMALL), block)


def test_embed_full_examples():
    g = GradSlices(SMALL, [1.0, 0.0], [2.0], 0)
    assert embed_full(g).tolist() == [1.0, 0.0, 2.0, 0.0]
    g = GradSlices(SMALL, [0.0, 1.0], [3.0], "target")
    assert embed_full(g).tolist() == [0.0, 1.0, 0.0, 3.0]
    layout = ParamLayout(2, (1,), 0)
    g = GradSlices(layout, [5.0, 6.0], [], "target")
    assert embed_full(g).tolist() == [5.0, 6.0, 0.0]


def test_grad_slices_length_mismatch():
    with pytest.raises(ValueError):
        GradSlices(SMALL, [1.0], [2.0], 0)
    with pytest.raises(ValueError):
        GradSlices(SMALL, [1.0, 2.0], [2.0, 3.0], "target")


def test_block_perturb_examples():
    p = ParamVector.zeros(SMALL)
    q = block_perturb(p, "shared", [1.0, -1.0])
    assert q.values.tolist() == [1.0, -1.0, 0.0, 0.0]
    assert p.values.tolist() == [0.0] * 4
    assert block_perturb(q, "target", [0.0]) == q
    a = block_perturb(block_perturb(p, "shared", [1.0, 2.0]), "target", [3.0])
    b = block_perturb(block_perturb(p, "target", [3.0]), "shared", [1.0, 2.0])
    assert a == b


def test_block_perturb_length_mismatch():
    with pytest.raises(ValueError):
        block_perturb(ParamVector.zeros(SMALL), "shared", [1.0])


def test_param_vector_is_immutable():
    p = ParamVector(SMALL, [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        p.values[0] = 9.0


def test_param_vector_rejects_nonfinite():
    with pytest.raises(ValueError):
        ParamVector(SMALL, [1.0, np.nan, 0.0, 0.0])


def test_disjointness_hand_example():
    u = embed_full(GradSlices(SMALL, [1.0, 0.0], [2.0], 0))
    v = embed_full(GradSlices(SMALL, [0.0, 1.0], [3.0], "target"))
    assert (u - v) @ (u - v) == 15.0
    assert u @ u + v @ v - 2 * 0.0 == 15.0


layouts = st.builds(
    ParamLayout,
    st.integers(0, 6),
    st.lists(st.integers(0, 5), min_size=1, max_size=3).map(tuple),
    st.integers(0, 5),
)


@st.composite
def layout_and_slices(draw):
    layout = draw(layouts)
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    src = draw(st.integers(0, layout.n_sources - 1))
    u = GradSlices(layout, rng.standard_normal(layout.shared_dim), rng.standard_normal(layout.source_dims[src]), src)
    v = GradSlices(layout, rng.standard_normal(layout.shared_dim), rng.standard_normal(layout.target_dim), "target")
    return layout, u, v


@given(layout_and_slices())
def test_disjointness_identity(case):
    _, u, v = case
    fu, fv = embed_full(u), embed_full(v)
    lhs = (fu - fv) @ (fu - fv)
    rhs = fu @ fu + fv @ fv - 2 * (u.g_shared @ v.g_shared)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, lhs)


@given(layout_and_slices())
def test_slice_embed_round_trip(case):
    layout, u, _ = case
    p = ParamVector(layout, embed_full(u))
    np.testing.assert_array_equal(slice(p, "shared"), u.g_shared)
    np.testing.assert_array_equal(slice(p, u.owner), u.g_specific)
    for other in [*range(layout.n_sources), "target"]:
        if other != u.owner:
            assert not np.any(slice(p, other))


@given(layouts, st.integers(0, 2**32 - 1))
def test_block_perturb_never_mutates(layout, seed):
    rng = np.random.default_rng(seed)
    p = ParamVector(layout, rng.standard_normal(layout.total_dim))
    before = p.values.copy()
    block_perturb(p, "shared", rng.standard_normal(layout.shared_dim))
    np.testing.assert_array_equal(p.values, before)


def test_dump_load_round_trip(tmp_path):
    layout = ParamLayout(2, (1, 3), 2)
    p = ParamVector(layout, np.random.default_rng(0).standard_normal(layout.total_dim) * 1e-3)
    path = tmp_path / "p.txt"
    dump_params(p, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "layout sh=2 src=1,3 tgt=2"
    assert len(lines) == 1 + layout.total_dim
    assert load_params(path) == p


def test_layout_header_without_sources():
    layout = ParamLayout(30, (), 0)
    assert layout.header() == "layout sh=30 src= tgt=0"
    assert ParamLayout.from_header(layout.header()) == layout
