import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selmer_ratios import families as fm, kernels
from selmer_ratios._kernels_py import weighted_reduced
from selmer_ratios.densities import _term_arrays
from selmer_ratios.stats import box_bounds

compiled = pytest.importorskip("selmer_ratios._kernels")
FAMILIES = [G.id for G in fm.registry()]


def test_default_backend_is_compiled():
    assert kernels.BACKEND == compiled.BACKEND != "python"


terms = st.lists(
    st.tuples(st.integers(0, 12), st.integers(0, 12), st.integers(-(10**12), 10**12)), min_size=1, max_size=8
)


@settings(max_examples=60)
@given(st.lists(terms, min_size=1, max_size=3), st.sampled_from([5, 7, 11, 13, 31]))
def test_grid_eval_backends_agree(polys, q):
    arrs = [
        (np.array([i for i, _, _ in p], dtype=np.int64), np.array([j for _, j, _ in p], dtype=np.int64), [c for _, _, c in p])
        for p in polys
    ]
    assert np.array_equal(compiled.grid_eval(arrs, q), kernels.python.grid_eval(arrs, q))


@settings(max_examples=25)
@given(st.sampled_from(FAMILIES), st.integers(10**3, 10**14), st.integers(1, 3))
def test_enumerate_box_backends_agree(fid, X, margin):
    G = fm.get(fid)
    Amax, Bmax = box_bounds(G, X, margin)
    Amax, Bmax = min(Amax, 60), min(Bmax, 400)
    amax, bmax = round(X ** (1 / 3)), round(X**0.5)
    args = (_term_arrays(G.f4), _term_arrays(G.f6), *G.weights, Amax, Bmax, amax, bmax, -Amax, Amax)
    fast = kernels.enumerate_box(*args)
    slow = kernels.enumerate_box(*args, backend=kernels.python)
    for x, y in zip(fast, slow):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("fid,X", [("G(1,7)", 10**40), ("G(2,8)", 10**60), ("G(1,10)", 10**50)])
def test_overflow_paths_agree(fid, X):
    G = fm.get(fid)
    Amax, Bmax = box_bounds(G, X, 2)
    Amax = min(Amax, 12)
    args = (_term_arrays(G.f4), _term_arrays(G.f6), *G.weights, Amax, Bmax, int(X ** (1 / 3)) + 1, int(X**0.5) + 1, -Amax, Amax)
    fast = kernels.enumerate_box(*args)
    slow = kernels.enumerate_box(*args, backend=kernels.python)
    assert len(fast[0]) > 0
    for x, y in zip(fast, slow):
        assert [int(v) for v in x] == [int(v) for v in y]


@given(st.integers(-500, 500), st.integers(-500, 500), st.integers(1, 4), st.integers(1, 6))
def test_weighted_reduced(A, B, w0, w1):
    if (A, B) == (0, 0):
        return
    expected = not any(A % p**w0 == 0 and B % p**w1 == 0 for p in range(2, 600) if all(p % r for r in range(2, p)))
    assert weighted_reduced(A, B, w0, w1) == expected
