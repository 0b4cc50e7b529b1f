"""The compiled kernels and the numpy fallback must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asyncca import _pykernels as py
from asyncca.models import IsingModel, IsingParams
from asyncca.topology import Lattice

cy = pytest.importorskip("asyncca._kernels")

u64 = st.integers(0, 2 ** 64 - 1)


@given(z=u64)
def test_mix(z):
    assert py.mix64(z) == cy.mix64(z)


@given(seed=u64, kind=st.integers(0, 2), index=st.integers(0, 2 ** 40), counter=st.integers(0, 2 ** 40))
def test_streams(seed, kind, index, counter):
    k = py.stream_key(seed, kind, index)
    assert k == cy.stream_key(seed, kind, index)
    assert py.raw_word(k, counter) == cy.raw_word(k, counter)
    assert py.uniform(k, counter) == cy.uniform(k, counter)


def test_vectorised_streams():
    idx = np.arange(1000)
    kp, kc = py.stream_keys(3, 0, idx), cy.stream_keys(3, 0, idx)
    assert np.array_equal(kp, kc)
    ctr = np.arange(1000, dtype=np.uint64) * 7
    assert np.array_equal(py.uniforms(kp, ctr), cy.uniforms(kc, ctr))


@settings(max_examples=25, deadline=None)
@given(data=st.lists(st.tuples(st.floats(0, 100), st.integers(0, 10 ** 6), st.integers(-1, 1)),
                     max_size=50))
def test_hash(data):
    t = np.array([d[0] for d in data], dtype=float)
    c = np.array([d[1] for d in data], dtype=np.int64)
    s = np.array([d[2] for d in data], dtype=np.int64)
    assert py.hash_events(t, c, s) == cy.hash_events(t, c, s)


@pytest.mark.parametrize("T,H", [(2.0, 0.0), (1.0, 0.3)])
def test_glauber(T, H):
    lat = Lattice(2, 6)   # state codes are bitmasks, so at most 62 cells
    prob = IsingModel(IsingParams(1, H, T)).table.prob
    key = py.stream_key(5, 2, 1)
    spins = np.where(np.arange(36) % 3 == 0, 1, -1).astype(np.int8)
    a, b = spins.copy(), spins.copy()
    sa, sb = np.zeros(64, np.int64), np.zeros(64, np.int64)  # sample buffers
    ra = py.glauber_standard(a, lat.stencil_table(), prob, 1.0, key, 0, 0.0, 30.0, -1, 100, sa)
    rb = cy.glauber_standard(b, lat.stencil_table(), prob, 1.0, key, 0, 0.0, 30.0, -1, 100, sb)
    assert ra == rb
    assert np.array_equal(a, b) and np.array_equal(sa, sb)


@pytest.mark.parametrize("law,param", [(py.LAW_POISSON, 1.0), (py.LAW_UNIFORM, 0.0),
                                       (py.LAW_POWER, 8.0), (py.LAW_FIXED, 0.0)])
def test_one_cell_rounds(law, param):
    lat = Lattice(2, 16)
    keys = py.stream_keys(2, 0, np.arange(lat.size))
    a = py.one_cell_rounds(lat.stencil_table(), keys, law, param, 200)
    b = cy.one_cell_rounds(lat.stencil_table(), keys, law, param, 200)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("lag", [-1.0, 1.0, 0.3])
def test_aggregated_rounds(lag):
    keys = py.stream_keys(4, 1, np.arange(36))
    assert np.array_equal(py.aggregated_rounds(6, 8, keys, 400, lag),
                          cy.aggregated_rounds(6, 8, keys, 400, lag))


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, ASYNCCA_PURE_PYTHON="1")
    code = "from asyncca import kernels; print(kernels.BACKEND, kernels.uniform(7, 3))"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == cy.uniform(7, 3)
