import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticetherm import _kernels
from latticetherm._kernels import numba_impl, numpy_impl

pytestmark = pytest.mark.skipif(numba_impl is None, reason="numba not installed")


def _term(rng, k, dim):
    D = dim**k
    return rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))


@given(
    seed=st.integers(0, 2**31),
    dim=st.sampled_from([2, 3]),
    data=st.data(),
)
def test_accumulate_local_backends_agree(seed, dim, data):
    rng = np.random.default_rng(seed)
    nsites = data.draw(st.integers(1, 5 if dim == 2 else 3))
    k = data.draw(st.integers(1, min(3, nsites)))
    positions = np.array(sorted(rng.choice(nsites, size=k, replace=False)), dtype=np.int64)
    term = _term(rng, k, dim)
    a = np.zeros((dim**nsites,) * 2, dtype=np.complex128)
    b = a.copy()
    numpy_impl.accumulate_local(a, term, positions, dim, nsites, 0.7)
    numba_impl.accumulate_local(b, term, positions, dim, nsites, 0.7)
    assert np.allclose(a, b, atol=1e-13)


@given(seed=st.integers(0, 2**31), data=st.data())
def test_partial_trace_backends_agree(seed, data):
    rng = np.random.default_rng(seed)
    nsites = data.draw(st.integers(1, 5))
    k = data.draw(st.integers(0, nsites))
    keep = np.array(sorted(rng.choice(nsites, size=k, replace=False)), dtype=np.int64)
    m = _term(rng, nsites, 2)
    a = numpy_impl.partial_trace_matrix(m, keep, 2, nsites)
    b = numba_impl.partial_trace_matrix(m, keep, 2, nsites)
    assert np.allclose(a, b, atol=1e-12)


@given(seed=st.integers(0, 2**31), T=st.floats(0.01, 100))
def test_dephasing_backends_agree(seed, T):
    rng = np.random.default_rng(seed)
    w = np.sort(np.concatenate([rng.standard_normal(6), [0.5, 0.5]]))
    for horizon in (T, np.inf):
        a = numpy_impl.dephasing_factors(w, horizon, 1e-10)
        b = numba_impl.dephasing_factors(w, horizon, 1e-10)
        assert np.allclose(a, b, atol=1e-14)


@given(seed=st.integers(0, 2**31), n=st.integers(2, 200))
def test_trapezoid_backends_agree(seed, n):
    w = np.random.default_rng(seed).standard_normal(5)
    assert np.allclose(numpy_impl.trapezoid_phase_average(w, 3.0, n), numba_impl.trapezoid_phase_average(w, 3.0, n))


def test_dephasing_closed_form():
    w = np.array([0.0, 2.0])
    T = 1.3
    f = numpy_impl.dephasing_factors(w, T, 1e-12)
    delta = -2.0
    assert f[0, 1] == pytest.approx((1 - np.exp(-1j * delta * T)) / (1j * delta * T))
    assert f[0, 0] == 1 and f[1, 1] == 1


def test_trapezoid_converges_to_exact():
    w = np.array([-1.0, 0.3, 2.0])
    exact = numpy_impl.dephasing_factors(w, 4.0, 1e-12)
    approx = numpy_impl.trapezoid_phase_average(w, 4.0, 4000)
    # trapezoid error ~ (delta h)^2 / 12
    assert np.abs(exact - approx).max() < 1e-5


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, LATTICETHERM_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from latticetherm import _kernels; print(_kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == expected


def test_default_backend_is_numba():
    if os.environ.get("LATTICETHERM_DISABLE_NUMBA"):
        pytest.skip("numpy backend forced by environment")
    assert _kernels.BACKEND == "numba"
