import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from strikespan.errors import QuadratureNoConvergence
from strikespan.quadrature import QuadConfig, stieltjes


def test_lebesgue_polynomial():
    r = stieltjes(lambda x: x * x, None, np.linspace(0, 3, 5), 1e-10)
    assert r.value == pytest.approx(9.0, abs=1e-9)
    assert r.error <= 1e-10


def test_stieltjes_against_smooth_integrator():
    r = stieltjes(np.cos, lambda x: x**3, np.linspace(0, 2, 9), 1e-10)
    oracle, _ = integrate.quad(lambda x: math.cos(x) * 3 * x * x, 0, 2, epsabs=1e-13)
    assert r.value == pytest.approx(oracle, abs=1e-9)


def test_discontinuous_integrand_on_node_is_exact():
    # g jumps at 1; as a node it never straddles a cell, and g is piecewise constant
    g = lambda x: np.where(x > 1.0, 2.0, 0.5)  # noqa: E731
    r = stieltjes(g, lambda x: np.exp(x), [0.0, 1.0, 2.0], 1e-12)
    expected = 0.5 * (math.e - 1) + 2.0 * (math.e**2 - math.e)
    assert r.value == pytest.approx(expected, rel=1e-15)


def test_budget_exhaustion():
    with pytest.raises(QuadratureNoConvergence, match="budget"):
        stieltjes(lambda x: np.sin(1 / np.maximum(x, 1e-12)), None, [1e-6, 1.0], 1e-14, max_nodes=500)


def test_non_finite_integrand():
    with pytest.raises(QuadratureNoConvergence):
        stieltjes(lambda x: np.where(x > 0.5, np.inf, 1.0), None, [0.0, 1.0], 1e-6)


def test_degenerate_partition():
    assert stieltjes(np.sin, None, [1.0], 1e-6).value == 0.0


def test_deterministic():
    f = lambda x: np.exp(-x) * x  # noqa: E731
    a = stieltjes(f, np.sqrt, np.linspace(0.01, 10, 7), 1e-9)
    b = stieltjes(f, np.sqrt, np.linspace(0.01, 10, 7), 1e-9)
    assert a == b


def test_config_resolution():
    c = QuadConfig().resolve(250.0)
    assert c.tol == pytest.approx(2.5e-4) and c.tail_tol == pytest.approx(2.5e-7)
    assert QuadConfig().resolve(0.1).tol == 1e-6
    assert QuadConfig(tol=1e-3).resolve(1e6).tol == 1e-3


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, 5), hi=st.floats(0.5, 5.0))
def test_monomials_converge(k, hi):
    scale = max(1.0, hi ** (k + 1))
    r = stieltjes(lambda x: x**k, None, np.linspace(0, hi, 3), 1e-9 * scale)
    assert r.value == pytest.approx(hi ** (k + 1) / (k + 1), abs=2e-9 * scale)
