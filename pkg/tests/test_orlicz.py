import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from wcgalab.errors import DomainError, ShapeError, UndefinedFunctionalError
from wcgalab.orlicz import (GridFunction, YoungFunction, default_c, luxemburg_norm, norming_functional,
                            orlicz_dual_norm, pairing, quadrature, young_complementary, young_eval)

SPACES = [(1.5, -1.0), (1.5, 0.0), (1.5, 1.0), (2.0, 0.0), (2.0, 1.0), (3.0, -1.0), (3.0, 2.0), (4.0, 2.0)]

p_values = st.sampled_from([1.2, 1.5, 2.0, 2.5, 3.0, 4.0])
alpha_values = st.sampled_from([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


def random_interval(rng, n=256, width=8, complex_valued=False):
    v = rng.standard_normal(n) * np.exp(rng.uniform(-3, 3))
    if complex_valued:
        v = v + 1j * rng.standard_normal(n)
    return GridFunction.interval(width, v)


# -- Young function ---------------------------------------------------------


def test_young_eval_quadratic():
    assert young_eval(YoungFunction(2, 0), 3.0) == pytest.approx(4.5, rel=1e-13)


def test_young_eval_zero():
    for p, a in SPACES:
        assert young_eval(YoungFunction(p, a), 0.0) == 0.0


def test_young_eval_matches_simpson():
    phi = YoungFunction(2, 1, math.e)
    ref = O.phi_simpson(1.0, 2, 1, math.e, nodes=1_000_000)
    assert abs(young_eval(phi, 1.0) - ref) <= 1e-9 * ref


@pytest.mark.parametrize("t", [-1.0, math.nan, math.inf])
def test_young_eval_rejects_bad_input(t):
    with pytest.raises(DomainError):
        young_eval(YoungFunction(2, 0), t)


@pytest.mark.parametrize("p,alpha", SPACES)
def test_table_matches_quadrature_oracle(p, alpha):
    phi = YoungFunction(p, alpha)
    t = np.logspace(-8, 8, 41)
    ref = O.phi_jacobi(t, p, alpha, phi.c)
    assert np.max(np.abs(phi(t) / ref - 1)) <= 1e-9
    assert np.max(np.abs(np.array([young_eval(phi, x) for x in t[::5]]) / ref[::5] - 1)) <= 1e-10


def test_default_c_keeps_integrand_monotone():
    for p, a in SPACES:
        c = default_c(p, a)
        assert c >= math.e
        t = np.logspace(-10, 10, 2001)
        assert np.all(np.diff(O.dphi(t, p, a, c)) >= 0)


def test_construction_rejects_bad_parameters():
    with pytest.raises(DomainError):
        YoungFunction(1.0, 0)
    with pytest.raises(DomainError):
        YoungFunction(2, 0, c=2.0)
    with pytest.raises(DomainError):
        YoungFunction(1.5, -3.0, c=math.e)  # not convex with this c


@given(p=p_values, alpha=alpha_values, s=st.floats(1e-6, 1e6), r=st.floats(1.001, 100.0))
def test_phi_convex_and_increasing(p, alpha, s, r):
    phi = YoungFunction(p, alpha)
    t = s * r
    vs, vt, vm = phi(np.array([s, t, 0.5 * (s + t)]))
    assert vs < vt
    assert vm <= 0.5 * (vs + vt) * (1 + 1e-12)


@pytest.mark.parametrize("p,alpha", SPACES)
def test_phi_equivalent_to_closed_form(p, alpha):
    phi = YoungFunction(p, alpha)
    t = np.logspace(-6, 6, 200)
    ratio = phi(t) / (t ** p * np.log(math.e + t) ** (alpha * p))
    assert np.all(np.isfinite(ratio)) and ratio.min() > 0
    # bounded above and below: the log of the ratio stays in a fixed window
    assert ratio.max() / ratio.min() < 1e4


def test_complementary_examples():
    assert young_complementary(YoungFunction(2, 0), 2.0) == pytest.approx(2.0, rel=1e-12)
    assert young_complementary(YoungFunction(3, 0), 4.0) == pytest.approx(16.0 / 3.0, rel=1e-9)
    assert young_complementary(YoungFunction(1.5, 1), 0.0) == 0.0
    with pytest.raises(DomainError):
        young_complementary(YoungFunction(2, 0), -1.0)


@pytest.mark.parametrize("p,alpha", SPACES)
def test_complementary_matches_legendre_oracle(p, alpha):
    phi = YoungFunction(p, alpha)
    for s in (1e-3, 0.7, 5.0, 300.0):
        ref = O.psi_legendre(s, p, alpha, phi.c)
        assert young_complementary(phi, s) == pytest.approx(ref, rel=1e-9)
        assert float(phi.conjugate(s)) == pytest.approx(ref, rel=1e-8)


@given(p=p_values, alpha=alpha_values, t=st.floats(1e-4, 1e4))
def test_young_equality(p, alpha, t):
    phi = YoungFunction(p, alpha)
    d = float(phi.derivative(t))
    lhs = float(phi.conjugate(d)) + float(phi(t))
    assert lhs == pytest.approx(t * d, rel=1e-8)


def test_inverse_roundtrip():
    phi = YoungFunction(1.5, 1)
    y = np.logspace(-10, 10, 50)
    assert np.allclose(phi(phi.inverse(y)), y, rtol=1e-11, atol=0)


# -- grid functions ---------------------------------------------------------


def test_quadrature_of_one_is_length():
    for n in (1, 8, 1024):
        assert quadrature(GridFunction.interval(8, np.ones(n))) == 8.0
        assert quadrature(GridFunction.torus(np.ones(n))) == pytest.approx(2 * math.pi, rel=1e-15)


def test_grid_function_validation():
    with pytest.raises(DomainError):
        GridFunction.interval(8, np.ones(6))
    with pytest.raises(DomainError):
        GridFunction.interval(8, np.array([1.0, np.nan]))
    with pytest.raises(DomainError):
        GridFunction.interval(2.5, np.ones(4))
    f = GridFunction.interval(8, np.ones(8))
    assert f.step == 1.0 and f.grid_size == 8
    with pytest.raises(ValueError):
        f.samples[0] = 2.0


def test_grid_mismatch():
    phi = YoungFunction(2, 0)
    f = GridFunction.interval(8, np.ones(8))
    k = norming_functional(f, phi)
    with pytest.raises(ShapeError):
        pairing(k, GridFunction.interval(8, np.ones(16)))
    with pytest.raises(ShapeError):
        pairing(k, GridFunction.interval(4, np.ones(8)))


# -- Luxemburg norm ---------------------------------------------------------


def test_luxemburg_zero():
    assert luxemburg_norm(GridFunction.interval(8, np.zeros(64)), YoungFunction(1.5, 1)) == 0.0


@pytest.mark.parametrize("p,alpha", SPACES)
def test_luxemburg_indicator(p, alpha):
    phi = YoungFunction(p, alpha)
    samples = np.zeros(256)
    samples[10:77] = 1.0
    f = GridFunction.interval(8, samples)
    m = 67 * f.step
    ref = 1.0 / O.phi_inverse(1.0 / m, p, alpha, phi.c)
    assert luxemburg_norm(f, phi) == pytest.approx(ref, rel=1e-10)


def test_luxemburg_quadratic_case():
    rng = np.random.default_rng(0)
    phi = YoungFunction(2, 0)
    for _ in range(10):
        f = random_interval(rng, complex_valued=True)
        assert luxemburg_norm(f, phi) == pytest.approx(f.l2_norm() / math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize("p,alpha", [(1.5, 1.0), (3.0, -1.0), (1.5, -1.0)])
def test_luxemburg_matches_bisection_oracle(p, alpha):
    rng = np.random.default_rng(1)
    phi = YoungFunction(p, alpha)
    for _ in range(3):
        f = random_interval(rng, n=128)
        ref = O.luxemburg(f.samples, f.step, p, alpha, phi.c)
        assert luxemburg_norm(f, phi) == pytest.approx(ref, rel=1e-10)


@given(p=p_values, alpha=alpha_values, seed=st.integers(0, 2**32 - 1),
       scale=st.floats(-1e3, 1e3).filter(lambda x: abs(x) > 1e-3))
def test_luxemburg_homogeneity(p, alpha, seed, scale):
    phi = YoungFunction(p, alpha)
    f = random_interval(np.random.default_rng(seed), n=64)
    assert luxemburg_norm(f * scale, phi) == pytest.approx(abs(scale) * luxemburg_norm(f, phi), rel=1e-10)


@pytest.mark.parametrize("p,alpha", SPACES)
def test_triangle_inequality(p, alpha):
    phi = YoungFunction(p, alpha)
    rng = np.random.default_rng(2)
    for _ in range(100):
        f, g = random_interval(rng, n=64), random_interval(rng, n=64)
        lhs = luxemburg_norm(f + g, phi)
        rhs = luxemburg_norm(f, phi) + luxemburg_norm(g, phi)
        assert lhs <= rhs * (1 + 1e-9)


# -- dual norm --------------------------------------------------------------


def test_dual_norm_zero():
    assert orlicz_dual_norm(GridFunction.interval(8, np.zeros(64)), YoungFunction(1.5, 1)) == 0.0


def test_dual_norm_quadratic_case():
    rng = np.random.default_rng(3)
    phi = YoungFunction(2, 0)
    for _ in range(10):
        g = random_interval(rng, complex_valued=True)
        assert orlicz_dual_norm(g, phi) == pytest.approx(math.sqrt(2) * g.l2_norm(), rel=1e-9)


def test_dual_norm_matches_amemiya_oracle():
    rng = np.random.default_rng(4)
    for p, alpha in [(1.5, 1.0), (3.0, -1.0)]:
        phi = YoungFunction(p, alpha)
        g = random_interval(rng, n=32)
        ref = O.amemiya(g.samples, g.step, p, alpha, phi.c)
        assert orlicz_dual_norm(g, phi) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("p,alpha", SPACES)
def test_holder_inequality(p, alpha):
    phi = YoungFunction(p, alpha)
    rng = np.random.default_rng(5)
    for _ in range(50):
        g, h = random_interval(rng, n=64), random_interval(rng, n=64)
        integral = abs(math.fsum(g.samples * h.samples) * g.step)
        assert integral <= orlicz_dual_norm(g, phi) * luxemburg_norm(h, phi) * (1 + 1e-6)


# -- norming functional -----------------------------------------------------


@pytest.mark.parametrize("p,alpha", SPACES)
def test_norming_functional_contract(p, alpha):
    phi = YoungFunction(p, alpha)
    rng = np.random.default_rng(6)
    for complex_valued in (False, True):
        f = random_interval(rng, complex_valued=complex_valued)
        k = norming_functional(f, phi)
        norm = luxemburg_norm(f, phi)
        assert k.norm_of_source == norm
        assert abs(pairing(k, f) - norm) <= 1e-8 * norm
        assert orlicz_dual_norm(k.base, phi) == pytest.approx(1.0, abs=1e-3)


def test_norming_functional_hilbert_closed_form():
    phi = YoungFunction(2, 0)
    rng = np.random.default_rng(7)
    f = random_interval(rng, complex_valued=True)
    g = random_interval(rng, complex_valued=True)
    k = norming_functional(f, phi)
    inner = sum(np.conj(f.samples) * g.samples) * f.step
    expected = inner * (f.l2_norm() / math.sqrt(2)) / f.l2_norm() ** 2
    assert abs(pairing(k, g) - expected) <= 1e-12 * abs(expected)


def test_norming_functional_zero_input():
    with pytest.raises(UndefinedFunctionalError):
        norming_functional(GridFunction.interval(8, np.zeros(16)), YoungFunction(2, 0))


def test_pairing_vanishes_off_support():
    phi = YoungFunction(1.5, 1)
    f = np.zeros(64)
    f[:20] = np.linspace(1, 2, 20)
    g = np.zeros(64)
    g[30:] = 1.0
    k = norming_functional(GridFunction.interval(8, f), phi)
    assert pairing(k, GridFunction.interval(8, g)) == 0


def test_pairing_zero_and_linearity():
    phi = YoungFunction(3, -1)
    rng = np.random.default_rng(8)
    f, g1, g2 = (random_interval(rng, complex_valued=True) for _ in range(3))
    k = norming_functional(f, phi)
    assert pairing(k, f.with_samples(np.zeros(f.grid_size))) == 0
    a, b = 1.7 - 0.3j, -0.4 + 2j
    combo = f.with_samples(a * g1.samples + b * g2.samples)
    lhs = pairing(k, combo)
    rhs = a * pairing(k, g1) + b * pairing(k, g2)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


# -- embeddings -------------------------------------------------------------


def random_trig_polynomial(rng, n=512, max_freq=100):
    k = int(rng.integers(1, 40))
    x = O.grid_points("torus", 2 * math.pi, n)
    freqs = rng.integers(-max_freq, max_freq + 1, k)
    coeffs = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * math.exp(rng.uniform(-5, 5))
    return GridFunction.torus(np.exp(1j * np.outer(x, freqs)) @ coeffs)


@pytest.mark.parametrize("p,alpha", [(2.0, 1.0), (3.0, 0.0), (3.0, -1.0), (4.0, 2.0)])
def test_l2_embedding_with_frozen_constant(p, alpha):
    phi = YoungFunction(p, alpha)
    rng = np.random.default_rng(9)
    fit = [random_trig_polynomial(rng) for _ in range(50)]
    const = max(f.l2_norm() / luxemburg_norm(f, phi) for f in fit)
    check = [random_trig_polynomial(rng) for _ in range(50)]
    assert all(f.l2_norm() <= 1.25 * const * luxemburg_norm(f, phi) for f in check)
