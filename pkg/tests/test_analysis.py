import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blochepr.analysis import (
    bell_violation,
    bunched_fraction,
    diagonal_fraction,
    find_crossing,
    interparticle_distance,
    similarity,
    turning_point,
    violation_significance,
)
from blochepr.device import Device
from blochepr.errors import DomainError
from blochepr.evolve import propagate
from blochepr.lattice import LatticeSpec, build_hamiltonian
from blochepr.twophoton import (
    TwoPhotonAmplitude,
    correlation,
    distinguishable_correlation,
    epr_state,
    evolve_state,
    separable_state,
)

from conftest import random_state, random_unitary

# Oracle-verified (Fock space, N = 16) bunched mass of the 6 cm chip,
# split between sites 7 and 8, at 0.1..0.4 of a Bloch period.
FROZEN_BUNCHED = {
    0.0: [0.32194704842255256, 0.42675218620143374, 0.580571629184353, 0.6884296915591154],
    math.pi: [0.6780795071992439, 0.5739120351102663, 0.4262061273299529, 0.3347034893141883],
}
FROZEN_TURNING = {0.0: 0.24927236519607843, math.pi: 0.25080422794117646}

positive_matrices = st.integers(0, 2**32 - 1).map(
    lambda s: np.random.default_rng(s).uniform(0, 1, size=(6, 6)) ** 3
)


def test_distance_profile_epr_input():
    prof = interparticle_distance(correlation(epr_state(0, 1, 0.0, 16)))
    assert prof.values[0] == pytest.approx(2 / 16)
    assert np.all(prof.values[1:] == 0)
    np.testing.assert_array_equal(prof.weights, 16 - np.arange(16))


def test_distance_profile_separable_input():
    prof = interparticle_distance(correlation(separable_state(0, 1, 16)))
    assert prof.values[0] == 0
    assert prof.values[1] == pytest.approx(1 / 15)


def test_distance_profile_uniform():
    prof = interparticle_distance(np.full((9, 9), 0.3))
    np.testing.assert_allclose(prof.values, 0.3)


def test_distance_weight_identity(rng):
    for _ in range(20):
        n = int(rng.integers(2, 20))
        g = correlation(TwoPhotonAmplitude(random_state(rng, n))).gamma
        prof = interparticle_distance(g)
        lhs = np.sum(prof.values * prof.weights)
        assert lhs == pytest.approx((g.sum() + np.trace(g)) / 2, abs=1e-10)
        assert np.all(prof.values >= 0)


def test_similarity_basic():
    g = correlation(epr_state(2, 3, 0.0, 6))
    assert similarity(g, g) == pytest.approx(1.0)
    a = np.diag([1.0, 0, 0])
    b = np.diag([0, 1.0, 0])
    assert similarity(a, b) == 0.0
    with pytest.raises(DomainError):
        similarity(np.zeros((3, 3)), a)


@settings(max_examples=50, deadline=None)
@given(a=positive_matrices, b=positive_matrices, c=st.floats(1e-3, 1e3))
def test_similarity_properties(a, b, c):
    s = similarity(a, b)
    assert s == pytest.approx(similarity(b, a), rel=1e-12)
    assert 0 <= s <= 1 + 1e-12
    assert similarity(c * a, b) == pytest.approx(s, rel=1e-10)


def test_bell_anticorrelated():
    g = np.array([[0, 1.0], [1.0, 0]])
    v = bell_violation(g)
    np.testing.assert_array_equal(v.values, -g)
    assert not v.violating.any()


def test_bell_epr_input():
    v = bell_violation(correlation(epr_state(0, 1, 0.0, 4)))
    assert v.values[0, 1] == pytest.approx(2 / 3)
    assert np.array_equal(v.values, v.values.T)
    assert np.isnan(v.blanked()[0, 0])


def test_distinguishable_never_violates(rng):
    worst = -np.inf
    for _ in range(100):
        n = int(rng.integers(2, 17))
        m, k = rng.choice(n, size=2, replace=False)
        g = distinguishable_correlation(random_unitary(rng, n), m, k)
        worst = max(worst, bell_violation(g).values.max())
    assert worst <= 1e-15


def test_distinguishable_reference_devices_never_violate():
    for phi, f in ((0.0, 0.4), (math.pi, 0.1)):
        g = Device(source="distinguishable", phase=phi).gamma(f)
        assert bell_violation(g).values.max() <= 1e-15


def _toy_counts():
    g = np.array([[0.5, 0.1], [0.1, 0.4]])
    g = 2 * g / g.sum()
    counts = np.round(g * 1000).astype(int)
    return g, counts


def test_significance_scales_with_sqrt_counts():
    g, counts = _toy_counts()
    v = bell_violation(g)
    s1 = violation_significance(v, counts, scale=g.sum() / counts.sum())
    s4 = violation_significance(v, 4 * counts, scale=g.sum() / (4 * counts.sum()))
    np.testing.assert_allclose(s4, 2 * s1, rtol=1e-12)
    # inferred scale reproduces the explicit one
    np.testing.assert_allclose(violation_significance(v, counts), s1, rtol=1e-2)


def test_significance_first_order_formula():
    g = np.array([[0.6, 0.05], [0.05, 0.4]])
    counts = np.array([[600, 50], [50, 400]])
    v = bell_violation(g)
    sig = violation_significance(v, counts, scale=1e-3)
    gkk, gll, gkl = 0.6, 0.4, 0.05
    var = (gll / gkk / 9) * gkk**2 / 600 + (gkk / gll / 9) * gll**2 / 400 + gkl**2 / 50
    assert sig[0, 1] == pytest.approx(v.values[0, 1] / math.sqrt(var), rel=1e-12)


def test_significance_zero_cell_and_undefined():
    g = np.array([[0.0, 0.5], [0.5, 1.0]])
    counts = np.array([[0, 25], [25, 50]])
    v = bell_violation(g)
    sig = violation_significance(v, counts, scale=0.02)
    assert sig[0, 0] == 0.0
    assert np.isnan(sig[0, 1])
    assert sig[1, 1] == pytest.approx((-1.0 / 3) / (0.02 * math.sqrt(50) / 3))


def test_diagonal_fraction():
    assert diagonal_fraction(correlation(epr_state(0, 1, 0.3, 5))) == pytest.approx(1.0)
    assert diagonal_fraction(correlation(separable_state(0, 1, 5))) == 0.0
    u = propagate(build_hamiltonian(LatticeSpec(2, 1.0)), math.pi / 4)
    assert diagonal_fraction(correlation(evolve_state(separable_state(0, 1, 2), u))) == pytest.approx(1.0)


def test_bunched_fraction_bounds(rng):
    g = correlation(TwoPhotonAmplitude(random_state(rng, 8))).gamma
    assert bunched_fraction(g) >= diagonal_fraction(g) - 1e-15
    assert 0 <= bunched_fraction(g, 2) <= 1
    assert bunched_fraction(correlation(separable_state(3, 4, 8)), 3) == 0.0
    assert bunched_fraction(correlation(epr_state(3, 4, 1.0, 8)), 3) == pytest.approx(1.0)


def test_find_crossing():
    x, rising = find_crossing(lambda t: t, np.linspace(0, 1, 5), level=0.3, tol=1e-9)
    assert x == pytest.approx(0.3, abs=1e-9) and rising
    assert find_crossing(lambda t: 0.1, np.linspace(0, 1, 5)) is None


@pytest.mark.parametrize("phi", [0.0, math.pi])
def test_bunched_mass_regression(phi):
    dev = Device(phase=phi)
    got = [bunched_fraction(dev.gamma(f), dev.split) for f in (0.1, 0.2, 0.3, 0.4)]
    np.testing.assert_allclose(got, FROZEN_BUNCHED[phi], atol=1e-12)


@pytest.mark.parametrize("phi, rising", [(0.0, True), (math.pi, False)])
def test_turning_point_regression(phi, rising):
    tp = turning_point(Device(phase=phi))
    assert tp is not None
    assert 0.15 < tp.fraction < 0.30
    assert tp.fraction == pytest.approx(FROZEN_TURNING[phi], abs=2e-4)
    assert tp.rising is rising
    assert tp.distance == 6.0


def test_turning_point_gauge_and_reflection_invariant():
    base = turning_point(Device(num_sites=12, feed=3, phase=math.pi))
    shifted = turning_point(Device(num_sites=12, feed=3, phase=math.pi, diag_offset=17.0))
    mirrored = turning_point(Device(num_sites=12, feed=7, phase=math.pi))
    assert base is not None
    assert shifted.fraction == pytest.approx(base.fraction, abs=1e-9)
    assert mirrored.fraction == pytest.approx(base.fraction, abs=1e-9)


def test_turning_point_absent_is_none():
    # exact same-site coincidences never reach half the mass on this chip
    assert turning_point(Device(), measure=diagonal_fraction) is None


def test_flat_lattice_diagnostic():
    """Uniform array with a separable pair: recorded, no claim made."""
    n, c = 16, 0.45
    h = build_hamiltonian(LatticeSpec(n, c))
    grid = np.linspace(0.1, 6.0, 30)
    d = [bunched_fraction(correlation(evolve_state(separable_state(7, 8, n), propagate(h, z))), 7) for z in grid]
    assert np.all(np.isfinite(d))
