"""Exit criteria for the simulator.

Each test records a one-line verdict through the ``criterion`` fixture;
the lines are repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from blochepr import cli
from blochepr.analysis import (
    bell_violation,
    bunched_fraction,
    diagonal_fraction,
    similarity,
    turning_point,
    with_significance,
)
from blochepr.config import DEFAULT_RESAMPLES
from blochepr.coupler import detuning_for_phase, phase_of_detuning, prepare_epr
from blochepr.device import REFERENCE_DEVICE, SWEEP_FRACTIONS
from blochepr.evolve import eigensystem, propagate, propagator, revival_fidelity
from blochepr.lattice import LatticeSpec, build_hamiltonian
from blochepr.noise import DetectionConfig, bootstrap_similarity, emulate
from blochepr.twophoton import (
    correlation,
    distinguishable_correlation,
    epr_state,
    evolve_state,
    oracle_deviation,
    separable_state,
)

pytestmark = pytest.mark.acceptance

# Bunched mass (both photons on one side of the feed) for the 16-site device,
# cross-checked against brute-force Fock-space evolution to < 1e-15.
FROZEN_BUNCHED = {
    0.0: [0.32194704842255256, 0.42675218620143374, 0.580571629184353, 0.6884296915591154],
    math.pi: [0.6780795071992439, 0.5739120351102663, 0.4262061273299529, 0.3347034893141883],
}


def _random_lattice(rng, max_sites):
    n = int(rng.integers(2, max_sites + 1))
    spec = LatticeSpec(n, float(rng.uniform(0.05, 2.0)), float(rng.uniform(0.0, 2.0)), float(rng.normal()))
    return spec, float(rng.uniform(0.0, 20.0))


def _random_pair_state(rng, n):
    m = int(rng.integers(0, n - 1))
    if rng.random() < 0.5:
        return epr_state(m, m + 1, float(rng.uniform(0, np.pi)), n)
    return separable_state(m, m + 1, n)


def test_unitarity_and_gauge(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_u = worst_gauge = 0.0
    for _ in range(100):
        spec, z = _random_lattice(rng, 32)
        h = build_hamiltonian(spec)
        u = propagate(h, z)
        m = u.matrix.conj().T @ u.matrix - np.eye(spec.num_sites)
        worst_u = max(worst_u, float(np.max(np.abs(m).sum(axis=1))))
        shift = float(rng.uniform(-10, 10))
        shifted = propagate(h + shift * np.eye(spec.num_sites), z)
        state = _random_pair_state(rng, spec.num_sites)
        g0 = correlation(evolve_state(state, u)).gamma
        g1 = correlation(evolve_state(state, shifted)).gamma
        worst_gauge = max(worst_gauge, float(np.max(np.abs(g0 - g1))))
    elapsed = time.perf_counter() - start
    ok = worst_u < 1e-10 and worst_gauge < 1e-12 and elapsed < 5.0
    criterion(1, ok, f"max ||U^H U - I||_inf = {worst_u:.2e}, max gauge dGamma = {worst_gauge:.2e}, {elapsed:.2f} s")
    assert ok


def test_oracle_equivalence(criterion):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(3, 9))
        spec = LatticeSpec(n, float(rng.uniform(0.1, 1.5)), float(rng.uniform(0.0, 1.5)), float(rng.normal()))
        state = _random_pair_state(rng, n)
        worst = max(worst, oracle_deviation(state, build_hamiltonian(spec), float(rng.uniform(0, 15))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 10.0
    criterion(2, ok, f"max |dGamma| vs Fock oracle = {worst:.2e} over 20 instances, {elapsed:.2f} s")
    assert ok


def test_revival(criterion):
    n, period = 16, 12.0
    h = build_hamiltonian(LatticeSpec(n, 0.45, 2 * math.pi / period))
    u = propagator(eigensystem(h), period)
    fidelity = revival_fidelity(u, n // 2)
    state = epr_state(n // 2 - 1, n // 2, 0.0, n)
    s = similarity(correlation(evolve_state(state, u)), correlation(state))
    ok = fidelity >= 0.99 and s >= 0.99
    criterion(3, ok, f"single-photon revival fidelity {fidelity:.7f}, S(Gamma(lambda_B), Gamma(0)) = {s:.7f}")
    assert ok


def _phase_closed_form(detuning, coupling):
    # pi - 2 arctan(sqrt(4 - x^2) / x), x = detuning / coupling
    x = detuning / coupling
    return math.pi - 2.0 * (math.atan(math.sqrt(4.0 - x * x) / x) if x > 0 else math.pi / 2)


def test_coupler_endpoints(criterion):
    ends = []
    worst_phase = worst_trip = 0.0
    for c in (0.3, 0.45, 1.0, 2.7):
        ends.append(abs(phase_of_detuning(0.0, c)))
        ends.append(abs(phase_of_detuning(2 * c, c) - math.pi))
    for c in (0.45, 1.3):
        for dbeta in np.linspace(0.0, 2 * c, 50):
            prepared = prepare_epr(float(dbeta), c)
            worst_phase = max(worst_phase, abs(prepared.phase - _phase_closed_form(dbeta, c)))
            phi = phase_of_detuning(float(dbeta), c)
            worst_trip = max(worst_trip, abs(detuning_for_phase(phi, c) - dbeta))
        for phi in np.linspace(0.0, math.pi, 50):
            worst_trip = max(worst_trip, abs(phase_of_detuning(detuning_for_phase(phi, c), c) - phi))
    ok = max(ends) <= 1e-12 and worst_phase < 1e-9 and worst_trip < 1e-9
    criterion(4, ok, f"endpoint error {max(ends):.1e}, prepared-phase error {worst_phase:.1e}, round trip {worst_trip:.1e}")
    assert ok


def test_hom_limit(criterion):
    c = 0.7
    u = propagate(build_hamiltonian(LatticeSpec(2, c, 0.0)), math.pi / (4 * c))
    quantum = correlation(evolve_state(separable_state(0, 1, 2), u)).gamma[0, 1]
    classical = distinguishable_correlation(u, 0, 1).gamma[0, 1]
    ok = quantum < 1e-10 and abs(classical - 0.5) <= 1e-10
    criterion(5, ok, f"indistinguishable Gamma01 = {quantum:.1e}, distinguishable Gamma01 = {classical:.12f}")
    assert ok


def test_bunching_cycle(criterion):
    details = []
    ok = True
    for phase, rising in ((0.0, True), (math.pi, False)):
        device = REFERENCE_DEVICE.with_(phase=phase)
        bunched = [bunched_fraction(device.gamma(f), device.split) for f in SWEEP_FRACTIONS]
        literal = [diagonal_fraction(device.gamma(f)) for f in SWEEP_FRACTIONS]
        if rising:
            ordered = bunched[0] < 0.5 < bunched[-1]
        else:
            ordered = bunched[0] > 0.5 > bunched[-1]
        tp = turning_point(device)
        frozen = np.allclose(bunched, FROZEN_BUNCHED[phase], rtol=0, atol=1e-12)
        in_window = tp is not None and 0.15 < tp.fraction < 0.30 and tp.rising == rising
        ok &= ordered and frozen and in_window
        details.append(
            f"phi={phase:.3f}: bunched {np.round(bunched, 3).tolist()}, "
            f"turning point {tp.fraction if tp else float('nan'):.4f} lambda_B, "
            f"single-guide d {np.round(literal, 3).tolist()}"
        )
    criterion(6, ok, "; ".join(details))
    assert ok


def _max_significance(gamma, cfg):
    run = emulate(gamma, cfg)
    v = with_significance(bell_violation(run.gamma), run.counts, run.scale)
    return float(np.nanmax(v.significance)), int(np.triu(run.counts).sum())


def test_nonclassicality(criterion):
    device = REFERENCE_DEVICE.with_(phase=0.0)
    ideal = device.gamma(0.4)
    noiseless = bool(np.any(bell_violation(ideal).violating))
    sym = [_max_significance(ideal, DetectionConfig(seed=s)) for s in range(10)]
    dist_gamma = REFERENCE_DEVICE.with_(source="distinguishable").gamma(0.4)
    dist = [_max_significance(dist_gamma, DetectionConfig(seed=s))[0] for s in range(50)]
    sym_sig = [s for s, _ in sym]
    counts = [c for _, c in sym]
    ok = noiseless and min(sym_sig) >= 10.0 and max(dist) <= 3.0
    criterion(
        7, ok,
        f"noiseless V>0: {noiseless}; symmetric max significance {min(sym_sig):.1f}-{max(sym_sig):.1f} sigma "
        f"(~{int(np.mean(counts))} coincidences, 10 seeds); distinguishable max {max(dist):.2f} sigma (50 seeds)",
    )
    assert ok


def test_similarity_band(criterion):
    cfg = DetectionConfig()
    results = []
    for phase in (0.0, math.pi):
        device = REFERENCE_DEVICE.with_(phase=phase)
        for f in SWEEP_FRACTIONS:
            ideal = device.gamma(f)
            run = emulate(ideal, cfg.derive(cli.fraction_word(f)))
            mean, std = bootstrap_similarity(run.counts, ideal, DEFAULT_RESAMPLES, cfg)
            results.append((phase, f, mean, std))
    ok = all(0.90 <= m < 1.0 and s < 1e-2 for _, _, m, s in results)
    means = [m for *_, m, _ in results]
    stds = [s for *_, s in results]
    criterion(8, ok, f"bootstrap S in [{min(means):.4f}, {max(means):.4f}], std <= {max(stds):.1e} over 8 devices")
    assert ok


def test_cli_determinism(criterion, tmp_path):
    config = tmp_path / "dev.json"
    config.write_text('{"lattice": {"num_sites": 16, "coupling": 0.45}, "run": {"fractions": [0.1, 0.2, 0.3, 0.4]}}')
    outputs = []
    for i, workers in enumerate((1, 1, 4)):
        out = tmp_path / f"run{i}"
        assert cli.main(["noisy", "--config", str(config), "--seed", "2015", "--out", str(out), "--workers", str(workers)]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = outputs[0] == outputs[1] == outputs[2] and len(outputs[0]) == 18
    criterion(9, ok, f"{len(outputs[0])} files byte-identical across 2 repeat runs and 1 vs 4 workers")
    assert ok
