"""Two-photon states, their evolution, and coincidence correlations.

A pure two-photon state is stored as a complex symmetric matrix ``A``
with |psi> = sum_{m,n} A[m, n] a_m^+ a_n^+ |0>. Its norm is
2 * sum |A|^2 and one photon-pair transfer is A -> U A U^T.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import ValidationError
from .evolve import Propagator, eigensystem, propagator

NORM_TOL = 1e-10
MAX_ORACLE_SITES = 12


@dataclass(frozen=True, eq=False)
class TwoPhotonAmplitude:
    amplitude: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitude, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"amplitude must be square, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        norm = 2.0 * np.sum(np.abs(a) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"two-photon norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitude", a)

    @property
    def size(self) -> int:
        return self.amplitude.shape[0]

    @property
    def norm(self) -> float:
        return float(2.0 * np.sum(np.abs(self.amplitude) ** 2))


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Coincidence matrix Gamma[q, r] = <a_q^+ a_r^+ a_r a_q>, summing to 2."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValidationError(f"gamma must be square, got shape {g.shape}")
        if np.any(g < 0):
            raise ValidationError("gamma must be nonnegative")
        object.__setattr__(self, "gamma", g)

    @property
    def size(self) -> int:
        return self.gamma.shape[0]


def _check_pair(m, n, num_sites):
    if m == n:
        raise ValidationError(f"sites must differ, got {m} and {n}")
    for s in (m, n):
        if not 0 <= s < num_sites:
            raise ValidationError(f"site {s} outside 0..{num_sites - 1}")


def epr_state(m: int, n: int, phase: float, num_sites: int) -> TwoPhotonAmplitude:
    """(|2_m, 0_n> + e^{i phase} |0_m, 2_n>) / sqrt(2)."""
    _check_pair(m, n, num_sites)
    a = np.zeros((num_sites, num_sites), dtype=complex)
    a[m, m] = 0.5
    a[n, n] = 0.5 * np.exp(1j * phase)
    return TwoPhotonAmplitude(a)


def separable_state(m: int, n: int, num_sites: int) -> TwoPhotonAmplitude:
    """a_m^+ a_n^+ |0>: one photon in each of two distinct sites."""
    _check_pair(m, n, num_sites)
    a = np.zeros((num_sites, num_sites), dtype=complex)
    a[m, n] = a[n, m] = 0.5
    return TwoPhotonAmplitude(a)


def embed(small, offset: int, num_sites: int) -> TwoPhotonAmplitude:
    """Place a two-mode amplitude on sites (offset, offset + 1)."""
    a_small = small.amplitude if isinstance(small, TwoPhotonAmplitude) else np.asarray(small)
    if a_small.shape != (2, 2):
        raise ValidationError(f"expected a 2-mode amplitude, got shape {a_small.shape}")
    if not 0 <= offset or offset + 1 >= num_sites:
        raise ValidationError(f"offset {offset} does not fit two modes in {num_sites} sites")
    a = np.zeros((num_sites, num_sites), dtype=complex)
    a[offset:offset + 2, offset:offset + 2] = a_small
    return TwoPhotonAmplitude(a)


def project(state: TwoPhotonAmplitude, offset: int) -> np.ndarray:
    """The 2x2 block of ``state`` on sites (offset, offset + 1)."""
    return state.amplitude[offset:offset + 2, offset:offset + 2].copy()


def embed_unitary(u_small: np.ndarray, offset: int, num_sites: int) -> np.ndarray:
    """Identity on all sites except a 2x2 block at (offset, offset + 1)."""
    if not 0 <= offset or offset + 1 >= num_sites:
        raise ValidationError(f"offset {offset} does not fit two modes in {num_sites} sites")
    t = np.eye(num_sites, dtype=complex)
    t[offset:offset + 2, offset:offset + 2] = u_small
    return t


def _matrix(u):
    return u.matrix if isinstance(u, Propagator) else np.asarray(u)


def evolve_state(state: TwoPhotonAmplitude, u) -> TwoPhotonAmplitude:
    m = _matrix(u)
    if m.shape != state.amplitude.shape:
        raise ValidationError(
            f"propagator shape {m.shape} does not match state shape {state.amplitude.shape}"
        )
    return TwoPhotonAmplitude(m @ state.amplitude @ m.T)


def correlation(state: TwoPhotonAmplitude) -> CorrelationMatrix:
    return CorrelationMatrix(4.0 * np.abs(state.amplitude) ** 2)


def detection_probability(gamma: CorrelationMatrix) -> np.ndarray:
    """Unordered-pair probabilities p[q, r] = Gamma[q, r] / (1 + delta_qr).

    The returned matrix is symmetric; the distribution lives on q <= r.
    """
    g = gamma.gamma if isinstance(gamma, CorrelationMatrix) else np.asarray(gamma, dtype=float)
    return g / (1.0 + np.eye(g.shape[0]))


def distinguishable_correlation(transfer, m0: int, n0: int) -> CorrelationMatrix:
    """Coincidences of two mutually incoherent photons launched at m0 and n0."""
    t = _matrix(transfer)
    n = t.shape[0]
    _check_pair(m0, n0, n)
    err = np.max(np.abs(t.conj().T @ t - np.eye(n)))
    if err >= 1e-8:
        raise ValidationError(f"transfer matrix is not unitary (deviation {err:.3g})")
    pa = np.abs(t[:, m0]) ** 2
    pb = np.abs(t[:, n0]) ** 2
    return CorrelationMatrix(np.outer(pa, pb) + np.outer(pb, pa))


# -- Fock-space oracle ------------------------------------------------------


def fock_basis(num_sites: int) -> list[tuple[int, int]]:
    """Two-photon basis kets as sorted site pairs (m <= n)."""
    return list(combinations_with_replacement(range(num_sites), 2))


def _occupation(ket, num_sites):
    occ = [0] * num_sites
    for site in ket:
        occ[site] += 1
    return tuple(occ)


def _hop(occ, j, k):
    """Apply a_j^+ a_k to an occupation tuple; returns (amplitude, new occ)."""
    if occ[k] == 0:
        return 0.0, None
    amp = np.sqrt(occ[k])
    new = list(occ)
    new[k] -= 1
    amp *= np.sqrt(new[j] + 1)
    new[j] += 1
    return amp, tuple(new)


def fock_hamiltonian(h: np.ndarray) -> np.ndarray:
    """Second-quantized sum_{jk} h[j, k] a_j^+ a_k on the two-photon sector."""
    h = np.asarray(h)
    n = h.shape[0]
    basis = [_occupation(ket, n) for ket in fock_basis(n)]
    index = {occ: i for i, occ in enumerate(basis)}
    big = np.zeros((len(basis), len(basis)), dtype=h.dtype)
    for col, occ in enumerate(basis):
        for j in range(n):
            for k in range(n):
                if h[j, k] == 0:
                    continue
                amp, new = _hop(occ, j, k)
                if new is not None:
                    big[index[new], col] += h[j, k] * amp
    return big


def fock_vector(state: TwoPhotonAmplitude) -> np.ndarray:
    """Coefficients of ``state`` on the orthonormal basis of :func:`fock_basis`."""
    a = state.amplitude
    out = []
    for m, n in fock_basis(state.size):
        # a_m^+ a_m^+ |0> = sqrt(2) |2_m>; both orderings contribute when m != n
        out.append(np.sqrt(2.0) * a[m, m] if m == n else a[m, n] + a[n, m])
    return np.array(out, dtype=complex)


def fock_correlation(coeffs: np.ndarray, num_sites: int) -> np.ndarray:
    g = np.zeros((num_sites, num_sites))
    for c, (m, n) in zip(coeffs, fock_basis(num_sites)):
        p = abs(c) ** 2
        if m == n:
            g[m, m] = 2.0 * p
        else:
            g[m, n] = g[n, m] = p
    return g


def fock_oracle(state: TwoPhotonAmplitude, h: np.ndarray, z: float) -> CorrelationMatrix:
    """Correlations from brute-force evolution in the two-photon Fock space."""
    n = state.size
    if n > MAX_ORACLE_SITES:
        raise ValidationError(f"oracle basis too large for {n} sites (max {MAX_ORACLE_SITES})")
    if np.shape(h) != (n, n):
        raise ValidationError(f"Hamiltonian shape {np.shape(h)} does not match {n} sites")
    w, v = np.linalg.eigh(fock_hamiltonian(h))
    psi0 = fock_vector(state)
    if z == 0:
        return CorrelationMatrix(fock_correlation(psi0, n))
    psi = v @ (np.exp(-1j * z * w) * (v.conj().T @ psi0))
    return CorrelationMatrix(fock_correlation(psi, n))


def oracle_deviation(state: TwoPhotonAmplitude, h: np.ndarray, z: float, u=None) -> float:
    """max |Gamma_amplitude - Gamma_fock|; ``u`` overrides the lattice propagator."""
    if u is None:
        u = propagator(eigensystem(h), z)
    m = _matrix(u)
    evolved = 4.0 * np.abs(m @ state.amplitude @ m.T) ** 2
    return float(np.max(np.abs(evolved - fock_oracle(state, h, z).gamma)))
