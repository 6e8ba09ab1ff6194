"""Spectral propagation of single photons through the lattice.

The propagator is U(z) = exp(-i z H), assembled from the eigensystem of
the tridiagonal Hamiltonian so that it is unitary up to roundoff.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import DomainError, NumericalError, ValidationError


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class Propagator:
    matrix: np.ndarray
    distance: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _bands(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"Hamiltonian must be square, got shape {h.shape}")
    if np.iscomplexobj(h):
        if np.any(h.imag != 0):
            raise ValidationError("Hamiltonian must be real")
        h = h.real
    if not np.array_equal(h, h.T):
        raise ValidationError("Hamiltonian must be exactly symmetric")
    if np.any(np.triu(h, 2) != 0):
        raise ValidationError("Hamiltonian must be tridiagonal")
    return np.diag(h).astype(float), np.diag(h, 1).astype(float)


def eigensystem(h: np.ndarray) -> EigenSystem:
    """Full spectral decomposition of a real symmetric tridiagonal matrix.

    Eigenvalues are ascending. Each eigenvector is sign-fixed so its
    largest-magnitude component is positive, which makes the output a
    deterministic function of ``h``.
    """
    d, e = _bands(h)
    if d.size == 1:
        return EigenSystem(d.copy(), np.ones((1, 1)))
    try:
        w, v = eigh_tridiagonal(d, e, lapack_driver="stev")
    except LinAlgError as exc:
        found = re.search(r"\d+", str(exc))
        index = int(found.group()) if found else None
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}", index=index) from exc
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(v.shape[1])])
    v = v * signs
    return EigenSystem(w, v)


def propagator(eig: EigenSystem, z: float) -> Propagator:
    """U = V diag(exp(-i z w)) V^T; exactly the identity at z = 0."""
    if not z >= 0:
        raise DomainError(f"propagation distance must be >= 0, got {z}")
    if z == 0:
        return Propagator(np.eye(eig.size, dtype=complex), 0.0)
    v = eig.eigenvectors
    phases = np.exp(-1j * z * eig.eigenvalues)
    return Propagator((v * phases) @ v.T, float(z))


def propagate(h: np.ndarray, z: float) -> Propagator:
    return propagator(eigensystem(h), z)


def unitarity_error(u) -> float:
    m = u.matrix if isinstance(u, Propagator) else np.asarray(u)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def single_photon_density(u: Propagator, input_site: int) -> np.ndarray:
    """Output intensity p_k = |U_{k,m}|^2 for a photon launched at site m."""
    n = u.size
    if not 0 <= input_site < n:
        raise ValidationError(f"input_site {input_site} outside 0..{n - 1}")
    return np.abs(u.matrix[:, input_site]) ** 2


def revival_fidelity(u: Propagator, input_site: int) -> float:
    """|<psi(0)|psi(z)>|^2 for a single photon at ``input_site``."""
    return float(abs(u.matrix[input_site, input_site]) ** 2)


def site_spread(p: np.ndarray) -> float:
    """Standard deviation of the site index under the distribution ``p``."""
    k = np.arange(len(p))
    mean = np.dot(p, k)
    return float(np.sqrt(np.dot(p, (k - mean) ** 2)))
