"""Detuned directional coupler used to prepare path-entangled pairs.

Mode equations (photon in guide 0 detuned by ``detuning``)::

    i da0/dz = detuning * a0 - C * a1
    i da1/dz = -C * a0

integrated with the same exp(-i z M) convention as the lattice, so a
coupler block can be composed with a lattice propagator directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

# The two-photon input a0^+ a1^+ |0>, as a symmetric amplitude matrix.
SEPARABLE_PAIR = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)


@dataclass(frozen=True)
class CouplerSpec:
    coupling: float
    detuning: float = 0.0
    length: float = 0.0

    def __post_init__(self):
        if not self.coupling > 0:
            raise ValidationError(f"coupling must be > 0, got {self.coupling}")
        if not self.detuning >= 0:
            raise ValidationError(f"detuning must be >= 0, got {self.detuning}")
        if not self.length >= 0:
            raise ValidationError(f"length must be >= 0, got {self.length}")

    @classmethod
    def balanced(cls, detuning: float, coupling: float) -> "CouplerSpec":
        return cls(coupling, detuning, splitter_length(detuning, coupling))


@dataclass(frozen=True)
class PreparedEPR:
    amplitude: np.ndarray
    phase: float


def effective_kappa(detuning: float, coupling: float) -> float:
    if not coupling > 0:
        raise ValidationError(f"coupling must be > 0, got {coupling}")
    return math.hypot(detuning / 2.0, coupling)


def _check_balanced(detuning: float, coupling: float):
    if not coupling > 0:
        raise ValidationError(f"coupling must be > 0, got {coupling}")
    if not 0 <= detuning <= 2.0 * coupling:
        raise DomainError(
            f"no balanced length exists for detuning {detuning} with coupling {coupling} "
            "(requires 0 <= detuning <= 2*coupling)"
        )


def splitter_length(detuning: float, coupling: float) -> float:
    """Shortest length at which the detuned coupler splits 50:50."""
    _check_balanced(detuning, coupling)
    kappa = effective_kappa(detuning, coupling)
    # asin(kappa / (sqrt(2) C)) via atan2; stays exact at detuning = 2C
    half = detuning / 2.0
    cos_part = math.sqrt((coupling - half) * (coupling + half))
    return math.atan2(kappa, cos_part) / kappa


def coupler_unitary(spec: CouplerSpec) -> np.ndarray:
    """2x2 transfer matrix exp(-i z M) in closed form."""
    kappa = effective_kappa(spec.detuning, spec.coupling)
    z = spec.length
    c = math.cos(kappa * z)
    s = math.sin(kappa * z)
    r = spec.detuning / (2.0 * kappa)
    t = 1j * spec.coupling / kappa * s
    u = np.array([[c - 1j * r * s, t], [t, c + 1j * r * s]], dtype=complex)
    return np.exp(-0.5j * spec.detuning * z) * u


def transform_pair(u: np.ndarray, amplitude: np.ndarray = SEPARABLE_PAIR) -> np.ndarray:
    """Two-photon amplitude after both photons traverse ``u``."""
    return u @ amplitude @ u.T


def phase_of_detuning(detuning: float, coupling: float) -> float:
    """Relative phase of the prepared pair, increasing from 0 to pi on [0, 2C]."""
    if not coupling > 0:
        raise ValidationError(f"coupling must be > 0, got {coupling}")
    x = detuning / coupling
    if not 0.0 <= x <= 2.0:
        raise DomainError(f"detuning {detuning} outside [0, 2*coupling]")
    return math.pi - 2.0 * math.atan2(math.sqrt(4.0 - x * x), x)


def detuning_for_phase(phase: float, coupling: float) -> float:
    """Inverse of :func:`phase_of_detuning`: detuning = 2 C sin(phase / 2)."""
    if not coupling > 0:
        raise ValidationError(f"coupling must be > 0, got {coupling}")
    if not 0.0 <= phase <= math.pi:
        raise DomainError(f"phase {phase} outside [0, pi]")
    return min(2.0 * coupling, 2.0 * coupling * math.sin(phase / 2.0))


def prepare_epr(detuning: float, coupling: float) -> PreparedEPR:
    """Send a0^+ a1^+ |0> through the balanced detuned coupler.

    The output has both photons in the same guide; its phase is read
    back from the amplitudes rather than from the closed form.
    """
    spec = CouplerSpec.balanced(detuning, coupling)
    amp = transform_pair(coupler_unitary(spec))
    phase = float(np.angle(amp[1, 1] / amp[0, 0]))
    if phase < 0 and abs(phase + math.pi) < 1e-9:
        phase = math.pi
    return PreparedEPR(amp, phase)


def classical_mzi_ratio(detuning: float, coupling: float) -> float:
    """Bar-port intensity of a detuned coupler followed by a standard 50:50 one.

    Classical light enters guide 0. With no detuning the two balanced
    couplers cross all power, so the ratio is 0.
    """
    detuned = coupler_unitary(CouplerSpec.balanced(detuning, coupling))
    standard = coupler_unitary(CouplerSpec.balanced(0.0, coupling))
    out = (standard @ detuned)[:, 0]
    return float(abs(out[0]) ** 2)
