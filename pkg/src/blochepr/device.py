"""A complete chip: detuned coupler feeding a curved lattice of fixed length.

Each device has the same physical length; the curvature sets the ramp so
that the length covers ``fraction`` of a Bloch period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import coupler as dc
from .errors import ValidationError
from .evolve import eigensystem, propagator
from .lattice import LatticeSpec, build_hamiltonian, ramp_for_period
from .twophoton import (
    CorrelationMatrix,
    TwoPhotonAmplitude,
    correlation,
    distinguishable_correlation,
    embed,
    embed_unitary,
    evolve_state,
    separable_state,
)

SOURCES = ("epr", "separable", "distinguishable")


@dataclass(frozen=True)
class Device:
    num_sites: int = 16
    coupling: float = 0.45
    length: float = 6.0
    source: str = "epr"
    phase: float = 0.0
    feed: Optional[int] = None
    coupler_coupling: Optional[float] = None
    diag_offset: float = 0.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValidationError(f"source must be one of {SOURCES}, got {self.source!r}")
        if not self.length > 0:
            raise ValidationError(f"length must be > 0, got {self.length}")
        if not 0.0 <= self.phase <= math.pi:
            raise ValidationError(f"phase must lie in [0, pi], got {self.phase}")
        LatticeSpec(self.num_sites, self.coupling, 0.0, self.diag_offset)
        if not 0 <= self.feed_site < self.num_sites - 1:
            raise ValidationError(f"feed site {self.feed_site} leaves no room for two modes")

    @property
    def feed_site(self) -> int:
        """Lower of the two lattice sites driven by the coupler."""
        return self.num_sites // 2 - 1 if self.feed is None else int(self.feed)

    @property
    def split(self) -> int:
        return self.feed_site

    @property
    def dc_coupling(self) -> float:
        return self.coupling if self.coupler_coupling is None else self.coupler_coupling

    @property
    def detuning(self) -> float:
        return dc.detuning_for_phase(self.phase, self.dc_coupling)

    def with_(self, **changes) -> "Device":
        return replace(self, **changes)

    def lattice(self, fraction: float) -> LatticeSpec:
        if not 0.0 < fraction <= 1.0:
            raise ValidationError(f"fraction must lie in (0, 1], got {fraction}")
        ramp = ramp_for_period(self.length / fraction)
        return LatticeSpec(self.num_sites, self.coupling, ramp, self.diag_offset)

    def distance(self, fraction: float) -> float:
        """Propagation distance; always the device length."""
        return self.length

    def bloch_period(self, fraction: float) -> float:
        return self.length / fraction

    def hamiltonian(self, fraction: float) -> np.ndarray:
        return build_hamiltonian(self.lattice(fraction))

    def lattice_propagator(self, fraction: float) -> np.ndarray:
        key = ("U", float(fraction))
        if key not in self._cache:
            self._cache[key] = propagator(eigensystem(self.hamiltonian(fraction)), self.length).matrix
        return self._cache[key]

    def coupler_unitary(self) -> np.ndarray:
        return dc.coupler_unitary(dc.CouplerSpec.balanced(self.detuning, self.dc_coupling))

    def transfer(self, fraction: float) -> np.ndarray:
        """Single-photon map of the whole chip: lattice after embedded coupler."""
        e = embed_unitary(self.coupler_unitary(), self.feed_site, self.num_sites)
        return self.lattice_propagator(fraction) @ e

    def input_state(self) -> TwoPhotonAmplitude:
        """Two-photon state entering the lattice section."""
        m = self.feed_site
        if self.source == "separable":
            return separable_state(m, m + 1, self.num_sites)
        if self.source == "epr":
            prepared = dc.prepare_epr(self.detuning, self.dc_coupling)
            return embed(prepared.amplitude, m, self.num_sites)
        raise ValidationError("distinguishable photons have no joint input amplitude")

    def gamma(self, fraction: float) -> CorrelationMatrix:
        if self.source == "distinguishable":
            m = self.feed_site
            return distinguishable_correlation(self.transfer(fraction), m, m + 1)
        return correlation(evolve_state(self.input_state(), self.lattice_propagator(fraction)))


REFERENCE_DEVICE = Device()
SWEEP_FRACTIONS = (0.1, 0.2, 0.3, 0.4)
