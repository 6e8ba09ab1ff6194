"""Coincidence-counting emulation and efficiency correction.

Counts are drawn cell by cell from a Philox counter-based generator whose
key is derived from the configured seed and whose counter encodes the
cell, so every cell's variate is fixed independently of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .analysis import similarity
from .errors import DomainError, ValidationError
from .twophoton import CorrelationMatrix, detection_probability

# ~1e4 recorded coincidences per 15 min device run for the 16-site chip
DEFAULT_PAIR_RATE = 12.0
DEFAULT_INTEGRATION = 900.0
DEFAULT_WINDOW = 1e-9
DEFAULT_ACCIDENTAL_RATE = 2e-6

_SAMPLE_STREAM = 0
_BOOTSTRAP_STREAM = 1


@dataclass(frozen=True)
class DetectionConfig:
    pair_rate: float = DEFAULT_PAIR_RATE
    integration: float = DEFAULT_INTEGRATION
    window: float = DEFAULT_WINDOW
    accidental_rate: float = DEFAULT_ACCIDENTAL_RATE
    efficiencies: Optional[tuple] = None
    diagonal_split: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("pair_rate", "integration", "window", "accidental_rate"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValidationError(f"{name} must be >= 0, got {value}")
        if not 0 < self.diagonal_split <= 1:
            raise ValidationError(f"diagonal_split must lie in (0, 1], got {self.diagonal_split}")
        if self.efficiencies is not None:
            eff = tuple(float(x) for x in self.efficiencies)
            if any(not 0 < x <= 1 for x in eff):
                raise ValidationError("efficiencies must lie in (0, 1]")
            object.__setattr__(self, "efficiencies", eff)
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def eta(self, num_sites: int) -> np.ndarray:
        if self.efficiencies is None:
            return np.ones(num_sites)
        if len(self.efficiencies) != num_sites:
            raise ValidationError(
                f"{len(self.efficiencies)} efficiencies given for {num_sites} channels"
            )
        return np.asarray(self.efficiencies)

    def derive(self, *words: int) -> "DetectionConfig":
        """Copy with a seed mixed from this seed and ``words`` (e.g. a job index)."""
        state = np.random.SeedSequence([int(self.seed), *map(int, words)]).generate_state(2, np.uint64)
        return replace(self, seed=int(state[0]))


def _generator(seed: int, stream: int, q: int = 0, r: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, stream, q, r]))


def capture_factors(cfg: DetectionConfig, num_sites: int) -> np.ndarray:
    """Probability that an emitted pair in cell (q, r) is recorded there."""
    eta = cfg.eta(num_sites)
    f = np.outer(eta, eta)
    f[np.diag_indices(num_sites)] *= cfg.diagonal_split
    return f


def expected_counts(p: np.ndarray, cfg: DetectionConfig) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    upper = np.triu_indices(n)
    total = float(np.sum(p[upper]))
    if abs(total - 1.0) > 1e-8:
        raise ValidationError(f"pair probabilities sum to {total!r}, expected 1")
    cells = n * (n + 1) // 2
    mean = cfg.pair_rate * cfg.integration * p * capture_factors(cfg, n)
    return mean + cfg.accidental_rate * cfg.integration / cells


def sample_counts(p, cfg: DetectionConfig) -> np.ndarray:
    """Poisson coincidence counts for unordered-pair probabilities ``p``.

    ``p`` is the symmetric matrix from :func:`detection_probability`; the
    returned integer matrix is symmetric with each unordered cell stored
    in both (q, r) and (r, q).
    """
    mean = expected_counts(p, cfg)
    n = mean.shape[0]
    counts = np.zeros((n, n), dtype=np.int64)
    for q in range(n):
        for r in range(q, n):
            k = _generator(cfg.seed, _SAMPLE_STREAM, q, r).poisson(mean[q, r])
            counts[q, r] = counts[r, q] = k
    return counts


def _correction(num_sites: int, cfg: DetectionConfig) -> np.ndarray:
    # unordered cell -> ordered Gamma: diagonal carries a factor 2
    return (1.0 + np.eye(num_sites)) / capture_factors(cfg, num_sites)


def count_scale(counts, cfg: DetectionConfig) -> np.ndarray:
    """Per-cell factor mapping raw counts to the normalized Gamma estimate."""
    counts = np.asarray(counts, dtype=float)
    corrected = _correction(counts.shape[0], cfg) * counts
    total = corrected.sum()
    if total <= 0:
        raise DomainError("no coincidences recorded")
    return _correction(counts.shape[0], cfg) * (2.0 / total)


def estimate_gamma(counts, cfg: DetectionConfig) -> CorrelationMatrix:
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValidationError("counts must be nonnegative")
    if not np.array_equal(counts, counts.T):
        raise ValidationError("counts matrix must be symmetric")
    return CorrelationMatrix(count_scale(counts, cfg) * counts)


def poisson_sigma(counts) -> np.ndarray:
    """sqrt(counts), with sigma = 1 substituted on empty cells."""
    counts = np.asarray(counts, dtype=float)
    return np.sqrt(np.where(counts > 0, counts, 1.0))


def bootstrap_similarity(counts, gamma_th, resamples: int, cfg: DetectionConfig) -> tuple[float, float]:
    """Mean and standard deviation of S over Poisson resamplings of ``counts``."""
    if resamples < 100:
        raise ValidationError(f"need at least 100 resamples, got {resamples}")
    counts = np.asarray(counts)
    n = counts.shape[0]
    if not np.any(counts):
        raise DomainError("cannot bootstrap an all-zero counts matrix")
    iu = np.triu_indices(n)
    draws = _generator(cfg.seed, _BOOTSTRAP_STREAM).poisson(counts[iu], size=(resamples, len(iu[0])))
    values = np.empty(resamples)
    m = np.zeros((n, n))
    for b in range(resamples):
        m[iu] = draws[b]
        sym = m + np.triu(m, 1).T
        values[b] = similarity(estimate_gamma(sym, cfg), gamma_th)
    return float(values.mean()), float(values.std(ddof=1))


@dataclass(frozen=True, eq=False)
class NoisyRun:
    counts: np.ndarray
    gamma: CorrelationMatrix
    sigma: np.ndarray
    scale: np.ndarray = field(repr=False)


def emulate(gamma, cfg: DetectionConfig) -> NoisyRun:
    """Sample counts for ``gamma`` and return them with the derived estimates."""
    counts = sample_counts(detection_probability(gamma), cfg)
    return NoisyRun(counts, estimate_gamma(counts, cfg), poisson_sigma(counts), count_scale(counts, cfg))
