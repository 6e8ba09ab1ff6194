"""Statistics derived from correlation matrices.

Interparticle distance, similarity, the Bell-like classicality bound
and the bunching summaries used to locate correlation turning points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ValidationError
from .twophoton import CorrelationMatrix


def _gamma(g) -> np.ndarray:
    return g.gamma if isinstance(g, CorrelationMatrix) else np.asarray(g, dtype=float)


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    values: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class ViolationMatrix:
    """V[k, l] = (2/3) sqrt(G[k,k] G[l,l]) - G[k,l], plus the G it came from.

    ``significance`` is filled by :func:`violation_significance`.
    """

    values: np.ndarray
    gamma: np.ndarray
    significance: Optional[np.ndarray] = None

    @property
    def violating(self) -> np.ndarray:
        return self.values > 0

    def blanked(self) -> np.ndarray:
        """Values with non-violating cells replaced by NaN."""
        return np.where(self.violating, self.values, np.nan)


def interparticle_distance(gamma) -> DistanceProfile:
    """g(D) = mean of Gamma along the D-th superdiagonal, D = 0..N-1."""
    g = _gamma(gamma)
    n = g.shape[0]
    weights = n - np.arange(n)
    values = np.array([np.trace(g, offset=d) for d in range(n)]) / weights
    return DistanceProfile(values, weights)


def similarity(gamma_a, gamma_b) -> float:
    """Bhattacharyya-type overlap, 1 for proportional matrices."""
    a = _gamma(gamma_a)
    b = _gamma(gamma_b)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("similarity needs nonnegative matrices")
    sa, sb = a.sum(), b.sum()
    if sa == 0 or sb == 0:
        raise DomainError("similarity is undefined for an all-zero matrix")
    return float(np.sum(np.sqrt(a * b)) ** 2 / (sa * sb))


def bell_violation(gamma) -> ViolationMatrix:
    g = _gamma(gamma)
    d = np.diag(g)
    v = (2.0 / 3.0) * np.sqrt(np.outer(d, d)) - g
    return ViolationMatrix(v, g.copy())


def violation_significance(v: ViolationMatrix, counts, scale=None) -> np.ndarray:
    """V / sigma_V with Poissonian sigma on every raw count.

    ``scale[q, r]`` converts counts to Gamma units (Gamma = scale * counts);
    when omitted it is inferred as Gamma / counts on the cells where both
    are nonzero. Cells whose partial derivatives are undefined (a zero
    diagonal paired with a nonzero one) come back as NaN.
    """
    counts = np.asarray(counts, dtype=float)
    g = v.gamma
    if counts.shape != g.shape:
        raise ValidationError(f"counts shape {counts.shape} does not match {g.shape}")
    if np.any(counts < 0):
        raise ValidationError("counts must be nonnegative")
    if scale is None:
        scale = _infer_scale(g, counts)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), g.shape)
    sigma_g = scale * np.sqrt(np.where(counts > 0, counts, 1.0))
    d = np.diag(g)
    sd = np.diag(sigma_g)
    dk = d[:, None]
    dl = d[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        # dV/dG_kk = (1/3) sqrt(G_ll / G_kk)
        part_k = np.where(dk > 0, np.sqrt(dl / dk) / 3.0, np.where(dl > 0, np.nan, 0.0))
        part_l = np.where(dl > 0, np.sqrt(dk / dl) / 3.0, np.where(dk > 0, np.nan, 0.0))
    eye = np.eye(g.shape[0], dtype=bool)
    var = (part_k * sd[:, None]) ** 2 + (part_l * sd[None, :]) ** 2 + sigma_g**2
    # on the diagonal V = -G_kk/3 depends on a single count
    var = np.where(eye, (sigma_g / 3.0) ** 2, var)
    sigma_v = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = np.where(sigma_v > 0, v.values / sigma_v, np.where(v.values == 0, 0.0, np.nan))
    sig = np.where(v.values == 0, 0.0, sig)
    return sig


def _infer_scale(g, counts):
    mask = (counts > 0) & (g > 0)
    if not np.any(mask):
        raise DomainError("cannot infer the count-to-gamma scale from empty data")
    ratio = np.where(mask, g / np.where(mask, counts, 1.0), np.nan)
    fallback = np.nanmedian(ratio)
    return np.where(mask, ratio, fallback)


def with_significance(v: ViolationMatrix, counts, scale=None) -> ViolationMatrix:
    return ViolationMatrix(v.values, v.gamma, violation_significance(v, counts, scale))


def diagonal_fraction(gamma) -> float:
    """Probability that both photons leave through the same waveguide."""
    return float(np.trace(_gamma(gamma)) / 2.0)


def bunched_fraction(gamma, split: Optional[int] = None) -> float:
    """Probability that both photons exit on the same side of ``split``.

    Sites 0..split form one side and split+1..N-1 the other. The default
    split is the lattice centre. This is the mass of the two diagonal
    lobes of Gamma, as opposed to the two off-diagonal lobes.
    """
    g = _gamma(gamma)
    n = g.shape[0]
    if split is None:
        split = n // 2 - 1
    if not 0 <= split < n - 1:
        raise ValidationError(f"split {split} must leave sites on both sides")
    side = np.arange(n) > split
    same = side[:, None] == side[None, :]
    return float(g[same].sum() / 2.0)


@dataclass(frozen=True)
class TurningPoint:
    """First crossing of the bunched mass through 1/2.

    ``fraction`` is z / lambda_B; ``rising`` is True when the pair goes
    from separated to bunched at the crossing.
    """

    fraction: float
    distance: float
    rising: bool


def find_crossing(f: Callable[[float], float], grid, level=0.5, tol=1e-4):
    """Smallest root of f(x) - level on ``grid``, refined by bisection to ``tol``.

    Returns (x, rising) or None if no sign change is bracketed.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.array([f(x) for x in grid]) - level
    for i in range(len(grid) - 1):
        lo, hi = grid[i], grid[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        if flo == 0:
            return float(lo), bool(fhi > 0)
        if np.sign(flo) != np.sign(fhi):
            rising = bool(fhi > flo)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = f(mid) - level
                if np.sign(fm) == np.sign(flo):
                    lo, flo = mid, fm
                else:
                    hi = mid
            return float(0.5 * (lo + hi)), rising
    return None


def turning_point(device, num_points: int = 51, upper: float = 0.5, measure=None) -> Optional[TurningPoint]:
    """Locate the correlation turning point of ``device`` over z / lambda_B in (0, upper].

    ``device`` must provide ``gamma(fraction)`` and ``split``; see
    :class:`blochepr.device.Device`. ``measure`` maps Gamma to the bunched
    mass and defaults to :func:`bunched_fraction` about the feed sites.
    """
    if num_points < 2:
        raise ValidationError("turning_point needs at least two grid points")
    if measure is None:
        def measure(g):
            return bunched_fraction(g, device.split)

    grid = np.linspace(upper / num_points, upper, num_points)
    hit = find_crossing(lambda x: measure(device.gamma(x)), grid, tol=1e-4)
    if hit is None:
        return None
    x, rising = hit
    return TurningPoint(x, device.distance(x), rising)
