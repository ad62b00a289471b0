"""Level statistics: eigenangles, unfolding, spacing distributions and the
adjacent-gap ratio.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NumericalConsistencyError

__all__ = [
    "LevelSequence",
    "eigenangles",
    "unfold",
    "wigner_surmise_goe",
    "wigner_cdf_goe",
    "mean_gap_ratio",
    "gap_ratios",
    "ks_to_wigner",
    "POISSON_MEAN_RATIO",
]

POISSON_MEAN_RATIO = 2 * np.log(2) - 1


@dataclass(frozen=True)
class LevelSequence:
    kind: str  # "energy" or "eigenangle"
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("energy", "eigenangle"):
            raise ValueError(f"unknown level kind {self.kind!r}")
        v = np.sort(np.asarray(self.values, dtype=float))
        if self.kind == "eigenangle" and v.size and (v[0] < 0 or v[-1] >= 2 * np.pi):
            raise ValueError("eigenangles must lie in [0, 2pi)")
        object.__setattr__(self, "values", v)

    @classmethod
    def energies(cls, values):
        return cls("energy", values)

    def gaps(self) -> np.ndarray:
        """Nearest-neighbour gaps; eigenangles include the wrap-around gap."""
        v = self.values
        if self.kind == "eigenangle":
            return np.diff(np.append(v, v[0] + 2 * np.pi))
        return np.diff(v)

    def __len__(self):
        return self.values.size


def eigenangles(U: np.ndarray, tol: float = 1e-10) -> LevelSequence:
    """Sorted phases of the eigenvalues of a unitary, mapped to [0, 2pi)."""
    U = np.asarray(U)
    D = U.shape[0]
    if np.abs(U.conj().T @ U - np.eye(D)).max() > tol * max(1, D):
        raise NumericalConsistencyError("input is not unitary")
    lam = np.linalg.eigvals(U)
    if np.abs(np.abs(lam) - 1).max() > 1e-8:
        raise NumericalConsistencyError("eigenvalues off the unit circle")
    theta = np.mod(np.angle(lam), 2 * np.pi)
    # angles a hair below 2pi would wrap to 2pi itself after float rounding
    theta[theta >= 2 * np.pi] = 0.0
    return LevelSequence("eigenangle", theta)


def unfold(levels: LevelSequence, method: str = "auto", degree: int = 10, trim: float = 0.05):
    """Spacings rescaled to unit mean.

    ``polynomial`` fits the counting staircase with a degree-``degree``
    polynomial and differences the fitted staircase, dropping a ``trim``
    fraction of levels at each edge. ``circular-uniform`` treats eigenangles
    as uniformly dense. ``auto`` picks the latter for eigenangles.
    """
    v = levels.values
    if v.size < 50:
        raise ValueError(f"need at least 50 levels to unfold, got {v.size}")
    if method == "auto":
        method = "circular-uniform" if levels.kind == "eigenangle" else "polynomial"
    if method == "circular-uniform":
        s = v.size * levels.gaps() / (2 * np.pi)
    elif method == "polynomial":
        x = (v - v.mean()) / (v.std() or 1.0)
        staircase = np.arange(1, v.size + 1)
        coef = np.polynomial.polynomial.polyfit(x, staircase, degree)
        smooth = np.polynomial.polynomial.polyval(x, coef)
        cut = int(trim * v.size)
        smooth = smooth[cut : v.size - cut] if cut else smooth
        s = np.diff(smooth)
    else:
        raise ValueError(f"unknown unfolding method {method!r}")
    return s / s.mean()


def wigner_surmise_goe(s):
    """GOE Wigner surmise ``(pi/2) s exp(-pi s^2 / 4)``."""
    s = np.asarray(s, dtype=float)
    return np.pi / 2 * s * np.exp(-np.pi * s**2 / 4)


def wigner_cdf_goe(s):
    s = np.asarray(s, dtype=float)
    return 1 - np.exp(-np.pi * s**2 / 4)


def ks_to_wigner(spacings) -> float:
    """Kolmogorov-Smirnov distance between spacings and the GOE surmise."""
    return float(stats.kstest(np.asarray(spacings), wigner_cdf_goe).statistic)


def gap_ratios(levels: LevelSequence) -> np.ndarray:
    """``min(s_n, s_n+1) / max(s_n, s_n+1)`` for consecutive gaps."""
    if len(levels) < 3:
        raise ValueError("need at least 3 levels")
    s = levels.gaps()
    if levels.kind == "eigenangle":
        nxt = np.roll(s, -1)
        a, b = s, nxt
    else:
        a, b = s[:-1], s[1:]
    hi = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(hi > 0, np.minimum(a, b) / hi, 1.0)
    return r


def mean_gap_ratio(levels: LevelSequence) -> float:
    return float(gap_ratios(levels).mean())
