"""Inverse participation ratios, fractal dimension and the single-site
link between c_avg and the basis-state IPR.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import stats

__all__ = [
    "IprResult",
    "eigenstate_ipr",
    "basis_state_ipr",
    "fractal_dimension",
    "FractalDimension",
    "cavg_ipr_identity_check",
]


@dataclass(frozen=True)
class IprResult:
    """Per-state IPR values.

    ``convention`` is ``"bare"`` (sum |amplitude|^4, in [1/D, 1]) or
    ``"D-scaled"`` (D times the bare value).
    """

    values: np.ndarray
    convention: str = "bare"
    dimension: Optional[int] = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def to(self, convention: str) -> "IprResult":
        if convention == self.convention:
            return self
        D = self.dimension
        if convention == "D-scaled" and self.convention == "bare":
            return IprResult(self.values * D, convention, D)
        if convention == "bare" and self.convention == "D-scaled":
            return IprResult(self.values / D, convention, D)
        raise ValueError(f"unknown IPR convention {convention!r}")


def _amplitudes4(vectors, basis):
    V = np.asarray(vectors)
    if basis is not None:
        V = np.asarray(basis).conj().T @ V
    return np.abs(V) ** 4


def eigenstate_ipr(vectors, basis=None, convention: str = "bare") -> IprResult:
    """IPR of each column of ``vectors`` in ``basis`` (computational by default)."""
    a4 = _amplitudes4(vectors, basis)
    res = IprResult(a4.sum(axis=0), "bare", a4.shape[0])
    return res.to(convention)


def basis_state_ipr(vectors, basis=None, convention: str = "bare") -> IprResult:
    """IPR of each basis state over the eigenvectors: ``sum_k |<phi_i|psi_k>|^4``."""
    a4 = _amplitudes4(vectors, basis)
    res = IprResult(a4.sum(axis=1), "bare", a4.shape[0])
    return res.to(convention)


@dataclass(frozen=True)
class FractalDimension:
    value: float
    stderr: float
    ci: Tuple[float, float]


def fractal_dimension(points: Iterable[Tuple[float, float]], confidence: float = 0.95) -> FractalDimension:
    """Fit ``IPR ~ D**(-f_d)`` by least squares on logs."""
    pts = sorted(points)
    D = np.array([p[0] for p in pts], dtype=float)
    ipr = np.array([p[1] for p in pts], dtype=float)
    if np.unique(D).size < 3:
        raise ValueError("need at least three distinct sizes")
    fit = stats.linregress(np.log(D), np.log(ipr))
    dof = D.size - 2
    if dof > 0 and np.isfinite(fit.stderr):
        half = stats.t.ppf(0.5 + confidence / 2, dof) * fit.stderr
    else:
        half = 0.0
    fd = -fit.slope
    return FractalDimension(float(fd), float(fit.stderr), (float(fd - half), float(fd + half)))


def cavg_ipr_identity_check(vectors, site: int = 0):
    """Both sides of c_avg(f = 1/D) = (1 - IPR(phi_site)) / (1 - 1/D).

    The left side is computed from the c_avg formula with A = {site}, the
    right side from the basis-state IPR. Returns ``(lhs, rhs, |lhs - rhs|)``.
    """
    V = np.asarray(vectors)
    D = V.shape[0]
    p = np.abs(V) ** 2
    w = p[site]
    f = 1 / D
    lhs = float(np.sum(w * (1 - w)) / (D * f * (1 - f)))
    ipr = basis_state_ipr(V).values[site]
    rhs = float((p[site].sum() - ipr) / (1 - f))
    return lhs, rhs, abs(lhs - rhs)
