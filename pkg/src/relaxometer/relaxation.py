"""Correlation c(t), its infinite-time average and its time variance.

All quantities are evaluated in the eigenbasis of the evolution operator.
With ``X = V^dag P_A V`` (V the eigenvector columns) the correlation is the
quadratic form ``c(t) = a(t)^T W conj(a(t)) / (n f (1-f))`` where
``a_k(t) = exp(-i E_k t)`` and ``W = X * (I - X)^T`` is real symmetric. The
average keeps the diagonal of W, the variance its off-diagonal squares.

``V`` may hold fewer columns than rows: a symmetry sector's eigenvectors
expressed in the full basis. Prefactors then use the column count ``n``
while the partition acts on the full-basis rows.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import schur

from .errors import NumericalConsistencyError, PartitionError

__all__ = [
    "PartitionSpec",
    "SpectralDecomposition",
    "DegeneracyWarning",
    "projector",
    "correlation_series",
    "c_avg",
    "sigma2",
    "time_average_oracle",
    "goe_prediction",
    "gue_prediction",
    "GAP_CHECK_MAX",
]

DEGENERACY_RTOL = 1e-10
# accidental near-equal gaps are generic beyond this size, see sigma2
GAP_CHECK_MAX = 128


class DegeneracyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PartitionSpec:
    """Subspace A as an ordered list of basis indices; B is the complement."""

    dimension: int
    indices_A: Tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices_A)
        object.__setattr__(self, "indices_A", idx)
        if len(set(idx)) != len(idx):
            raise PartitionError("indices_A must be distinct")
        if any(i < 0 or i >= self.dimension for i in idx):
            raise PartitionError("indices_A out of range")
        if not 0 < len(idx) < self.dimension:
            raise PartitionError("subspace A must be a proper, nonempty subspace")

    @property
    def f(self) -> float:
        return len(self.indices_A) / self.dimension

    @property
    def indices_B(self) -> Tuple[int, ...]:
        a = set(self.indices_A)
        return tuple(i for i in range(self.dimension) if i not in a)

    def complement(self) -> "PartitionSpec":
        return PartitionSpec(self.dimension, self.indices_B)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.dimension, dtype=bool)
        m[list(self.indices_A)] = True
        return m


def projector(D: int, f) -> PartitionSpec:
    """Partition whose subspace A is the first ``f*D`` basis states."""
    size = Fraction(f).limit_denominator(10**9) * D
    if size.denominator != 1:
        raise PartitionError(f"f*D must be an integer; f={f}, D={D}")
    return PartitionSpec(D, tuple(range(int(size))))


@dataclass
class SpectralDecomposition:
    """Levels and orthonormal eigenvector columns.

    ``kind`` is ``"hermitian"`` (levels are energies, U(t) = exp(-iHt)) or
    ``"unitary"`` (levels are eigenangles in [0, 2pi), U^t has phases
    exp(+i theta t)).
    """

    kind: str
    levels: np.ndarray
    vectors: np.ndarray
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("hermitian", "unitary"):
            raise ValueError(f"unknown kind {self.kind!r}")
        self.levels = np.asarray(self.levels, dtype=float)
        if self.vectors.shape[1] != self.levels.size:
            raise ValueError("one eigenvector column per level required")
        if self.level_degenerate():
            self.warnings.append("degenerate-levels")

    @property
    def n(self) -> int:
        return self.levels.size

    @property
    def ambient_dimension(self) -> int:
        return self.vectors.shape[0]

    @property
    def energies(self) -> np.ndarray:
        """Levels in the exp(-i E t) convention."""
        return self.levels if self.kind == "hermitian" else -self.levels

    @classmethod
    def from_hermitian(cls, H: np.ndarray, basis: Optional[np.ndarray] = None):
        """Diagonalize ``H``; with ``basis``, ``H`` is a block in that basis."""
        E, V = np.linalg.eigh(H)
        if basis is not None:
            V = basis @ V
        return cls("hermitian", E, V)

    @classmethod
    def from_unitary(cls, U: np.ndarray, basis: Optional[np.ndarray] = None, tol: float = 1e-8):
        """Diagonalize a unitary through its complex Schur form.

        For a normal matrix the Schur vectors are eigenvectors and stay
        orthonormal even across near-degeneracies.
        """
        T, Z = schur(np.asarray(U, dtype=complex), output="complex")
        lam = np.diag(T)
        off = np.abs(np.triu(T, 1)).max() if T.shape[0] > 1 else 0.0
        if off > tol or np.abs(np.abs(lam) - 1).max() > tol:
            raise NumericalConsistencyError("operator is not unitary within tolerance")
        theta = np.mod(np.angle(lam), 2 * np.pi)
        order = np.argsort(theta, kind="stable")
        Z = Z[:, order]
        if basis is not None:
            Z = basis @ Z
        return cls("unitary", theta[order], Z)

    def _gaps_sorted(self):
        lv = np.sort(self.levels)
        if self.kind == "unitary":
            return np.diff(np.append(lv, lv[0] + 2 * np.pi))
        return np.diff(lv)

    def width(self) -> float:
        if self.kind == "unitary":
            return 2 * np.pi
        return float(np.ptp(self.levels)) or 1.0

    def level_degenerate(self, rtol: float = DEGENERACY_RTOL) -> bool:
        if self.n < 2:
            return False
        return bool(self._gaps_sorted().min() < rtol * self.width())

    def gap_degenerate(self, rtol: float = DEGENERACY_RTOL) -> bool:
        """True if two distinct level pairs share a gap within tolerance."""
        E = self.energies
        k1, k2 = np.triu_indices(self.n, 1)
        g = E[k2] - E[k1]
        if self.kind == "unitary":
            g = np.mod(g, 2 * np.pi)
            g = np.minimum(g, 2 * np.pi - g)
        else:
            g = np.abs(g)
        g = np.sort(g)
        return g.size > 1 and bool(np.diff(g).min() < rtol * self.width())


def _w_and_overlap(decomp, part):
    if part.dimension != decomp.ambient_dimension:
        raise PartitionError(
            f"partition dimension {part.dimension} != eigenvector length {decomp.ambient_dimension}"
        )
    VA = decomp.vectors[list(part.indices_A)]
    X = VA.conj().T @ VA
    return X


def _norm(decomp, part):
    f = part.f
    return decomp.n * f * (1 - f)


def c_avg(decomp: SpectralDecomposition, part: PartitionSpec, warn: bool = True) -> float:
    """Infinite-time average of c(t): ``sum_k w_k (1 - w_k) / (n f (1-f))``,
    with ``w_k`` the weight of eigenvector k on subspace A.
    """
    if warn and "degenerate-levels" in decomp.warnings:
        warnings.warn("degenerate spectrum: c_avg assumes distinct levels", DegeneracyWarning)
    VA = decomp.vectors[list(part.indices_A)]
    if part.dimension != decomp.ambient_dimension:
        raise PartitionError("partition and eigenvectors disagree on dimension")
    w = np.einsum("ij,ij->j", VA.conj(), VA).real
    return float(np.sum(w * (1 - w)) / _norm(decomp, part))


def sigma2(
    decomp: SpectralDecomposition,
    part: PartitionSpec,
    check_gaps: Optional[bool] = None,
    warn: bool = True,
) -> float:
    """Time variance of c(t) for a spectrum with distinct gaps.

    ``2 / (n f (1-f))^2 * sum_{k2>k1} |<psi_k1|P_A|psi_k2>|^4``.

    The gap check is O(n^2 log n) and, for n well above a few hundred,
    accidental coincidences among ~n^4 gap pairs fall below any fixed
    tolerance while carrying negligible weight, so by default it only runs
    for ``n <= GAP_CHECK_MAX``.
    """
    if check_gaps is None:
        check_gaps = decomp.n <= GAP_CHECK_MAX
    if check_gaps and "degenerate-gaps" not in decomp.warnings and decomp.gap_degenerate():
        decomp.warnings.append("degenerate-gaps")
    flagged = "degenerate-gaps" in decomp.warnings or "degenerate-levels" in decomp.warnings
    if warn and flagged:
        warnings.warn("degenerate gaps: sigma2 assumes distinct gaps", DegeneracyWarning)
    X = _w_and_overlap(decomp, part)
    a2 = np.abs(X) ** 2
    total = np.sum(a2 * a2) - np.sum(np.diag(a2) ** 2)
    return float(total / _norm(decomp, part) ** 2)


def _weight_matrix(decomp, part):
    X = _w_and_overlap(decomp, part)
    a2 = np.abs(X) ** 2
    W = -a2
    d = np.diag(X).real
    W[np.diag_indices_from(W)] = d * (1 - d)
    return W


def _series(decomp, W, times, chunk=1 << 15):
    E = decomp.energies
    out = np.empty(times.size)
    resid = 0.0
    step = np.diff(times[: chunk + 1])
    # evenly spaced times: one table of phases, shifted per chunk
    base = None
    if times.size > chunk and np.all(step == step[0]):
        base = np.exp(-1j * np.outer(times[:chunk] - times[0], E))
    for s in range(0, times.size, chunk):
        t = times[s : s + chunk]
        if base is not None:
            a = base[: t.size] * np.exp(-1j * t[0] * E)
        else:
            a = np.exp(-1j * np.outer(t, E))
        vals = np.einsum("tk,tk->t", a @ W, a.conj())
        out[s : s + chunk] = vals.real
        resid = max(resid, float(np.abs(vals.imag).max()))
    return out, resid


def correlation_series(
    decomp: SpectralDecomposition,
    part: PartitionSpec,
    times: Sequence[float],
    tol: float = 1e-10,
) -> np.ndarray:
    """Normalized correlation ``Tr(U^t P_A U^-t P_B) / (n f (1-f))`` at ``times``."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    if decomp.kind == "unitary" and not np.all(times == np.round(times)):
        raise ValueError("a unitary map is only iterated an integer number of times")
    W = _weight_matrix(decomp, part)
    vals, resid = _series(decomp, W, times)
    if resid > tol * max(1.0, np.abs(W).sum()):
        raise NumericalConsistencyError(f"imaginary residue {resid:.3g} in c(t)")
    return vals / _norm(decomp, part)


def oracle_times(kind: str, T: float, samples: int) -> np.ndarray:
    """Sampling times for :func:`time_average_oracle`.

    Maps use the integer steps 1..T (strided evenly when ``samples < T``);
    Hamiltonians use the golden-ratio Kronecker sequence on [0, T].
    """
    if kind == "unitary":
        T = int(T)
        if samples >= T:
            return np.arange(1, T + 1, dtype=float)
        return np.unique(np.linspace(1, T, samples).round())
    phi = (np.sqrt(5) - 1) / 2
    j = np.arange(1, samples + 1, dtype=float)
    return T * np.mod(j * phi, 1.0)


def time_average_oracle(
    decomp: SpectralDecomposition,
    part: PartitionSpec,
    T: float,
    samples: int,
) -> Tuple[float, float]:
    """Brute-force mean and variance of c(t) over sampled times in [0, T]."""
    c = correlation_series(decomp, part, oracle_times(decomp.kind, T, samples))
    return float(c.mean()), float(c.var())


def goe_prediction(D: int) -> Tuple[float, float]:
    if D < 2:
        raise ValueError("D must be >= 2")
    return D / (D + 2), 3 / D**2


def gue_prediction(D: int) -> Tuple[float, float]:
    if D < 2:
        raise ValueError("D must be >= 2")
    return D / (D + 1), 2 / D**2
