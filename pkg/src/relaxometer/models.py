"""Operators for the concrete models: quantized Baker's maps and the
mixed-field Ising chain, plus symmetry-sector resolution.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

import numpy as np
from scipy.linalg import block_diag, qr

from .errors import InvalidDimensionError, NotASymmetryError, ResourceError

__all__ = [
    "FourierPhases",
    "BernoulliScheme",
    "IsingParams",
    "SymmetrySector",
    "BCH",
    "INTEGRABLE",
    "KIM_HUSE",
    "dft_matrix",
    "baker_unitary",
    "baker_parity",
    "ising_hamiltonian",
    "reflection_permutation",
    "reflection_operator",
    "symmetry_sectors",
]

MAX_ISING_SITES = 14


@dataclass(frozen=True)
class FourierPhases:
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")


@dataclass(frozen=True)
class BernoulliScheme:
    """Block split of the Baker's map; ``left_fraction`` is p in (p, 1-p)."""

    left_fraction: Fraction = Fraction(1, 2)

    def __post_init__(self):
        p = Fraction(self.left_fraction).limit_denominator(10**6)
        object.__setattr__(self, "left_fraction", p)
        if not 0 < p < 1:
            raise ValueError(f"left fraction must lie in (0, 1), got {p}")

    @classmethod
    def parse(cls, text: Union[str, float, Fraction]) -> "BernoulliScheme":
        return cls(Fraction(text))

    def block_sizes(self, D: int) -> Tuple[int, int]:
        left = self.left_fraction * D
        if left.denominator != 1:
            raise InvalidDimensionError(
                f"scheme {self} needs {self.left_fraction}*D integer; D={D} gives {left}"
            )
        return int(left), D - int(left)

    def __str__(self):
        p = self.left_fraction
        return f"({p},{1 - p})"


@dataclass(frozen=True)
class IsingParams:
    N: int
    h_x: float
    h_z: float

    @property
    def dimension(self) -> int:
        return 2**self.N


# Banuls-Cirac-Hastings chaotic point
BCH = (-1.05, 0.5)
# integrable point with a small longitudinal field lifting the spin-flip symmetry
INTEGRABLE = (-1.0, 0.001)
KIM_HUSE = ((np.sqrt(5) + 5) / 8, (np.sqrt(5) + 1) / 4)


@dataclass
class SymmetrySector:
    """One eigenspace of a unitary involution.

    ``basis`` holds the symmetry-adapted vectors as columns, in the full
    computational basis; ``block`` is the operator restricted to them.
    """

    sign: int
    basis: np.ndarray
    block: np.ndarray

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


def dft_matrix(D: int, phases: FourierPhases = FourierPhases()) -> np.ndarray:
    """Shifted DFT ``G[l, m] = exp(-2 pi i (l+alpha)(m+beta) / D) / sqrt(D)``."""
    if D < 1:
        raise InvalidDimensionError("D must be >= 1")
    l = np.arange(D) + phases.alpha
    m = np.arange(D) + phases.beta
    # reduce the exponent mod 2D before scaling to keep phases accurate at large D
    expo = np.mod(np.outer(l, m), D)
    return np.exp(-2j * np.pi * expo / D) / np.sqrt(D)


def baker_unitary(
    D: int,
    scheme: BernoulliScheme = BernoulliScheme(),
    phases: FourierPhases = FourierPhases(),
) -> np.ndarray:
    """Quantized Baker's map ``G_D^-1 . blockdiag(G_pD, G_(1-p)D)``."""
    if D < 2:
        raise InvalidDimensionError("D must be >= 2")
    n1, n2 = scheme.block_sizes(D)
    GD = dft_matrix(D, phases)
    return GD.conj().T @ block_diag(dft_matrix(n1, phases), dft_matrix(n2, phases))


def baker_parity(D: int, phases: FourierPhases = FourierPhases()) -> np.ndarray:
    """Parity ``-G_D^2``; for alpha = beta = 1/2 this is the reflection n -> D-1-n."""
    if D < 2:
        raise InvalidDimensionError("D must be >= 2")
    G = dft_matrix(D, phases)
    return -(G @ G)


def _site_bits(N):
    idx = np.arange(2**N)
    # site 1 is the leftmost tensor factor, i.e. the most significant bit
    shifts = N - 1 - np.arange(N)
    return idx, (idx[:, None] >> shifts[None, :]) & 1


def ising_hamiltonian(params: IsingParams, max_sites: int = MAX_ISING_SITES) -> np.ndarray:
    """Dense open-chain mixed-field Ising Hamiltonian in the sigma^z basis.

    Basis state ``n`` encodes spins by its binary digits, site 1 first;
    a 0 bit is spin up (sigma^z = +1).
    """
    N = params.N
    if N < 2:
        raise InvalidDimensionError("need at least 2 sites")
    if N > max_sites:
        raise ResourceError(f"N={N} exceeds the dense cap of {max_sites} sites")
    idx, bits = _site_bits(N)
    sz = 1 - 2 * bits
    diag = -(sz[:, :-1] * sz[:, 1:]).sum(axis=1) - params.h_z * sz.sum(axis=1)
    D = 2**N
    H = np.zeros((D, D))
    H[idx, idx] = diag
    for i in range(N):
        H[idx, idx ^ (1 << (N - 1 - i))] = -params.h_x
    return H


def reflection_permutation(N: int) -> np.ndarray:
    """Index map ``n -> bit-reversed n`` on N sites."""
    if N < 2:
        raise InvalidDimensionError("need at least 2 sites")
    idx, bits = _site_bits(N)
    return bits @ (1 << np.arange(N))


def reflection_operator(N: int) -> np.ndarray:
    """Permutation matrix sending ``|s_1 ... s_N>`` to ``|s_N ... s_1>``."""
    perm = reflection_permutation(N)
    R = np.zeros((2**N, 2**N))
    R[perm, np.arange(2**N)] = 1.0
    return R


def _signed_permutation(S, tol=1e-9):
    """Return (image, sign) if S has one unit-modulus entry per column, else None."""
    D = S.shape[0]
    image = np.argmax(np.abs(S), axis=0)
    vals = S[image, np.arange(D)]
    if not np.allclose(np.abs(vals), 1, atol=tol):
        return None
    rest = S.copy()
    rest[image, np.arange(D)] = 0
    if np.abs(rest).max() > tol or len(set(image.tolist())) != D:
        return None
    return image, vals


def _orbit_bases(image, vals, D):
    plus, minus = [], []
    for n in range(D):
        m = image[n]
        if m == n:
            v = np.zeros(D, dtype=complex)
            v[n] = 1
            if abs(vals[n] - 1) < 1e-9:
                plus.append(v)
            elif abs(vals[n] + 1) < 1e-9:
                minus.append(v)
            else:
                raise NotASymmetryError("fixed point with eigenvalue other than +-1")
        elif n < m:
            # (1 +- S) e_n = e_n +- s_n e_m
            for out, sgn in ((plus, 1), (minus, -1)):
                v = np.zeros(D, dtype=complex)
                v[n] = 1
                v[m] = sgn * vals[n]
                out.append(v / np.sqrt(2))
    cols = lambda vs: np.array(vs).T if vs else np.zeros((D, 0), dtype=complex)
    return cols(plus), cols(minus)


def _projector_basis(S, sign):
    D = S.shape[0]
    proj = (np.eye(D) + sign * S) / 2
    rank = int(round(np.trace(proj).real))
    Q, _, _ = qr(proj, pivoting=True)
    return Q[:, :rank]


def symmetry_sectors(op: np.ndarray, S: np.ndarray, tol: float = 1e-8):
    """Split ``op`` into the +1 and -1 eigenspaces of the involution ``S``.

    Returns ``(plus, minus)`` :class:`SymmetrySector` objects. For signed
    permutations the basis pairs each index n with its image m and orders the
    combinations by min(n, m); other involutions fall back to a pivoted QR of
    the sector projector.
    """
    D = op.shape[0]
    comm = np.abs(op @ S - S @ op).max()
    if comm > tol:
        raise NotASymmetryError(f"operator does not commute with S (max |[op,S]| = {comm:.3g})")
    if np.abs(S @ S - np.eye(D)).max() > tol:
        raise NotASymmetryError("S is not an involution")
    perm = _signed_permutation(S)
    if perm is not None:
        plus, minus = _orbit_bases(*perm, D)
    else:
        plus, minus = _projector_basis(S, 1), _projector_basis(S, -1)
    real = np.isrealobj(op) and np.isrealobj(S)
    out = []
    for sign, Q in ((1, plus), (-1, minus)):
        if real:
            Q = Q.real.copy()
        out.append(SymmetrySector(sign, Q, Q.conj().T @ op @ Q))
    return tuple(out)
