"""Model-level measurements built from the core pieces: Baker's-map and
Ising scaling tables, sector-resolved spacings, and the formula-vs-oracle
comparison.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import unitary_group

from . import rng as rngmod
from .models import (
    BernoulliScheme,
    FourierPhases,
    IsingParams,
    baker_parity,
    baker_unitary,
    ising_hamiltonian,
    reflection_operator,
    symmetry_sectors,
)
from .relaxation import (
    SpectralDecomposition,
    c_avg,
    correlation_series,
    projector,
    sigma2,
    time_average_oracle,
)
from .spectral import LevelSequence, unfold

__all__ = [
    "ISING_PRESETS",
    "BakerPoint",
    "baker_point",
    "baker_sector_decompositions",
    "baker_sector_spacings",
    "IsingPoint",
    "ising_points",
    "ising_sector_decompositions",
    "random_unitary",
    "OracleRow",
    "oracle_comparison",
]

ISING_PRESETS = {
    "bch": (-1.05, 0.5),
    "integrable": (-1.0, 0.001),
    "kim-huse": ((np.sqrt(5) + 5) / 8, (np.sqrt(5) + 1) / 4),
}

PARITY_TOL = 1e-8


@dataclass(frozen=True)
class BakerPoint:
    scheme: str
    D: int
    c_avg: float
    sigma2: float
    parity_resolved: bool
    warnings: tuple = ()


def baker_sector_decompositions(U: np.ndarray, phases: FourierPhases = FourierPhases()):
    """Per-sector decompositions of ``U`` under ``-G_D^2``, or None if it is no symmetry."""
    D = U.shape[0]
    P = baker_parity(D, phases)
    if np.abs(U @ P - P @ U).max() > PARITY_TOL:
        return None
    out = {}
    for sec in symmetry_sectors(U, P, tol=PARITY_TOL):
        if sec.dimension:
            out[sec.sign] = SpectralDecomposition.from_unitary(sec.block, basis=sec.basis)
    return out


def baker_point(
    D: int,
    scheme: BernoulliScheme = BernoulliScheme(),
    phases: FourierPhases = FourierPhases(),
    f=Fraction(1, 2),
) -> BakerPoint:
    """c_avg and sigma2 of one quantized Baker's map.

    When parity commutes with the map, c_avg is the dimension-weighted mean
    over the parity sectors. sigma2 is always taken over the full space:
    parity swaps the two halves of the partition, so every matrix element
    of P_A between two same-parity eigenvectors vanishes and the in-sector
    variance is identically zero.
    """
    U = baker_unitary(D, scheme, phases)
    part = projector(D, f)
    full = SpectralDecomposition.from_unitary(U)
    sectors = baker_sector_decompositions(U, phases)
    if sectors:
        ca = sum(d.n * c_avg(d, part, warn=False) for d in sectors.values()) / D
    else:
        ca = c_avg(full, part, warn=False)
    s2 = sigma2(full, part, warn=False)
    return BakerPoint(str(scheme), D, ca, s2, sectors is not None, tuple(full.warnings))


def baker_sector_spacings(D: int, phases: FourierPhases = FourierPhases()) -> Dict[int, np.ndarray]:
    """Unfolded eigenangle spacings of the (1/2,1/2) map in each parity sector."""
    U = baker_unitary(D, BernoulliScheme(Fraction(1, 2)), phases)
    sectors = baker_sector_decompositions(U, phases)
    if sectors is None:
        levels = {0: SpectralDecomposition.from_unitary(U).levels}
    else:
        levels = {s: d.levels for s, d in sectors.items()}
    return {s: unfold(LevelSequence("eigenangle", lv)) for s, lv in levels.items()}


@dataclass(frozen=True)
class IsingPoint:
    N: int
    D: int
    sector: int
    sector_dimension: int
    c_avg: float
    sigma2: float
    warnings: tuple = ()


def ising_sector_decompositions(params: IsingParams):
    """Reflection-sector decompositions (eigenvectors in the full basis)."""
    H = ising_hamiltonian(params)
    R = reflection_operator(params.N)
    return {
        sec.sign: SpectralDecomposition.from_hermitian(sec.block, basis=sec.basis)
        for sec in symmetry_sectors(H, R, tol=1e-12)
    }


def ising_points(params: IsingParams, f=Fraction(1, 2)) -> List[IsingPoint]:
    """Sector-resolved c_avg and sigma2 of the mixed-field Ising chain.

    The partition acts on full-basis indices; prefactors use the sector
    dimension.
    """
    part = projector(params.dimension, f)
    out = []
    for sign, dec in sorted(ising_sector_decompositions(params).items(), reverse=True):
        out.append(
            IsingPoint(
                params.N,
                params.dimension,
                sign,
                dec.n,
                c_avg(dec, part, warn=False),
                sigma2(dec, part, warn=False),
                tuple(dec.warnings),
            )
        )
    return out


def random_unitary(D: int, gen: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    return unitary_group.rvs(D, random_state=gen)


@dataclass(frozen=True)
class OracleRow:
    kind: str
    index: int
    D: int
    c_avg_formula: float
    c_avg_oracle: float
    sigma2_formula: float
    sigma2_oracle: float

    @property
    def rel_err_c_avg(self) -> float:
        return abs(self.c_avg_oracle - self.c_avg_formula) / abs(self.c_avg_formula)

    @property
    def rel_err_sigma2(self) -> float:
        return abs(self.sigma2_oracle - self.sigma2_formula) / abs(self.sigma2_formula)


def oracle_comparison(
    kind: str,
    D: int = 64,
    count: int = 20,
    T: float = 10**6,
    samples: int = 10**6,
    master_seed: int = 0,
    f=Fraction(1, 2),
) -> List[OracleRow]:
    """Closed-form c_avg/sigma2 against long-time averages of c(t).

    ``kind`` is ``unitary`` (Haar unitaries, integer steps) or ``hermitian``
    (GOE Hamiltonians, quasi-random real times).
    """
    part = projector(D, f)
    rows = []
    for i in range(count):
        gen = rngmod.derive_substream(master_seed, i)
        if kind == "unitary":
            dec = SpectralDecomposition.from_unitary(random_unitary(D, gen))
        elif kind == "hermitian":
            dec = SpectralDecomposition.from_hermitian(rngmod.sample_goe(D, gen))
        else:
            raise ValueError(f"unknown oracle kind {kind!r}")
        mean, var = time_average_oracle(dec, part, T, samples)
        rows.append(
            OracleRow(kind, i, D, c_avg(dec, part, warn=False), mean, sigma2(dec, part, warn=False), var)
        )
    return rows


def ising_timeseries(params: IsingParams, times: Sequence[float], sector: int = 1, f=Fraction(1, 2)):
    dec = ising_sector_decompositions(params)[sector]
    return correlation_series(dec, projector(params.dimension, f), times)


def baker_timeseries(
    D: int,
    T: int,
    scheme: BernoulliScheme = BernoulliScheme(Fraction(1, 2)),
    phases: FourierPhases = FourierPhases(),
    f=Fraction(1, 2),
):
    dec = SpectralDecomposition.from_unitary(baker_unitary(D, scheme, phases))
    t = np.arange(0, T + 1, dtype=float)
    return t, correlation_series(dec, projector(D, f), t)


def rp_mean_timeseries(spec: rngmod.EnsembleSpec, times: Sequence[float], f=Fraction(1, 2)):
    """Ensemble-averaged c(t), summed in realization order."""
    times = np.asarray(times, dtype=float)
    part = projector(spec.dimension, f)
    acc = np.zeros(times.size)
    for i in range(spec.realizations):
        dec = SpectralDecomposition.from_hermitian(rngmod.sample(spec, i))
        acc += correlation_series(dec, part, times)
    return acc / spec.realizations
