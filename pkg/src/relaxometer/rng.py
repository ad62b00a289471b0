"""Seed-addressed sampling of GOE, GUE and Rosenzweig-Porter matrices.

Every realization draws from its own stream, keyed by ``(master_seed, index)``
through :class:`numpy.random.SeedSequence`. The mapping is pure, so
realizations can be generated in any order or in parallel and still come out
bit-identical.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InvalidDimensionError

__all__ = [
    "EnsembleKind",
    "EnsembleSpec",
    "derive_substream",
    "sample_goe",
    "sample_gue",
    "sample_rp",
    "sample",
]


class EnsembleKind(str, enum.Enum):
    GOE = "GOE"
    GUE = "GUE"
    RP_GOE = "RP-GOE"
    RP_GUE = "RP-GUE"

    @property
    def is_rp(self) -> bool:
        return self in (EnsembleKind.RP_GOE, EnsembleKind.RP_GUE)

    @property
    def is_complex(self) -> bool:
        return self in (EnsembleKind.GUE, EnsembleKind.RP_GUE)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    dimension: int
    realizations: int = 1
    master_seed: int = 0
    gamma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if self.dimension < 2:
            raise InvalidDimensionError(f"dimension must be >= 2, got {self.dimension}")
        if self.realizations < 1:
            raise ConfigurationError("realizations must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must fit in 64 unsigned bits")
        if self.kind.is_rp:
            if self.gamma is None:
                raise ConfigurationError(f"{self.kind.value} requires gamma")
            if self.gamma < 0:
                raise ConfigurationError("gamma must be >= 0")
        elif self.gamma is not None:
            raise ConfigurationError(f"gamma is only meaningful for RP kinds, not {self.kind.value}")


def derive_substream(master_seed: int, realization_index: int) -> np.random.Generator:
    """Return the generator for one realization.

    The key ``(master_seed, realization_index)`` is hashed by SeedSequence;
    distinct indices give independent PCG64 streams.
    """
    if realization_index < 0:
        raise ValueError("realization_index must be >= 0")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(realization_index),))
    return np.random.Generator(np.random.PCG64(ss))


def _check_dim(D):
    if int(D) != D or D < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {D}")


def sample_goe(D: int, rng: np.random.Generator) -> np.ndarray:
    """Real symmetric matrix with N(0, 1) diagonal and N(0, 1/2) off-diagonal.

    Symmetry is exact: the lower triangle is a copy of the upper one.
    """
    _check_dim(D)
    M = rng.normal(scale=np.sqrt(0.5), size=(D, D))
    M = np.triu(M, 1)
    M = M + M.T
    M[np.diag_indices(D)] = rng.normal(size=D)
    return M


def sample_gue(D: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix with real N(0, 1) diagonal; real and imaginary parts
    of each off-diagonal entry are N(0, 1/2).

    These variances make the density proportional to exp(-Tr M^2 / 2), so
    the ensemble is unitarily invariant.
    """
    _check_dim(D)
    re = rng.normal(scale=np.sqrt(0.5), size=(D, D))
    im = rng.normal(scale=np.sqrt(0.5), size=(D, D))
    M = np.triu(re + 1j * im, 1)
    M = M + M.conj().T
    M[np.diag_indices(D)] = rng.normal(size=D)
    return M


def sample_rp(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Rosenzweig-Porter matrix ``A + D**(-gamma/2) * B``.

    ``A`` is diagonal with iid standard normal entries, ``B`` is GOE or GUE
    depending on ``spec.kind``.
    """
    if not spec.kind.is_rp:
        raise ConfigurationError(f"sample_rp needs an RP kind, got {spec.kind.value}")
    if spec.gamma is None:
        raise ConfigurationError("gamma missing")
    D = spec.dimension
    diag = rng.normal(size=D)
    B = sample_gue(D, rng) if spec.kind.is_complex else sample_goe(D, rng)
    H = B * D ** (-spec.gamma / 2)
    H[np.diag_indices(D)] += diag
    return H


def sample(spec: EnsembleSpec, realization_index: int) -> np.ndarray:
    """Matrix for realization ``realization_index`` of ``spec``."""
    rng = derive_substream(spec.master_seed, realization_index)
    if spec.kind is EnsembleKind.GOE:
        return sample_goe(spec.dimension, rng)
    if spec.kind is EnsembleKind.GUE:
        return sample_gue(spec.dimension, rng)
    return sample_rp(spec, rng)
