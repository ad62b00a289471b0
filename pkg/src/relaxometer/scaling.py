"""Ensemble averaging, power-law fits, crossing detection, data collapse
and the unit-sphere moment checks.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng as rngmod
from .errors import DomainError
from .localization import eigenstate_ipr
from .relaxation import SpectralDecomposition, c_avg, projector, sigma2

log = logging.getLogger(__name__)

__all__ = [
    "FluctuationResult",
    "ensemble_average",
    "ScalingFit",
    "power_law_fit",
    "SweepTable",
    "rp_sweep",
    "cell_seed",
    "Crossing",
    "crossing_detect",
    "Collapse",
    "data_collapse",
    "beta_moment",
    "sphere_moment_check",
    "gue_cavg_identity",
    "default_threads",
]

OBSERVABLES = ("c_avg", "sigma2", "ipr")


def default_threads() -> int:
    import os

    env = os.environ.get("RELAXOMETER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class FluctuationResult:
    """Per-realization observables and their ensemble statistics.

    ``stderr`` entries are ``None`` for a single realization.
    """

    spec: rngmod.EnsembleSpec
    f: float
    per_realization: Dict[str, np.ndarray]
    mean: Dict[str, float]
    variance: Dict[str, Optional[float]]
    stderr: Dict[str, Optional[float]]
    warnings: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def c_avg(self) -> float:
        return self.mean["c_avg"]

    @property
    def sigma2(self) -> float:
        return self.mean["sigma2"]


def _one_realization(spec, index, f, observables):
    H = rngmod.sample(spec, index)
    decomp = SpectralDecomposition.from_hermitian(H)
    part = projector(spec.dimension, f)
    out = {}
    if "c_avg" in observables:
        out["c_avg"] = c_avg(decomp, part, warn=False)
    if "sigma2" in observables:
        out["sigma2"] = sigma2(decomp, part, warn=False)
    if "ipr" in observables:
        out["ipr"] = eigenstate_ipr(decomp.vectors).mean
    return out, list(decomp.warnings)


def ensemble_average(
    spec: rngmod.EnsembleSpec,
    f=0.5,
    observables: Sequence[str] = ("c_avg", "sigma2"),
    threads: Optional[int] = None,
) -> FluctuationResult:
    """Sample, diagonalize and reduce ``spec.realizations`` matrices.

    Realizations are seed-addressed, so the thread count does not change the
    result; reduction runs in realization-index order.
    """
    for ob in observables:
        if ob not in OBSERVABLES:
            raise ValueError(f"unknown observable {ob!r}")
    projector(spec.dimension, f)  # validate early
    R = spec.realizations
    threads = threads or default_threads()
    work = lambda i: _one_realization(spec, i, f, observables)
    if threads > 1 and R > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(R)))
    else:
        results = [work(i) for i in range(R)]
    per = {ob: np.array([r[0][ob] for r in results]) for ob in observables}
    mean, var, se = {}, {}, {}
    for ob, vals in per.items():
        mean[ob] = float(np.mean(vals))
        if R > 1:
            var[ob] = float(np.var(vals, ddof=1))
            se[ob] = math.sqrt(var[ob] / R)
        else:
            var[ob] = se[ob] = None
    warns = [(i, w) for i, r in enumerate(results) for w in r[1]]
    return FluctuationResult(spec, float(f), per, mean, var, se, warns)


@dataclass(frozen=True)
class ScalingFit:
    """``value = a D^-b`` (plain-power) or ``value = 1 - a D^-b``."""

    mode: str
    amplitude: float
    exponent: float
    D_min: float
    residual: float
    sizes: Tuple[float, ...]
    stderr_amplitude: float = float("nan")
    stderr_exponent: float = float("nan")
    excluded: Tuple[float, ...] = ()

    def predict(self, D):
        core = self.amplitude * np.asarray(D, dtype=float) ** (-self.exponent)
        return 1 - core if self.mode == "deviation-from-unity" else core


def power_law_fit(
    points: Sequence[Tuple[float, float]],
    mode: str = "plain-power",
    D_min: float = 200,
    stderrs: Optional[Sequence[float]] = None,
) -> ScalingFit:
    """Least squares on logs over the points with ``D > D_min``.

    With ``stderrs`` the fit is weighted by the propagated log-errors.
    Points with value >= 1 in deviation mode are dropped with a warning.
    """
    if mode not in ("plain-power", "deviation-from-unity"):
        raise ValueError(f"unknown fit mode {mode!r}")
    D = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    se = None if stderrs is None else np.asarray(stderrs, dtype=float)
    keep = D > D_min
    if mode == "deviation-from-unity":
        bad = keep & (y >= 1)
        if bad.any():
            log.warning("dropping %d point(s) with value >= 1 from deviation fit", bad.sum())
        excluded = tuple(D[bad])
        keep &= y < 1
        target = 1 - y
    else:
        bad = keep & (y <= 0)
        excluded = tuple(D[bad])
        keep &= y > 0
        target = y
    if keep.sum() < 3:
        raise ValueError(f"need at least 3 usable points above D_min={D_min}, got {keep.sum()}")
    x = np.log(D[keep])
    z = np.log(target[keep])
    w = None if se is None else target[keep] / np.maximum(se[keep], 1e-300)  # 1/sigma of log value
    coef = np.polyfit(x, z, 1, w=w)
    resid = z - np.polyval(coef, x)
    a = math.exp(coef[1])
    se_a = se_b = float("nan")
    # covariance needs more points than parameters plus one
    if x.size > 3:
        _, cov = np.polyfit(x, z, 1, w=w, cov="unscaled" if w is not None else True)
        se_b = math.sqrt(cov[0, 0])
        se_a = a * math.sqrt(cov[1, 1])
    return ScalingFit(
        mode, a, float(-coef[0]), float(D_min), float(np.sum(resid**2)), tuple(D[keep]), se_a, se_b, excluded
    )


@dataclass
class SweepTable:
    """Ensemble means over a (size, gamma) grid.

    ``values[obs]`` and ``errors[obs]`` have shape ``(len(sizes), len(gammas))``.
    """

    kind: str
    sizes: np.ndarray
    gammas: np.ndarray
    values: Dict[str, np.ndarray]
    errors: Dict[str, np.ndarray]
    realizations: np.ndarray
    seeds: np.ndarray
    f: float = 0.5

    def curve(self, obs: str, i: int) -> np.ndarray:
        return self.values[obs][i]


def cell_seed(master_seed: int, size_index: int, gamma_index: int) -> int:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(0xCE11, size_index, gamma_index))
    return int(ss.generate_state(1, np.uint64)[0])


def rp_sweep(
    kind: str,
    sizes: Sequence[int],
    gammas: Sequence[float],
    realizations: Sequence[int],
    master_seed: int = 0,
    f=0.5,
    observables: Sequence[str] = ("c_avg", "sigma2"),
    threads: Optional[int] = None,
) -> SweepTable:
    if len(sizes) != len(realizations):
        raise ValueError("sizes and realizations must have equal length")
    S, G = len(sizes), len(gammas)
    vals = {ob: np.full((S, G), np.nan) for ob in observables}
    errs = {ob: np.full((S, G), np.nan) for ob in observables}
    seeds = np.zeros((S, G), dtype=np.uint64)
    for i, (D, R) in enumerate(zip(sizes, realizations)):
        for j, g in enumerate(gammas):
            seed = cell_seed(master_seed, i, j)
            seeds[i, j] = seed
            spec = rngmod.EnsembleSpec(kind, int(D), int(R), seed, float(g))
            res = ensemble_average(spec, f, observables, threads)
            for ob in observables:
                vals[ob][i, j] = res.mean[ob]
                errs[ob][i, j] = res.stderr[ob] if res.stderr[ob] is not None else np.nan
            log.info("%s D=%d gamma=%g c_avg=%.6f", kind, D, g, res.mean.get("c_avg", np.nan))
    return SweepTable(
        str(rngmod.EnsembleKind(kind).value),
        np.asarray(sizes),
        np.asarray(gammas, dtype=float),
        vals,
        errs,
        np.asarray(realizations),
        seeds,
        float(f),
    )


@dataclass(frozen=True)
class Crossing:
    """Pairwise crossings; ``estimate`` is None when no curves intersect."""

    pairs: Tuple[Tuple[int, int, float], ...]
    estimate: Optional[float]
    bracket: Optional[Tuple[float, float]]

    @property
    def found(self) -> bool:
        return self.estimate is not None


def _first_downcrossing(x, d):
    # larger size above the smaller on the ergodic side, below on the localized side
    for k in range(len(x) - 1):
        if d[k] == 0:
            return float(x[k])
        if d[k] > 0 and d[k + 1] < 0:
            return float(x[k] + d[k] * (x[k + 1] - x[k]) / (d[k] - d[k + 1]))
    for k in range(len(x) - 1):
        if d[k] < 0 < d[k + 1]:
            return float(x[k] + d[k] * (x[k + 1] - x[k]) / (d[k] - d[k + 1]))
    return None


def crossing_detect(table: SweepTable, obs: str = "c_avg") -> Crossing:
    """Intersections of the curves of adjacent sizes, by linear interpolation."""
    if len(table.sizes) < 2:
        raise ValueError("need at least two sizes")
    order = np.argsort(table.sizes)
    x = table.gammas
    pairs = []
    for a, b in zip(order[:-1], order[1:]):
        d = table.values[obs][b] - table.values[obs][a]
        g = _first_downcrossing(x, d)
        if g is not None:
            pairs.append((int(table.sizes[a]), int(table.sizes[b]), g))
    if not pairs:
        return Crossing((), None, None)
    gs = [p[2] for p in pairs]
    return Crossing(tuple(pairs), float(np.mean(gs)), (float(min(gs)), float(max(gs))))


@dataclass(frozen=True)
class Collapse:
    x: np.ndarray
    y: np.ndarray
    size: np.ndarray
    gamma: np.ndarray
    quality: float  # NaN when undefined


def data_collapse(table: SweepTable, gamma0: float = 2.0, obs: str = "c_avg") -> Collapse:
    """Rescale to ``x = (gamma - gamma0) ln D`` and score the collapse.

    The score is the mean squared distance between each point and the
    piecewise-linear master curve through the points of all other sizes,
    over points inside that curve's x-range.
    """
    S, G = table.values[obs].shape
    xs, ys, Ds, gs = [], [], [], []
    for i in range(S):
        D = float(table.sizes[i])
        xs.append((table.gammas - gamma0) * np.log(D))
        ys.append(table.values[obs][i])
        Ds.append(np.full(G, D))
        gs.append(table.gammas)
    x, y = np.concatenate(xs), np.concatenate(ys)
    size, gamma = np.concatenate(Ds), np.concatenate(gs)
    if S < 2:
        return Collapse(x, y, size, gamma, float("nan"))
    sq = []
    for i in range(S):
        others = [k for k in range(S) if k != i]
        ox = np.concatenate([xs[k] for k in others])
        oy = np.concatenate([ys[k] for k in others])
        o = np.argsort(ox, kind="stable")
        ox, oy = ox[o], oy[o]
        inside = (xs[i] >= ox[0]) & (xs[i] <= ox[-1])
        if inside.any():
            sq.append((ys[i][inside] - np.interp(xs[i][inside], ox, oy)) ** 2)
    quality = float(np.mean(np.concatenate(sq))) if sq else float("nan")
    return Collapse(x, y, size, gamma, quality)


def beta_moment(p: float, q: float, k: int) -> float:
    """k-th moment ``B(p+k, q) / B(p, q)`` of a Beta(p, q) variable."""
    if p <= 0 or q <= 0:
        raise DomainError("Beta parameters must be positive")
    if k < 0 or int(k) != k:
        raise DomainError("moment order must be a non-negative integer")
    out = 1.0
    for j in range(int(k)):
        out *= (p + j) / (p + q + j)
    return out


def sphere_moment_check(D: int, field: str = "real", samples: int = 10**6, seed: int = 0, chunk: int = 1 << 16):
    """Monte-Carlo fourth moments of a uniform unit vector against Beta moments.

    Returns a list of rows with keys ``name, empirical, stderr, analytic``.
    The cross moment and the normalization identity use components 1 and 2.
    """
    if field not in ("real", "complex"):
        raise ValueError("field must be 'real' or 'complex'")
    gen = rngmod.derive_substream(seed, D)
    z4, z22, ident = [], [], []
    left = samples
    while left > 0:
        n = min(chunk, left)
        g = gen.normal(size=(n, D))
        if field == "complex":
            g = g + 1j * gen.normal(size=(n, D))
        p = np.abs(g) ** 2
        p /= p.sum(axis=1, keepdims=True)
        z4.append(p[:, 0] ** 2)
        z22.append(p[:, 0] * p[:, 1])
        left -= n
    z4, z22 = np.concatenate(z4), np.concatenate(z22)
    ident = D * z4 + D * (D - 1) * z22
    if field == "real":
        a4 = beta_moment(0.5, (D - 1) / 2, 2)
        a22 = 1 / (D * (D + 2))
    else:
        a4 = beta_moment(1.0, D - 1.0, 2)
        a22 = 1 / (D * (D + 1))
    rows = []
    for name, v, ref in (("E|z1|^4", z4, a4), ("E|z1|^2|z2|^2", z22, a22), ("normalization", ident, 1.0)):
        rows.append(
            dict(name=name, empirical=float(v.mean()), stderr=float(v.std(ddof=1) / math.sqrt(v.size)), analytic=ref)
        )
    return rows


def gue_cavg_identity(D: int, f) -> Fraction:
    """Ensemble c_avg from the complex sphere moments, in exact arithmetic.

    Summing ``E|z_i|^2 |z_j|^2 = 1/(D(D+1))`` over the ``D`` eigenvectors and
    the ``fD x (1-f)D`` index pairs gives ``D / (D+1)``.
    """
    f = Fraction(f)
    DA, DB = f * D, (1 - f) * D
    return D * DA * DB * Fraction(1, D * (D + 1)) / (D * f * (1 - f))
