from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.stats import unitary_group

from relaxometer import models, rng
from relaxometer.errors import NumericalConsistencyError, PartitionError
from relaxometer.relaxation import (
    DegeneracyWarning,
    PartitionSpec,
    SpectralDecomposition,
    c_avg,
    correlation_series,
    goe_prediction,
    gue_prediction,
    oracle_times,
    projector,
    sigma2,
    time_average_oracle,
)
from relaxometer.scaling import ensemble_average


def trace_correlation(Ut, part):
    """Tr(U P_A U^dag P_B) / (D f (1-f)) from dense matrices."""
    D = part.dimension
    PA = np.diag(part.mask().astype(float))
    PB = np.eye(D) - PA
    f = part.f
    return np.trace(Ut @ PA @ Ut.conj().T @ PB).real / (D * f * (1 - f))


def test_projector_definition():
    assert projector(8, Fraction(1, 2)).indices_A == (0, 1, 2, 3)
    assert projector(6, Fraction(1, 3)).indices_A == (0, 1)
    with pytest.raises(PartitionError):
        projector(8, Fraction(3, 16))


def test_partition_validation():
    with pytest.raises(PartitionError):
        PartitionSpec(4, (0, 0))
    with pytest.raises(PartitionError):
        PartitionSpec(4, ())
    with pytest.raises(PartitionError):
        PartitionSpec(4, (5,))
    p = PartitionSpec(5, (1, 3))
    assert p.indices_B == (0, 2, 4) and p.complement().indices_A == (0, 2, 4)


@settings(max_examples=15, deadline=None)
@given(D=st.integers(2, 12), seed=st.integers(0, 2**32 - 2), t=st.floats(0, 50))
def test_series_matches_dense_hamiltonian(D, seed, t):
    H = rng.sample_gue(D, np.random.default_rng(seed))
    part = PartitionSpec(D, tuple(range(1 + seed % (D - 1))))
    dec = SpectralDecomposition.from_hermitian(H)
    c = correlation_series(dec, part, [t])[0]
    assert c == pytest.approx(trace_correlation(expm(-1j * H * t), part), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(D=st.integers(2, 12), seed=st.integers(0, 2**32 - 2), t=st.integers(0, 40))
def test_series_matches_dense_unitary(D, seed, t):
    U = unitary_group.rvs(D, random_state=seed)
    part = projector(D, Fraction(1, D))
    dec = SpectralDecomposition.from_unitary(U)
    c = correlation_series(dec, part, [t])[0]
    assert c == pytest.approx(trace_correlation(np.linalg.matrix_power(U, t), part), abs=1e-9)


def test_fast_path_matches_direct_evaluation():
    D = 16
    dec = SpectralDecomposition.from_unitary(unitary_group.rvs(D, random_state=1))
    part = projector(D, 0.5)
    t = np.arange(0, 70000, dtype=float)
    long = correlation_series(dec, part, t)
    direct = correlation_series(dec, part, t[-5:])
    assert np.abs(long[-5:] - direct).max() < 1e-9


def test_c_zero_and_identity():
    D = 8
    dec = SpectralDecomposition.from_hermitian(rng.sample_goe(D, np.random.default_rng(0)))
    assert abs(correlation_series(dec, projector(D, 0.5), [0.0])[0]) < 1e-12
    ident = SpectralDecomposition("unitary", np.zeros(D), np.eye(D))
    c = correlation_series(ident, projector(D, 0.5), np.arange(10))
    assert np.all(c == 0)


def test_unitary_requires_integer_times():
    dec = SpectralDecomposition.from_unitary(np.eye(4))
    with pytest.raises(ValueError):
        correlation_series(dec, projector(4, 0.5), [0.5])


def test_from_unitary_rejects_non_unitary():
    with pytest.raises(NumericalConsistencyError):
        SpectralDecomposition.from_unitary(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_basis_eigenvectors_give_zero():
    dec = SpectralDecomposition("hermitian", np.arange(6.0), np.eye(6))
    part = projector(6, Fraction(1, 3))
    assert c_avg(dec, part) == 0
    assert sigma2(dec, part, warn=False) == 0


def test_two_level_maximal_spread():
    V = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    dec = SpectralDecomposition("hermitian", [0.0, 1.0], V)
    assert c_avg(dec, projector(2, 0.5)) == pytest.approx(1.0, abs=1e-15)


def test_degeneracy_warning():
    dec = SpectralDecomposition("hermitian", [0.0, 0.0, 1.0], np.eye(3))
    with pytest.warns(DegeneracyWarning):
        c_avg(dec, projector(3, Fraction(1, 3)))
    dec = SpectralDecomposition("hermitian", [0.0, 1.0, 2.0], np.eye(3))
    with pytest.warns(DegeneracyWarning):
        sigma2(dec, projector(3, Fraction(1, 3)))
    assert "degenerate-gaps" in dec.warnings


@settings(max_examples=20, deadline=None)
@given(D=st.integers(3, 24), seed=st.integers(0, 2**32 - 2))
def test_partition_exchange_symmetry(D, seed):
    dec = SpectralDecomposition.from_hermitian(rng.sample_gue(D, np.random.default_rng(seed)))
    part = PartitionSpec(D, tuple(range(1, D, 2)))
    comp = part.complement()
    assert c_avg(dec, part) == pytest.approx(c_avg(dec, comp), rel=1e-10)
    assert sigma2(dec, part, warn=False) == pytest.approx(sigma2(dec, comp, warn=False), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(D=st.integers(3, 24), seed=st.integers(0, 2**32 - 2))
def test_bounds(D, seed):
    dec = SpectralDecomposition.from_hermitian(rng.sample_goe(D, np.random.default_rng(seed)))
    part = projector(D, Fraction(1, D))
    ca = c_avg(dec, part)
    assert 0 <= ca <= 1 / (4 * part.f * (1 - part.f)) + 1e-12
    assert sigma2(dec, part, warn=False) >= 0


def test_sector_decomposition_uses_sector_dimension():
    # Ising N=3: sector vectors live in the full 8-dim basis
    H = models.ising_hamiltonian(models.IsingParams(3, *models.BCH))
    plus, minus = models.symmetry_sectors(H, models.reflection_operator(3))
    dec = SpectralDecomposition.from_hermitian(plus.block, basis=plus.basis)
    assert (dec.n, dec.ambient_dimension) == (6, 8)
    part = projector(8, 0.5)
    w = np.sum(np.abs(dec.vectors[:4]) ** 2, axis=0)
    assert c_avg(dec, part) == pytest.approx(np.sum(w * (1 - w)) / (6 * 0.25), rel=1e-12)


def test_oracle_baker_mean():
    D = 64
    dec = SpectralDecomposition.from_unitary(models.baker_unitary(D))
    part = projector(D, 0.5)
    mean, _ = time_average_oracle(dec, part, 10**5, 10**5)
    assert mean == pytest.approx(c_avg(dec, part, warn=False), abs=1e-2)


def test_oracle_goe_variance():
    D = 64
    dec = SpectralDecomposition.from_hermitian(rng.sample_goe(D, rng.derive_substream(2, 0)))
    part = projector(D, 0.5)
    _, var = time_average_oracle(dec, part, 10**4, 10**4)
    assert var == pytest.approx(sigma2(dec, part, warn=False), rel=0.1)


def test_oracle_haar_unitary_variance():
    D = 64
    dec = SpectralDecomposition.from_unitary(unitary_group.rvs(D, random_state=4))
    part = projector(D, 0.5)
    mean, var = time_average_oracle(dec, part, 10**6, 10**6)
    assert var == pytest.approx(sigma2(dec, part, warn=False), rel=1e-2)
    assert mean == pytest.approx(c_avg(dec, part, warn=False), rel=1e-2)


def test_oracle_times():
    assert np.array_equal(oracle_times("unitary", 5, 10), [1, 2, 3, 4, 5])
    t = oracle_times("hermitian", 10.0, 100)
    assert t.size == 100 and t.min() >= 0 and t.max() <= 10


def test_closed_forms():
    assert goe_prediction(2)[0] == 0.5
    assert 1 - goe_prediction(4096)[0] == pytest.approx(2 / 4096, rel=1e-3)
    assert gue_prediction(128) == (128 / 129, 2 / 128**2)
    with pytest.raises(ValueError):
        gue_prediction(1)


def test_goe_d128_cavg():
    res = ensemble_average(rng.EnsembleSpec("GOE", 128, 256, 1), 0.5)
    assert abs(res.mean["c_avg"] - 128 / 130) < 3 * res.stderr["c_avg"]


def test_gue_d128_sigma2():
    res = ensemble_average(rng.EnsembleSpec("GUE", 128, 256, 1), 0.5)
    assert res.mean["sigma2"] == pytest.approx(2 / 128**2, rel=0.05)
