"""Acceptance criteria 1-15.

Each test records one PASS/FAIL line through the ``report`` fixture; the
lines are repeated in the terminal summary. Expensive sweeps are computed
once per module.
"""
import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from relaxometer import experiments as ex
from relaxometer import models, rng
from relaxometer.cli import main
from relaxometer.localization import basis_state_ipr, cavg_ipr_identity_check, eigenstate_ipr
from relaxometer.models import BernoulliScheme, IsingParams
from relaxometer.relaxation import (
    SpectralDecomposition,
    c_avg,
    correlation_series,
    goe_prediction,
    gue_prediction,
    projector,
    sigma2,
)
from relaxometer.rng import EnsembleSpec
from relaxometer.scaling import (
    beta_moment,
    crossing_detect,
    data_collapse,
    ensemble_average,
    gue_cavg_identity,
    power_law_fit,
    rp_sweep,
    sphere_moment_check,
)
from relaxometer.spectral import ks_to_wigner

pytestmark = pytest.mark.slow

RMT_GRID = [(128, 256), (256, 128), (512, 64)]
BAKER_SIZES = [216, 252, 300, 360, 432, 516, 612, 720, 864, 1020, 1212, 1440, 1716, 2040]
BAKER_SCHEMES = ["1/2", "2/3", "1/4", "1/3"]
ISING_SITES = range(8, 13)
RP_SIZES, RP_REALIZATIONS = [128, 256, 512], [128, 64, 32]
RP_GAMMAS = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 3.0, 3.5, 4.0]


def _within(x, target, tol):
    return abs(x - target) <= tol


# ------------------------------------------------------------------ RMT


def _rmt_check(kind, prediction, seed):
    rows, ok = [], True
    for D, R in RMT_GRID:
        res = ensemble_average(EnsembleSpec(kind, D, R, seed), Fraction(1, 2))
        ca_ref, s2_ref = prediction(D)
        ok_c = abs(res.mean["c_avg"] - ca_ref) < 3 * res.stderr["c_avg"]
        ok_s = abs(res.mean["sigma2"] / s2_ref - 1) < 0.10
        ok &= ok_c and ok_s
        rows.append(
            f"D={D}: c_avg {res.mean['c_avg']:.6f} vs {ca_ref:.6f} ({(res.mean['c_avg'] - ca_ref) / res.stderr['c_avg']:+.2f} SE),"
            f" sigma2/ref {res.mean['sigma2'] / s2_ref:.4f}"
        )
    return ok, "; ".join(rows)


def test_criterion_01_goe_closed_form(report):
    ok, detail = _rmt_check("GOE", goe_prediction, 101)
    assert report(1, ok, detail), detail


def test_criterion_02_gue_closed_form(report):
    ok, detail = _rmt_check("GUE", gue_prediction, 102)
    assert report(2, ok, detail), detail


def test_criterion_03_f_independence(report):
    D, R = 256, 128
    res = {f: ensemble_average(EnsembleSpec("GUE", D, R, 103 + k), f) for k, f in
           enumerate((Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)))}
    ok, parts = True, []
    for f1, f2 in itertools.combinations(res, 2):
        diff = res[f1].mean["c_avg"] - res[f2].mean["c_avg"]
        se = np.hypot(res[f1].stderr["c_avg"], res[f2].stderr["c_avg"])
        ok &= abs(diff) < 3 * se
        parts.append(f"f={f1} vs {f2}: {diff / se:+.2f} SE")
    detail = "; ".join(parts)
    assert report(3, ok, detail), detail


# ------------------------------------------------------------------ oracle


def test_criterion_04_oracle_equivalence(report):
    worst = {}
    for kind in ("unitary", "hermitian"):
        rows = ex.oracle_comparison(kind, D=64, count=20, T=10**6, samples=10**6, master_seed=104)
        worst[kind] = (max(r.rel_err_c_avg for r in rows), max(r.rel_err_sigma2 for r in rows))
    ok = all(max(v) < 1e-2 for v in worst.values())
    detail = ", ".join(f"{k}: max rel err c_avg {c:.2e}, sigma2 {s:.2e}" for k, (c, s) in worst.items())
    assert report(4, ok, detail), detail


# ------------------------------------------------------------------ Baker


def test_criterion_05_baker_spacings(report):
    sp = ex.baker_sector_spacings(2000)
    ks = {s: ks_to_wigner(v) for s, v in sp.items()}
    ok = set(ks) == {1, -1} and all(d < 0.05 for d in ks.values())
    detail = ", ".join(f"sector {s:+d} (n={sp[s].size}): KS {d:.4f}" for s, d in sorted(ks.items(), reverse=True))
    assert report(5, ok, detail), detail


@pytest.fixture(scope="module")
def baker_sweep():
    return {p: [ex.baker_point(D, BernoulliScheme.parse(p)) for D in BAKER_SIZES] for p in BAKER_SCHEMES}


def test_criterion_06_baker_variance(report, baker_sweep):
    fits = {p: power_law_fit([(b.D, b.sigma2) for b in pts], "plain-power", D_min=200) for p, pts in baker_sweep.items()}
    ok = all(_within(f.exponent, 1.97, 0.15) for f in fits.values())
    ok &= all(fits["1/2"].amplitude > f.amplitude for p, f in fits.items() if p != "1/2")
    detail = ", ".join(f"{BernoulliScheme.parse(p)}: a={f.amplitude:.3f} b={f.exponent:.3f}" for p, f in fits.items())
    assert report(6, ok, detail), detail


def test_criterion_07_baker_cavg(report, baker_sweep):
    f23 = power_law_fit([(b.D, b.c_avg) for b in baker_sweep["2/3"]], "deviation-from-unity", D_min=200)
    f13 = power_law_fit([(b.D, b.c_avg) for b in baker_sweep["1/3"]], "deviation-from-unity", D_min=200)
    ok = _within(f23.amplitude, 1.07, 0.2) and _within(f23.exponent, 0.78, 0.1) and _within(f13.exponent, 1.02, 0.1)
    detail = (
        f"(2/3,1/3): a={f23.amplitude:.3f} b={f23.exponent:.3f} (target 1.07, 0.78); "
        f"(1/3,2/3): a={f13.amplitude:.3f} b={f13.exponent:.3f} (target b 1.02)"
    )
    assert report(7, ok, detail), detail


# ------------------------------------------------------------------ Ising


def _ising_fits(fields):
    pts = {1: [], -1: []}
    for N in ISING_SITES:
        for p in ex.ising_points(IsingParams(N, *fields)):
            pts[p.sector].append(p)
    out = {}
    for s, ps in pts.items():
        out[s] = (
            power_law_fit([(p.D, p.c_avg) for p in ps], "deviation-from-unity", D_min=200),
            power_law_fit([(p.D, p.sigma2) for p in ps], "plain-power", D_min=200),
        )
    return out


def _fmt_fit(name, fit):
    return f"{name}: a={fit.amplitude:.3f} b={fit.exponent:.3f}"


def test_criterion_08_ising_bch(report):
    fits = _ising_fits(models.BCH)
    ok = all(_within(c.exponent, 0.7, 0.1) and _within(c.amplitude, 1.0, 0.3) for c, _ in fits.values())
    below_rmt = all(c.exponent < 1 for c, _ in fits.values())
    detail = ", ".join(_fmt_fit(f"c_avg sector {s:+d}", c) for s, (c, _) in fits.items())
    detail += f"; exponent below 1 in both sectors: {below_rmt}"
    assert report(8, ok and below_rmt, detail), detail


def test_criterion_09_ising_integrable(report):
    c, v = _ising_fits(models.INTEGRABLE)[1]
    ok = c.exponent < 0.2 and _within(v.exponent, 1.54, 0.25) and _within(v.amplitude, 0.46, 0.2)
    detail = f"c_avg b_+={c.exponent:.3f} (< 0.2); sigma2 kappa_+={v.amplitude:.3f} delta_+={v.exponent:.3f} (target 0.46, 1.54)"
    assert report(9, ok, detail), detail


def test_criterion_10_ising_kim_huse(report):
    fits = _ising_fits(models.KIM_HUSE)
    target = {1: 0.5, -1: 0.4}
    ok = all(_within(fits[s][0].exponent, b, 0.15) for s, b in target.items())
    detail = ", ".join(_fmt_fit(f"sector {s:+d}", fits[s][0]) + f" (target b {target[s]})" for s in (1, -1))
    assert report(10, ok, detail), detail


# ------------------------------------------------------------------ Rosenzweig-Porter


@pytest.fixture(scope="module")
def rp_tables():
    return {
        kind: rp_sweep(kind, RP_SIZES, RP_GAMMAS, RP_REALIZATIONS, master_seed=111)
        for kind in ("RP-GOE", "RP-GUE")
    }


def _segment_shape(table):
    """Flat below gamma=1, rising on (1, 2), falling beyond 2 for the size-averaged D^2 sigma2."""
    g = table.gammas
    scaled = (table.sizes[:, None] ** 2 * table.values["sigma2"]).mean(axis=0)
    flat = scaled[g < 1]
    rise = scaled[(g > 1) & (g < 2)]
    fall = scaled[g > 2]
    ok_flat = np.ptp(flat) / flat.mean() < 0.25
    ok_rise = np.all(np.diff(rise) > 0)
    ok_fall = np.all(np.diff(fall) < 0)
    return ok_flat and ok_rise and ok_fall, (
        f"D^2 sigma2: flat range {np.ptp(flat) / flat.mean():.2f}, rising {ok_rise}, falling {ok_fall}"
    )


def test_criterion_11_rp_goe(report, rp_tables):
    tab = rp_tables["RP-GOE"]
    cr = crossing_detect(tab)
    ok = cr.found and 1.8 <= cr.estimate <= 2.2
    parts = [f"crossing {cr.estimate:.3f}" if cr.found else "no crossing"]
    for g, b, tol in ((0.5, 1.08, 0.15), (1.5, 0.27, 0.1), (3.5, 0.0, 0.05)):
        j = RP_GAMMAS.index(g)
        fit = power_law_fit(list(zip(tab.sizes, tab.values["c_avg"][:, j])), "deviation-from-unity", D_min=0)
        ok &= _within(fit.exponent, b, tol)
        parts.append(f"b({g})={fit.exponent:.3f}")
    shape_ok, shape = _segment_shape(tab)
    detail = ", ".join(parts) + "; " + shape
    assert report(11, ok and shape_ok, detail), detail


def test_criterion_12_rp_gue(report, rp_tables):
    cr = crossing_detect(rp_tables["RP-GUE"])
    ok = cr.found and 1.8 <= cr.estimate <= 2.2
    detail = f"crossing {cr.estimate:.3f}, pairs {[(a, b, round(g, 3)) for a, b, g in cr.pairs]}" if cr.found else "no crossing"
    assert report(12, ok, detail), detail


def test_criterion_13_collapse(report, rp_tables):
    ok, parts = True, []
    for kind, tab in rp_tables.items():
        q = {g0: data_collapse(tab, g0).quality for g0 in (1.5, 2.0, 2.5)}
        ok &= q[2.0] < q[1.5] and q[2.0] < q[2.5]
        parts.append(f"{kind}: " + " ".join(f"q({g0})={v:.2e}" for g0, v in q.items()))
    detail = "; ".join(parts)
    assert report(13, ok, detail), detail


# ------------------------------------------------------------------ moments


def test_criterion_14_moments(report):
    ok, worst = True, 0.0
    for field, D in itertools.product(("real", "complex"), (4, 8, 64)):
        for r in sphere_moment_check(D, field, 10**6, seed=114):
            z = abs(r["empirical"] - r["analytic"]) / max(r["stderr"], 1e-300)
            if r["name"] == "normalization":
                z = 0.0 if abs(r["empirical"] - 1) < 1e-12 else z
            worst = max(worst, z)
            ok &= z < 3
        a = beta_moment(0.5, (D - 1) / 2, 2) if field == "real" else beta_moment(1, D - 1, 2)
        ok &= abs(a - (3 / (D * (D + 2)) if field == "real" else 2 / (D * (D + 1)))) < 1e-15
    exact = all(
        gue_cavg_identity(D, f) == Fraction(D, D + 1)
        for D in (4, 8, 16, 64, 256)
        for f in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    )
    detail = f"largest deviation {worst:.2f} SE over 18 moment checks; GUE identity exact: {exact}"
    assert report(14, ok and exact, detail), detail


# ------------------------------------------------------------------ exact invariants


def _exact_invariants(tmp_path):
    checks = {}
    gen = np.random.default_rng(115)
    H = rng.sample_gue(16, gen)
    dec = SpectralDecomposition.from_hermitian(H)
    part = projector(16, Fraction(1, 2))
    checks["c(0)=0"] = abs(correlation_series(dec, part, [0.0])[0]) < 1e-12
    PA = np.diag(part.mask().astype(float))
    U = expm(-1j * 0.7 * H)
    direct = np.trace(U @ PA @ U.conj().T @ (np.eye(16) - PA)).real / 4
    checks["c(t) dense cross-check"] = abs(correlation_series(dec, part, [0.7])[0] - direct) < 1e-10
    basis = SpectralDecomposition("hermitian", np.arange(8.0), np.eye(8))
    checks["basis eigenvectors (0,0)"] = (
        c_avg(basis, projector(8, 0.5), warn=False) == 0 and sigma2(basis, projector(8, 0.5), warn=False) == 0
    )
    V2 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    checks["D=2 spread c_avg=1"] = abs(c_avg(SpectralDecomposition("hermitian", [0, 1], V2), projector(2, 0.5)) - 1) < 1e-15
    V = np.linalg.eigh(rng.sample_goe(64, gen))[1]
    ipr = eigenstate_ipr(V).values
    checks["IPR bounds"] = bool(np.all(ipr >= 1 / 64 - 1e-15) and np.all(ipr <= 1 + 1e-15))
    checks["IPR means agree"] = abs(eigenstate_ipr(V).mean - basis_state_ipr(V).mean) < 1e-15
    checks["f=1/D identity"] = all(cavg_ipr_identity_check(V, s)[2] < 1e-12 for s in range(64))
    checks["GOE/GUE exact symmetry"] = all(
        np.array_equal(M, M.conj().T) for M in (rng.sample_goe(32, gen), rng.sample_gue(32, gen))
    )
    B = models.baker_unitary(360, BernoulliScheme.parse("2/3"))
    checks["Baker unitarity"] = np.abs(B.conj().T @ B - np.eye(360)).max() < 1e-12
    Hi = models.ising_hamiltonian(IsingParams(8, *models.BCH))
    secs = models.symmetry_sectors(Hi, models.reflection_operator(8))
    pooled = np.sort(np.concatenate([np.linalg.eigvalsh(s.block) for s in secs]))
    checks["Ising block spectrum"] = np.abs(pooled - np.linalg.eigvalsh(Hi)).max() < 1e-10
    cfg = tmp_path / "rmt.json"
    cfg.write_text(json.dumps(dict(experiment="rmt", sizes=[16, 32], realizations=[6, 4], seed=15)))
    a, b = tmp_path / "a", tmp_path / "b"
    same = main(["run", str(cfg), "-o", str(a), "--threads", "1"]) == 0
    same &= main(["run", str(cfg), "-o", str(b), "--threads", "3"]) == 0
    files = json.loads((a / "manifest.json").read_text())["files"]
    same &= all((a / n).read_bytes() == (b / n).read_bytes() for n in files)
    same &= main(["verify", str(a), "--rerun", "4"]) == 0
    checks["bit-reproducible run"] = same
    return checks


def test_criterion_15_exact_invariants(report, tmp_path):
    checks = _exact_invariants(tmp_path)
    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks) - len(failed)}/{len(checks)} exact checks" + (f"; failed: {', '.join(failed)}" if failed else "")
    assert report(15, not failed, detail), detail
