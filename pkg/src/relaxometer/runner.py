"""Run configured experiments, persist CSV results with a seed manifest, and
turn stored results into plot-ready data files.

Every CSV has a header row, comma separators and LF line endings; floats
are written as the shortest decimal that round-trips to the same binary64.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
import time
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import experiments as ex
from . import rng as rngmod
from .config import ExperimentConfig
from .localization import fractal_dimension
from .models import BernoulliScheme, FourierPhases, IsingParams
from .relaxation import goe_prediction, gue_prediction
from .scaling import (
    crossing_detect,
    data_collapse,
    default_threads,
    ensemble_average,
    power_law_fit,
    rp_sweep,
    cell_seed,
    sphere_moment_check,
)
from .spectral import wigner_surmise_goe

log = logging.getLogger(__name__)

SCHEMAS = {
    "rmt": ["D", "c_avg_mean", "c_avg_se", "sigma2_mean", "sigma2_se", "realizations"],
    "rmt_fits": ["ensemble", "f", "observable", "amplitude", "exponent", "D_min"],
    "baker_scaling": ["scheme", "D", "c_avg", "sigma2", "parity_resolved"],
    "baker_fits": ["scheme", "observable", "amplitude", "exponent", "D_min", "points"],
    "baker_timeseries": ["t", "c_t"],
    "baker_spacing": ["sector", "s"],
    "ising_scaling": ["label", "h_x", "h_z", "N", "D", "sector", "sector_dimension", "c_avg", "sigma2"],
    "ising_fits": ["label", "sector", "observable", "amplitude", "exponent", "D_min", "points"],
    "ising_timeseries": ["label", "sector", "t", "c_t"],
    "rp_sweep": [
        "gamma", "D", "realizations", "seed",
        "c_avg_mean", "c_avg_se", "sigma2_mean", "sigma2_se", "ipr_mean",
    ],
    "rp_collapse": ["gamma", "D", "x", "c_avg_mean"],
    "rp_crossing": ["D1", "D2", "gamma_star"],
    "rp_fits": ["gamma", "observable", "amplitude", "exponent", "D_min", "points"],
    "rp_fractal": ["gamma", "f_d", "ci_low", "ci_high"],
    "rp_timeseries": ["gamma", "t", "c_t_mean"],
    "oracle": [
        "kind", "index", "D",
        "c_avg_formula", "c_avg_oracle", "sigma2_formula", "sigma2_oracle",
    ],
    "moments": ["field", "D", "quantity", "empirical", "stderr", "analytic"],
}


class MissingInputs(Exception):
    def __init__(self, missing):
        super().__init__("missing input files: " + ", ".join(missing))
        self.missing = list(missing)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    if v is None:
        return "nan"
    return str(v)


def write_csv(path: Path, schema: str, rows: Sequence[Sequence]) -> None:
    cols = SCHEMAS[schema]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            if len(r) != len(cols):
                raise ValueError(f"{schema}: row has {len(r)} fields, expected {len(cols)}")
            w.writerow([fmt(v) for v in r])


def read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _fsuffix(fr: Fraction) -> str:
    return "" if fr == Fraction(1, 2) else f"_f{fr.numerator}-{fr.denominator}"


def _rp_prefix(kind) -> str:
    return "rp_gue" if rngmod.EnsembleKind(kind).is_complex else "rp_goe"


class Run:
    """State for one experiment run: output directory, manifest, warnings."""

    def __init__(self, cfg: ExperimentConfig, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.files: Dict[str, str] = {}
        self.cells: List[dict] = []
        self.warnings: List[str] = []

    def emit(self, name: str, schema: str, rows) -> None:
        write_csv(self.out / name, schema, rows)
        self.files[name] = schema

    def manifest(self, wall: float) -> dict:
        return {
            "toolkit": "relaxometer",
            "version": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "experiment": self.cfg.kind,
            "config": self.cfg.raw,
            "threads": self.threads,
            "wall_clock_seconds": wall,
            "files": self.files,
            "cells": self.cells,
            "warnings": self.warnings,
        }


def _fit_or_none(points, mode, D_min):
    try:
        return power_law_fit(points, mode, D_min)
    except ValueError:
        return None


# ---------------------------------------------------------------- experiments


def rmt_cell_seed(master: int, ens_index: int, f_index: int, size_index: int) -> int:
    return cell_seed(master, size_index, 1000 * ens_index + f_index)


def _run_rmt(run: Run):
    p, cfg = run.cfg.params, run.cfg
    fits = []
    for ei, ens in enumerate(p["ensembles"]):
        for fi, fr in enumerate(p["fractions"]):
            rows = []
            name = f"rmt_{ens}{_fsuffix(fr)}.csv"
            for si, (D, R) in enumerate(zip(p["sizes"], p["realizations"])):
                seed = rmt_cell_seed(cfg.seed, ei, fi, si)
                res = ensemble_average(rngmod.EnsembleSpec(ens, D, R, seed), fr, ("c_avg", "sigma2"), run.threads)
                rows.append(_rmt_row(res))
                run.cells.append(
                    dict(file=name, row=si, ensemble=ens, f=fmt(fr), D=D, realizations=R, seed=seed)
                )
                run.warnings += [f"{ens} D={D} realization {i}: {w}" for i, w in res.warnings]
            run.emit(name, "rmt", rows)
            pts_c = [(r[0], r[1]) for r in rows]
            pts_s = [(r[0], r[3]) for r in rows]
            for obs, pts, mode in (("c_avg", pts_c, "deviation-from-unity"), ("sigma2", pts_s, "plain-power")):
                fit = _fit_or_none(pts, mode, 0)
                if fit:
                    fits.append((ens, fr, obs, fit.amplitude, fit.exponent, 0))
    if fits:
        run.emit("rmt_fits.csv", "rmt_fits", fits)


def _rmt_row(res):
    R = res.spec.realizations
    return (
        res.spec.dimension,
        res.mean["c_avg"],
        res.stderr["c_avg"],
        res.mean["sigma2"],
        res.stderr["sigma2"],
        R,
    )


def _run_baker(run: Run):
    p = run.cfg.params
    phases = FourierPhases(p["alpha"], p["beta"])
    D_min = p.get("D_min", 200)
    if p["sizes"]:
        rows, fits = [], []
        for scheme in p["schemes"]:
            pts = []
            for D in p["sizes"]:
                bp = ex.baker_point(D, scheme, phases, run.cfg.f)
                rows.append((scheme.left_fraction, D, bp.c_avg, bp.sigma2, bp.parity_resolved))
                pts.append(bp)
                run.warnings += [f"baker {scheme} D={D}: {w}" for w in bp.warnings]
            if not pts[0].parity_resolved:
                fit = _fit_or_none([(b.D, b.c_avg) for b in pts], "deviation-from-unity", D_min)
                if fit:
                    fits.append((scheme.left_fraction, "c_avg", fit.amplitude, fit.exponent, D_min, len(fit.sizes)))
            fit = _fit_or_none([(b.D, b.sigma2) for b in pts], "plain-power", D_min)
            if fit:
                fits.append((scheme.left_fraction, "sigma2", fit.amplitude, fit.exponent, D_min, len(fit.sizes)))
        run.emit("baker_scaling.csv", "baker_scaling", rows)
        if fits:
            run.emit("baker_fits.csv", "baker_fits", fits)
    if "timeseries" in p:
        ts = p["timeseries"]
        scheme = BernoulliScheme.parse(ts.get("scheme", "1/2"))
        t, c = ex.baker_timeseries(ts["D"], ts["T"], scheme, phases, run.cfg.f)
        run.emit("baker_timeseries.csv", "baker_timeseries", list(zip(t.astype(int), c)))
    if "spacing" in p:
        sp = ex.baker_sector_spacings(p["spacing"]["D"], phases)
        run.emit("baker_spacing.csv", "baker_spacing", [(sec, s) for sec in sorted(sp, reverse=True) for s in sp[sec]])


def _ising_fields(p):
    out = [(name, *ex.ISING_PRESETS[name]) for name in p["presets"]]
    out += [(fl["label"], float(fl["h_x"]), float(fl["h_z"])) for fl in p["fields"]]
    return out


def _run_ising(run: Run):
    p = run.cfg.params
    D_min = p.get("D_min", 200)
    fields = _ising_fields(p)
    if p["sites"]:
        rows, fits = [], []
        for label, hx, hz in fields:
            per_sector: Dict[int, list] = {}
            for N in p["sites"]:
                for pt in ex.ising_points(IsingParams(N, hx, hz), run.cfg.f):
                    rows.append((label, hx, hz, N, pt.D, pt.sector, pt.sector_dimension, pt.c_avg, pt.sigma2))
                    per_sector.setdefault(pt.sector, []).append(pt)
                    run.warnings += [f"ising {label} N={N} sector {pt.sector}: {w}" for w in pt.warnings]
            for sector, pts in per_sector.items():
                for obs, mode in (("c_avg", "deviation-from-unity"), ("sigma2", "plain-power")):
                    fit = _fit_or_none([(q.D, getattr(q, obs)) for q in pts], mode, D_min)
                    if fit:
                        fits.append((label, sector, obs, fit.amplitude, fit.exponent, D_min, len(fit.sizes)))
        run.emit("ising_scaling.csv", "ising_scaling", rows)
        if fits:
            run.emit("ising_fits.csv", "ising_fits", fits)
    if "timeseries" in p:
        ts = p["timeseries"]
        times = np.linspace(0, float(ts["T"]), int(ts.get("points", 1001)))
        sector = int(ts.get("sector", 1))
        rows = []
        for label, hx, hz in fields:
            c = ex.ising_timeseries(IsingParams(int(ts["N"]), hx, hz), times, sector, run.cfg.f)
            rows += [(label, sector, t, v) for t, v in zip(times, c)]
        run.emit("ising_timeseries.csv", "ising_timeseries", rows)


def _run_rp(run: Run):
    p, cfg = run.cfg.params, run.cfg
    kind = p["ensemble"]
    prefix = _rp_prefix(kind)
    table = rp_sweep(
        kind, p["sizes"], p["gammas"], p["realizations"], cfg.seed, cfg.f,
        ("c_avg", "sigma2", "ipr"), run.threads,
    )
    rows = []
    for i, D in enumerate(table.sizes):
        for j, g in enumerate(table.gammas):
            rows.append(
                (
                    g, int(D), int(table.realizations[i]), int(table.seeds[i, j]),
                    table.values["c_avg"][i, j], table.errors["c_avg"][i, j],
                    table.values["sigma2"][i, j], table.errors["sigma2"][i, j],
                    table.values["ipr"][i, j],
                )
            )
            run.cells.append(
                dict(file=f"{prefix}_sweep.csv", row=len(rows) - 1, ensemble=kind.value, gamma=g,
                     D=int(D), realizations=int(table.realizations[i]), seed=int(table.seeds[i, j]))
            )
    run.emit(f"{prefix}_sweep.csv", "rp_sweep", rows)
    col = data_collapse(table, p["gamma0"])
    run.emit(
        f"{prefix}_collapse.csv", "rp_collapse",
        [(g, int(D), x, y) for g, D, x, y in zip(col.gamma, col.size, col.x, col.y)],
    )
    cross = crossing_detect(table)
    run.emit(f"{prefix}_crossing.csv", "rp_crossing", list(cross.pairs))
    fits, fractal = [], []
    if len(table.sizes) >= 3:
        for j, g in enumerate(table.gammas):
            fit = _fit_or_none(list(zip(table.sizes, table.values["c_avg"][:, j])), "deviation-from-unity", 0)
            if fit:
                fits.append((g, "c_avg", fit.amplitude, fit.exponent, 0, len(fit.sizes)))
            fd = fractal_dimension(list(zip(table.sizes, table.values["ipr"][:, j])))
            fractal.append((g, fd.value, fd.ci[0], fd.ci[1]))
        run.emit(f"{prefix}_fits.csv", "rp_fits", fits)
        run.emit(f"{prefix}_fractal.csv", "rp_fractal", fractal)
    if "timeseries" in p:
        ts = p["timeseries"]
        times = np.linspace(0, float(ts.get("T", 50)), int(ts.get("points", 201)))
        rows = []
        for k, g in enumerate(ts.get("gammas", [0.3, 1.3, 3.0])):
            seed = cell_seed(cfg.seed, 10**6, k)
            spec = rngmod.EnsembleSpec(kind, int(ts["D"]), int(ts.get("realizations", 16)), seed, float(g))
            c = ex.rp_mean_timeseries(spec, times, cfg.f)
            rows += [(float(g), t, v) for t, v in zip(times, c)]
        run.emit(f"{prefix}_timeseries.csv", "rp_timeseries", rows)


def _run_oracle(run: Run):
    p = run.cfg.params
    rows = []
    for kind in p["kinds"]:
        for r in ex.oracle_comparison(kind, p["D"], p["count"], p["T"], p["samples"], run.cfg.seed, run.cfg.f):
            rows.append((r.kind, r.index, r.D, r.c_avg_formula, r.c_avg_oracle, r.sigma2_formula, r.sigma2_oracle))
    run.emit("oracle.csv", "oracle", rows)


def _run_moments(run: Run):
    p = run.cfg.params
    rows = []
    for field in p["fields"]:
        for D in p["sizes"]:
            for r in sphere_moment_check(D, field, p["samples"], run.cfg.seed):
                rows.append((field, D, r["name"], r["empirical"], r["stderr"], r["analytic"]))
    run.emit("moments.csv", "moments", rows)


RUNNERS = {
    "rmt": _run_rmt,
    "baker": _run_baker,
    "ising": _run_ising,
    "rp": _run_rp,
    "oracle": _run_oracle,
    "moments": _run_moments,
}


def run(cfg: ExperimentConfig, out: Optional[os.PathLike] = None, threads: Optional[int] = None) -> Path:
    """Execute ``cfg`` and write its results; returns the output directory."""
    out = Path(out or cfg.output or f"results/{cfg.kind}")
    out.mkdir(parents=True, exist_ok=True)
    threads = threads or cfg.threads or default_threads()
    r = Run(cfg, out, threads)
    t0 = time.perf_counter()
    RUNNERS[cfg.kind](r)
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(r.manifest(time.perf_counter() - t0), fh, indent=2, default=str)
        fh.write("\n")
    return out


# ---------------------------------------------------------------- re-running


def rerun_cell(cell: dict, threads: int = 1) -> List[str]:
    """Recompute one stored ensemble cell and return its formatted CSV row."""
    f = Fraction(cell.get("f", "1/2"))
    if "gamma" in cell:
        spec = rngmod.EnsembleSpec(cell["ensemble"], cell["D"], cell["realizations"], cell["seed"], cell["gamma"])
        res = ensemble_average(spec, f, ("c_avg", "sigma2", "ipr"), threads)
        row = (
            cell["gamma"], cell["D"], cell["realizations"], cell["seed"],
            res.mean["c_avg"], res.stderr["c_avg"], res.mean["sigma2"], res.stderr["sigma2"], res.mean["ipr"],
        )
    else:
        spec = rngmod.EnsembleSpec(cell["ensemble"], cell["D"], cell["realizations"], cell["seed"])
        row = _rmt_row(ensemble_average(spec, f, ("c_avg", "sigma2"), threads))
    return [fmt(v) for v in row]


# ---------------------------------------------------------------- verification


def _floats(rows, key):
    return np.array([float(r[key]) for r in rows])


def verify(directory: os.PathLike, rerun: int = 0, threads: int = 1) -> List[str]:
    """Re-check schemas and invariants of stored results; returns problems found."""
    d = Path(directory)
    mpath = d / "manifest.json"
    if not mpath.exists():
        return [f"{mpath} not found"]
    manifest = json.loads(mpath.read_text(encoding="utf-8"))
    f = float(Fraction(str(manifest["config"].get("f", "1/2"))))
    bound = 1 / (4 * f * (1 - f))
    problems = []
    for name, schema in manifest["files"].items():
        path = d / name
        if not path.exists():
            problems.append(f"{name}: listed in manifest but missing")
            continue
        with open(path, encoding="utf-8", newline="") as fh:
            header = next(csv.reader(fh))
        if header != SCHEMAS[schema]:
            problems.append(f"{name}: header {header} != {SCHEMAS[schema]}")
            continue
        rows = read_csv(path)
        for col in SCHEMAS[schema]:
            if col.startswith(("c_avg", "sigma2")):
                v = _floats(rows, col)
                if np.any(np.isinf(v)):
                    problems.append(f"{name}: non-finite {col}")
                v = v[np.isfinite(v)]
                if np.any(v < 0):
                    problems.append(f"{name}: negative {col}")
                if col in ("c_avg", "c_avg_mean", "c_avg_formula") and np.any(v > bound + 1e-12):
                    problems.append(f"{name}: {col} above 1/(4f(1-f))")
        if schema == "baker_timeseries" and rows and float(rows[0]["t"]) == 0 and abs(float(rows[0]["c_t"])) > 1e-10:
            problems.append(f"{name}: c(0) != 0")
        if schema == "moments":
            for r in rows:
                if r["quantity"] == "normalization" and abs(float(r["empirical"]) - 1) > 1e-9 + 5 * float(r["stderr"]):
                    problems.append(f"{name}: normalization identity off for {r['field']} D={r['D']}")
    for cell in manifest["cells"][: max(rerun, 0)]:
        stored = read_csv(d / cell["file"])[cell["row"]]
        fresh = rerun_cell(cell, threads)
        if list(stored.values()) != fresh:
            problems.append(f"{cell['file']} row {cell['row']}: re-run differs ({fresh} vs {list(stored.values())})")
    return problems


# ---------------------------------------------------------------- figures


def _need(d: Path, names):
    missing = [n for n in names if not (d / n).exists()]
    if missing:
        raise MissingInputs(missing)
    return [read_csv(d / n) for n in names]


def _write_dat(path: Path, header: str, blocks):
    """Whitespace-separated blocks, separated by two blank lines (gnuplot ``index``)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {header}\n")
        for k, (label, rows) in enumerate(blocks):
            if k:
                fh.write("\n\n")
            fh.write(f"# {label}\n")
            for r in rows:
                fh.write(" ".join(fmt(v) for v in r) + "\n")


def _sidecar(path: Path, text: str):
    path.write_text(text.strip() + "\n", encoding="utf-8")


def _fig_rmt(d, out):
    present = [e for e in ("GOE", "GUE") if (d / f"rmt_{e}.csv").exists()]
    if not present:
        raise MissingInputs(["rmt_GOE.csv or rmt_GUE.csv"])
    dev, var = [], []
    for e in present:
        rows = read_csv(d / f"rmt_{e}.csv")
        ref = goe_prediction if e == "GOE" else gue_prediction
        dev.append((e, [
            (int(r["D"]), math.log(int(r["D"])), math.log(1 - float(r["c_avg_mean"])),
             float(r["c_avg_se"]) / (1 - float(r["c_avg_mean"])), math.log(1 - ref(int(r["D"]))[0]))
            for r in rows
        ]))
        var.append((e, [
            (int(r["D"]), math.log(int(r["D"])), math.log(float(r["sigma2_mean"])), math.log(ref(int(r["D"]))[1]))
            for r in rows
        ]))
    _write_dat(out / "fig1_deviation.dat", "D ln(D) ln(1-c_avg) se_of_log ln(1-reference)", dev)
    _write_dat(out / "fig1_variance.dat", "D ln(D) ln(sigma2) ln(reference)", var)
    _sidecar(out / "fig1.txt", """
fig1: deviation of <c_avg> from unity and <sigma_c^2> against size, GOE and GUE
fig1_deviation.dat  x = ln D, y = ln(1 - <c_avg>); reference 1 - D/(D+2) (GOE), 1 - D/(D+1) (GUE)
fig1_variance.dat   x = ln D, y = ln <sigma_c^2>; reference 3/D^2 (GOE), 2/D^2 (GUE)
one block per ensemble (gnuplot index 0, 1)
""")
    return ["fig1_deviation.dat", "fig1_variance.dat", "fig1.txt"]


def _fig_spacing(d, out):
    (rows,) = _need(d, ["baker_spacing.csv"])
    blocks = []
    sectors = sorted({int(r["sector"]) for r in rows}, reverse=True)
    for sec in sectors:
        s = np.array([float(r["s"]) for r in rows if int(r["sector"]) == sec])
        dens, edges = np.histogram(s, bins="fd", density=True)
        centers = (edges[:-1] + edges[1:]) / 2
        blocks.append((f"sector {sec:+d}", list(zip(centers, dens))))
    _write_dat(out / "fig2_histogram.dat", "s density (Freedman-Diaconis bins)", blocks)
    grid = np.linspace(0, 4, 201)
    _write_dat(out / "fig2_surmise.dat", "s P_GOE(s)", [("Wigner surmise", list(zip(grid, wigner_surmise_goe(grid))))])
    _sidecar(out / "fig2.txt", """
fig2: unfolded eigenangle spacing distribution of the (1/2,1/2) Baker's map, parity resolved
fig2_histogram.dat  one block per parity sector: bin centre, normalized density
fig2_surmise.dat    GOE Wigner surmise (pi/2) s exp(-pi s^2/4)
""")
    return ["fig2_histogram.dat", "fig2_surmise.dat", "fig2.txt"]


def _fit_lookup(rows, **match):
    for r in rows:
        if all(str(r[k]) == str(v) for k, v in match.items()):
            return float(r["amplitude"]), float(r["exponent"])
    return None


def _fig_baker(d, out):
    rows, fits = _need(d, ["baker_scaling.csv", "baker_fits.csv"])
    dev, var = [], []
    for scheme in dict.fromkeys(r["scheme"] for r in rows):
        sr = [r for r in rows if r["scheme"] == scheme]
        D = np.array([int(r["D"]) for r in sr])
        fs = _fit_lookup(fits, scheme=scheme, observable="sigma2")
        var.append((scheme, [
            (Di, math.log(Di), math.log(float(r["sigma2"])), math.log(fs[0]) - fs[1] * math.log(Di) if fs else float("nan"))
            for Di, r in zip(D, sr)
        ]))
        if sr[0]["parity_resolved"] == "1":
            continue
        fc = _fit_lookup(fits, scheme=scheme, observable="c_avg")
        dev.append((scheme, [
            (Di, math.log(Di), math.log(1 - float(r["c_avg"])), math.log(fc[0]) - fc[1] * math.log(Di) if fc else float("nan"))
            for Di, r in zip(D, sr)
        ]))
    _write_dat(out / "fig3_deviation.dat", "D ln(D) ln(1-c_avg) fit_line", dev)
    _write_dat(out / "fig3_variance.dat", "D ln(D) ln(sigma2) fit_line", var)
    _sidecar(out / "fig3.txt", """
fig3: Baker's map scaling per Bernoulli scheme, labelled by the left-block fraction p of (p, 1-p)
fig3_deviation.dat  x = ln D, y = ln(1 - c_avg), with the least-squares line ln a - b ln D (fit over D > D_min);
                    parity-symmetric schemes have c_avg = 1 and are omitted
fig3_variance.dat   x = ln D, y = ln sigma_c^2 with fit line
""")
    return ["fig3_deviation.dat", "fig3_variance.dat", "fig3.txt"]


def _fig_ising_time(d, out):
    (rows,) = _need(d, ["ising_timeseries.csv"])
    blocks = []
    for label in dict.fromkeys(r["label"] for r in rows):
        blocks.append((label, [(float(r["t"]), float(r["c_t"])) for r in rows if r["label"] == label]))
    _write_dat(out / "fig4_timeseries.dat", "t c(t)", blocks)
    _sidecar(out / "fig4.txt", "fig4: c(t) of the Ising chain in one parity sector, one block per field choice")
    return ["fig4_timeseries.dat", "fig4.txt"]


def _fig_ising_scaling(d, out, fig, label, sectors):
    rows, fits = _need(d, ["ising_scaling.csv", "ising_fits.csv"])
    rows = [r for r in rows if r["label"] == label]
    if not rows:
        raise MissingInputs([f"ising_scaling.csv rows for {label!r}"])
    dev, var = [], []
    for sec in sectors:
        sr = [r for r in rows if int(r["sector"]) == sec]
        fc = _fit_lookup(fits, label=label, sector=sec, observable="c_avg")
        fs = _fit_lookup(fits, label=label, sector=sec, observable="sigma2")
        line = lambda fit, D: math.log(fit[0]) - fit[1] * math.log(D) if fit else float("nan")
        dev.append((f"sector {sec:+d}", [
            (int(r["D"]), math.log(int(r["D"])), math.log(1 - float(r["c_avg"])), line(fc, int(r["D"]))) for r in sr
        ]))
        var.append((f"sector {sec:+d}", [
            (int(r["D"]), math.log(int(r["D"])), math.log(float(r["sigma2"])), line(fs, int(r["D"]))) for r in sr
        ]))
    _write_dat(out / f"{fig}_deviation.dat", "D ln(D) ln(1-c_avg) fit_line", dev)
    _write_dat(out / f"{fig}_variance.dat", "D ln(D) ln(sigma2) fit_line", var)
    _sidecar(out / f"{fig}.txt", f"""
{fig}: sector-resolved scaling of the Ising chain, field set {label!r}
x = ln D with D = 2^N; y = ln(1 - c_avg) or ln sigma_c^2; one block per parity sector
""")
    return [f"{fig}_deviation.dat", f"{fig}_variance.dat", f"{fig}.txt"]


def _fig_rp_gamma(d, out, fig, prefix):
    (rows,) = _need(d, [f"{prefix}_sweep.csv"])
    avg, var = [], []
    for D in dict.fromkeys(int(r["D"]) for r in rows):
        sr = [r for r in rows if int(r["D"]) == D]
        avg.append((f"D={D}", [(float(r["gamma"]), float(r["c_avg_mean"]), float(r["c_avg_se"])) for r in sr]))
        var.append((f"D={D}", [(float(r["gamma"]), D**2 * float(r["sigma2_mean"]), D**2 * float(r["sigma2_se"])) for r in sr]))
    _write_dat(out / f"{fig}_cavg.dat", "gamma <c_avg> se", avg)
    _write_dat(out / f"{fig}_variance.dat", "gamma D^2<sigma2> se", var)
    _sidecar(out / f"{fig}.txt", f"""
{fig}: Rosenzweig-Porter ({prefix[3:].upper()}) ensemble means against gamma, one block per size
{fig}_cavg.dat      y = <c_avg>; curves of different D cross at the localization transition
{fig}_variance.dat  y = D^2 <sigma_c^2>
""")
    return [f"{fig}_cavg.dat", f"{fig}_variance.dat", f"{fig}.txt"]


def _fig_rp_exponents(d, out):
    rows, fits = _need(d, ["rp_goe_sweep.csv", "rp_goe_fits.csv"])
    blocks = []
    for g in dict.fromkeys(float(r["gamma"]) for r in rows):
        sr = [r for r in rows if float(r["gamma"]) == g and float(r["c_avg_mean"]) < 1]
        fit = next(((float(q["amplitude"]), float(q["exponent"])) for q in fits if float(q["gamma"]) == g), None)
        blocks.append((f"gamma={g!r} exponent={fit[1] if fit else float('nan')!r}", [
            (int(r["D"]), math.log(int(r["D"])), math.log(1 - float(r["c_avg_mean"])),
             math.log(fit[0]) - fit[1] * math.log(int(r["D"])) if fit else float("nan"))
            for r in sr
        ]))
    _write_dat(out / "fig8_deviation.dat", "D ln(D) ln(1-<c_avg>) fit_line", blocks)
    _sidecar(out / "fig8.txt", "fig8: RP-GOE ln(1 - <c_avg>) against ln D, one block per gamma, with fitted lines")
    return ["fig8_deviation.dat", "fig8.txt"]


def _fig_collapse(d, out):
    blocks = []
    for prefix in ("rp_goe", "rp_gue"):
        p = d / f"{prefix}_collapse.csv"
        if p.exists():
            rows = read_csv(p)
            for D in dict.fromkeys(int(r["D"]) for r in rows):
                blocks.append((f"{prefix} D={D}", [(float(r["x"]), float(r["c_avg_mean"])) for r in rows if int(r["D"]) == D]))
    if not blocks:
        raise MissingInputs(["rp_goe_collapse.csv or rp_gue_collapse.csv"])
    _write_dat(out / "fig10_collapse.dat", "(gamma-gamma0)ln(D) <c_avg>", blocks)
    _sidecar(out / "fig10.txt", "fig10: <c_avg> against (gamma - gamma0) ln D, one block per ensemble and size")
    return ["fig10_collapse.dat", "fig10.txt"]


def _fig_fdep(d, out):
    files = sorted(p.name for p in d.glob("rmt_GUE*.csv"))
    if not files:
        raise MissingInputs(["rmt_GUE*.csv"])
    avg, var = [], []
    for name in files:
        rows = read_csv(d / name)
        label = "f=1/2" if name == "rmt_GUE.csv" else "f=" + name[len("rmt_GUE_f"):-4].replace("-", "/")
        avg.append((label, [(int(r["D"]), float(r["c_avg_mean"]), float(r["c_avg_se"]), gue_prediction(int(r["D"]))[0]) for r in rows]))
        var.append((label, [(int(r["D"]), float(r["sigma2_mean"]), float(r["sigma2_se"]), gue_prediction(int(r["D"]))[1]) for r in rows]))
    _write_dat(out / "fig12_cavg.dat", "D <c_avg> se D/(D+1)", avg)
    _write_dat(out / "fig12_variance.dat", "D <sigma2> se 2/D^2", var)
    _sidecar(out / "fig12.txt", "fig12: GUE ensemble means for several partition fractions f, one block per f")
    return ["fig12_cavg.dat", "fig12_variance.dat", "fig12.txt"]


def _fig_rp_time(d, out):
    names = [n for n in ("rp_goe_timeseries.csv", "rp_gue_timeseries.csv") if (d / n).exists()]
    if not names:
        raise MissingInputs(["rp_goe_timeseries.csv or rp_gue_timeseries.csv"])
    blocks = []
    for n in names:
        rows = read_csv(d / n)
        for g in dict.fromkeys(r["gamma"] for r in rows):
            blocks.append((f"{n[:6]} gamma={g}", [(float(r["t"]), float(r["c_t_mean"])) for r in rows if r["gamma"] == g]))
    _write_dat(out / "rptime_timeseries.dat", "t <c(t)>", blocks)
    _sidecar(out / "rptime.txt", "rptime: ensemble-averaged c(t) of the Rosenzweig-Porter model, one block per gamma")
    return ["rptime_timeseries.dat", "rptime.txt"]


FIGURES = {
    "fig1": _fig_rmt,
    "fig2": _fig_spacing,
    "fig3": _fig_baker,
    "fig4": _fig_ising_time,
    "fig5": lambda d, o: _fig_ising_scaling(d, o, "fig5", "integrable", (1,)),
    "fig6": lambda d, o: _fig_ising_scaling(d, o, "fig6", "bch", (1, -1)),
    "fig7": lambda d, o: _fig_rp_gamma(d, o, "fig7", "rp_goe"),
    "fig8": _fig_rp_exponents,
    "fig9": lambda d, o: _fig_rp_gamma(d, o, "fig9", "rp_gue"),
    "fig10": _fig_collapse,
    "fig11": lambda d, o: _fig_ising_scaling(d, o, "fig11", "kim-huse", (1, -1)),
    "fig12": _fig_fdep,
    "rptime": _fig_rp_time,
}


def figures(directory: os.PathLike, figure_id: str) -> List[Path]:
    """Emit plot data for ``figure_id`` into ``<directory>/figures``."""
    if figure_id not in FIGURES:
        raise KeyError(figure_id)
    d = Path(directory)
    out = d / "figures"
    out.mkdir(exist_ok=True)
    return [out / n for n in FIGURES[figure_id](d, out)]
