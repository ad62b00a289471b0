"""Experiment configuration: JSON text validated into :class:`ExperimentConfig`."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

from .errors import ConfigurationError, ResourceError
from .experiments import ISING_PRESETS
from .models import MAX_ISING_SITES, BernoulliScheme
from .rng import EnsembleKind

KINDS = ("rmt", "baker", "ising", "rp", "oracle", "moments")
MAX_DIMENSION = 8192


class ConfigError(ConfigurationError):
    """Validation failure tied to a config key; ``line`` is filled in when known."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.key = key
        self.line = line

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.message}"


def parse_fraction(value, key="f") -> Fraction:
    try:
        fr = Fraction(str(value)) if not isinstance(value, float) else Fraction(value).limit_denominator(10**6)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: cannot read {value!r} as a fraction", key)
    if not 0 < fr < 1:
        raise ConfigError(f"{key} must lie strictly between 0 and 1", key)
    return fr


@dataclass
class ExperimentConfig:
    kind: str
    params: Dict[str, Any]
    seed: int = 0
    f: Fraction = Fraction(1, 2)
    output: Optional[str] = None
    threads: Optional[int] = None
    raw: Dict[str, Any] = field(default_factory=dict)


def _need(d, key, typ=None):
    if key not in d:
        raise ConfigError(f"missing required key {key!r}", key)
    v = d[key]
    if typ is not None and not isinstance(v, typ):
        raise ConfigError(f"{key!r} must be {getattr(typ, '__name__', typ)}", key)
    return v


def _int_list(d, key, minimum=1):
    v = _need(d, key, list)
    if not v or not all(isinstance(x, int) and not isinstance(x, bool) and x >= minimum for x in v):
        raise ConfigError(f"{key!r} must be a nonempty list of integers >= {minimum}", key)
    return v


def _check_sizes_realizations(d):
    sizes = _int_list(d, "sizes", 2)
    reals = _int_list(d, "realizations", 1)
    if len(sizes) != len(reals):
        raise ConfigError("'sizes' and 'realizations' must have equal length", "realizations")
    if max(sizes) > MAX_DIMENSION:
        raise ResourceError(f"dimension {max(sizes)} exceeds the dense cap {MAX_DIMENSION}")
    return sizes, reals


def validate(raw: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    kind = _need(raw, "experiment", str)
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment {kind!r}; expected one of {', '.join(KINDS)}", "experiment")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("'seed' must be an unsigned 64-bit integer", "seed")
    f = parse_fraction(raw.get("f", "1/2"))
    threads = raw.get("threads")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError("'threads' must be a positive integer", "threads")
    p = dict(raw)
    if kind == "rmt":
        ens = raw.get("ensembles", ["GOE", "GUE"])
        if isinstance(ens, str):
            ens = [ens]
        for e in ens:
            if e not in ("GOE", "GUE"):
                raise ConfigError(f"rmt ensembles must be GOE or GUE, got {e!r}", "ensembles")
        p["ensembles"] = ens
        p["sizes"], p["realizations"] = _check_sizes_realizations(raw)
        p["fractions"] = [parse_fraction(x, "fractions") for x in raw.get("fractions", [str(f)])]
        for fr in p["fractions"]:
            for D in p["sizes"]:
                if (fr * D).denominator != 1:
                    raise ConfigError(f"f={fr} does not divide D={D}", "fractions")
    elif kind == "baker":
        schemes = raw.get("schemes", ["1/2", "2/3", "1/4", "1/3"])
        try:
            p["schemes"] = [BernoulliScheme.parse(s) for s in schemes]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad scheme: {exc}", "schemes")
        p["sizes"] = _int_list(raw, "sizes", 2) if "sizes" in raw else []
        for D in p["sizes"]:
            if D > MAX_DIMENSION:
                raise ResourceError(f"dimension {D} exceeds the dense cap {MAX_DIMENSION}")
            for s in p["schemes"]:
                if (s.left_fraction * D).denominator != 1:
                    raise ConfigError(f"D={D} is incompatible with scheme {s}", "sizes")
        ph = raw.get("phases", {})
        p["alpha"], p["beta"] = float(ph.get("alpha", 0.5)), float(ph.get("beta", 0.5))
        if "timeseries" in raw:
            ts = _need(raw, "timeseries", dict)
            D, _ = _need(ts, "D", int), _need(ts, "T", int)
            try:
                BernoulliScheme.parse(ts.get("scheme", "1/2")).block_sizes(D)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"timeseries: {exc}", "timeseries")
        if "spacing" in raw:
            _need(_need(raw, "spacing", dict), "D", int)
    elif kind == "ising":
        presets = raw.get("presets", ["bch"])
        for name in presets:
            if name not in ISING_PRESETS:
                raise ConfigError(f"unknown Ising preset {name!r}", "presets")
        fields = raw.get("fields", [])
        for fl in fields:
            if not isinstance(fl, dict) or not {"label", "h_x", "h_z"} <= set(fl):
                raise ConfigError("'fields' entries need label, h_x and h_z", "fields")
        p["presets"], p["fields"] = presets, fields
        p["sites"] = _int_list(raw, "sites", 2) if "sites" in raw else []
        if p["sites"] and max(p["sites"]) > MAX_ISING_SITES:
            raise ResourceError(f"N={max(p['sites'])} exceeds the dense cap of {MAX_ISING_SITES} sites")
        if "timeseries" in raw:
            ts = _need(raw, "timeseries", dict)
            N = _need(ts, "N", int)
            if N > MAX_ISING_SITES:
                raise ResourceError(f"N={N} exceeds the dense cap of {MAX_ISING_SITES} sites")
            _need(ts, "T", (int, float))
    elif kind == "rp":
        ens = raw.get("ensemble", "RP-GOE")
        if ens not in ("RP-GOE", "RP-GUE"):
            raise ConfigError("rp 'ensemble' must be RP-GOE or RP-GUE", "ensemble")
        p["ensemble"] = EnsembleKind(ens)
        p["sizes"], p["realizations"] = _check_sizes_realizations(raw)
        gammas = _need(raw, "gammas", list)
        if not gammas or not all(isinstance(g, (int, float)) and g >= 0 for g in gammas):
            raise ConfigError("'gammas' must be a nonempty list of non-negative numbers", "gammas")
        if sorted(gammas) != list(gammas):
            raise ConfigError("'gammas' must be ascending", "gammas")
        p["gammas"] = [float(g) for g in gammas]
        p["gamma0"] = float(raw.get("gamma0", 2.0))
    elif kind == "oracle":
        kinds = raw.get("kinds", ["unitary", "hermitian"])
        for k in kinds:
            if k not in ("unitary", "hermitian"):
                raise ConfigError(f"oracle kind must be unitary or hermitian, got {k!r}", "kinds")
        p["kinds"] = kinds
        p["D"] = int(raw.get("D", 64))
        p["count"] = int(raw.get("count", 20))
        p["T"] = raw.get("T", 10**6)
        p["samples"] = int(raw.get("samples", 10**6))
    elif kind == "moments":
        p["sizes"] = _int_list(raw, "sizes", 2) if "sizes" in raw else [4, 8, 64]
        p["fields"] = raw.get("fields", ["real", "complex"])
        p["samples"] = int(raw.get("samples", 10**6))
    return ExperimentConfig(kind, p, seed, f, raw.get("output"), threads, raw)


def _line_of(text: str, key: Optional[str]) -> Optional[int]:
    if not key:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def loads(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno)
    try:
        return validate(raw)
    except ConfigError as exc:
        if exc.line is None:
            exc.line = _line_of(text, exc.key)
        raise


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
