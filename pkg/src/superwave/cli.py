"""Command-line entry point.

Every subcommand takes its parameters from an optional JSON ``--config`` file
and from flags named after the same keys (flags win). The merged document is
validated against the subcommand's JSON schema, unknown keys included, before
anything runs. Each run writes its artifacts and a ``manifest.json`` into
``--out``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 input/output failure. Failures print one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .fieldio import FieldFormatError, read_field, write_field

DEFAULT_SEED = 20240611
EXIT_SCHEMA, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


# --------------------------------------------------------------------------
# schemas

NUM = {"type": "number"}
INT = {"type": "integer"}
POS = {"type": "number", "exclusiveMinimum": 0}
POSINT = {"type": "integer", "minimum": 1}
PAIR = {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}
TARGET = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["cos", "sin", "expi", "sinc", "jn", "gauss", "file"]},
        "k": NUM,
        "n": {"type": "integer", "minimum": 0},
        "width": POS,
        "path": {"type": "string"},
    },
}


def _schema(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


SCHEMAS = {
    "construct product": _schema({
        "N": dict(POSINT, default=20),
        "a": dict(NUM, default=6.0),
        "x_min": dict(NUM, default=-5.0),
        "x_max": dict(NUM, default=5.0),
        "n_samples": dict(INT, minimum=8, default=4096),
        "method": {"enum": ["auto", "spectral", "fd4"], "default": "auto"},
        "threshold": dict(POS, default=1e-6),
    }),
    "construct forced-zeros": _schema({
        "omega": dict(POS, default=1.0),
        "n": dict(INT, minimum=0, default=12),
        "m": dict(INT, minimum=0, default=12),
        "zeros": {"type": "array", "items": PAIR, "default": [[0.5, -0.5], [-1.0, 1.5]]},
        "grid": dict(INT, minimum=8, default=256),
        "spacing": dict(POS, default=0.5),
    }),
    "construct canvas": _schema({
        "omega": dict(POS, default=1.0),
        "m": {"type": "integer", "minimum": 1},
        "coeffs": {"type": "array", "items": {"oneOf": [NUM, PAIR]}},
        "target_k": NUM,
        "interval": dict(PAIR, default=[-1.0, 1.0]),
        "degree": dict(INT, minimum=0, default=8),
        "x_min": dict(NUM, default=-20.0),
        "x_max": dict(NUM, default=20.0),
        "n_samples": dict(INT, minimum=8, default=4096),
        "allow_non_integrable": {"type": "boolean", "default": False},
    }),
    "construct taylor": _schema({
        "N": dict(POSINT, default=12),
        "a": dict(NUM, default=1.5),
        "a_imag": dict(NUM, default=0.0),
        "x_min": dict(NUM, default=-20.0),
        "x_max": dict(NUM, default=20.0),
        "n_samples": dict(INT, minimum=8, default=4096),
    }),
    "fit interval": _schema({
        "target": dict(TARGET, default={"kind": "cos", "k": 10.0}),
        "interval": dict(PAIR, default=[-0.5, 0.5]),
        "N": dict(POSINT, default=9),
        "bandlimit": dict(POS, default=2 * math.pi),
        "rcond": dict(POS, default=1e-12),
        "view": dict(PAIR, default=[-1.0, 1.0]),
        "n_view": dict(INT, minimum=2, default=2001),
    }),
    "fit bessel": _schema({
        "target": dict(TARGET, default={"kind": "cos", "k": 0.8}),
        "interval": dict(PAIR, default=[-5.0, 5.0]),
        "N_terms": dict(POSINT, default=12),
        "rcond": dict(POS, default=1e-12),
        "view": dict(PAIR, default=[-15.0, 15.0]),
        "n_view": dict(INT, minimum=2, default=2001),
    }),
    "fit comb": _schema({
        "target": dict(TARGET, default={"kind": "sinc", "k": 2.0}),
        "window": dict(PAIR, default=[-math.pi, math.pi]),
        "K": dict(POSINT, default=21),
        "omega_min": dict(NUM, default=-0.5),
        "Omega": dict(POS, default=1.0),
        "n_fit": dict(INT, minimum=1, default=256),
        "rcond": dict(POS, default=1e-12),
    }),
    "fit phases": _schema({
        "omegas": {"type": "array", "items": NUM, "minItems": 1, "default": [1.0, 2.0, 3.0, 4.0]},
        "A": dict(POS, default=1.0),
        "T_SO": dict(POS, default=0.5),
        "step": dict(POS, default=1.0),
        "max_iter": dict(POSINT, default=2000),
        "restarts": dict(POSINT, default=16),
        "tol": dict(POS, default=1e-15),
        "n_view": dict(INT, minimum=2, default=2001),
    }),
    "analyze": _schema({
        "input": {"type": "string"},
        "bandlimit": POS,
        "irradiance_bandlimit": POS,
        "method": {"enum": ["auto", "spectral", "fd4"], "default": "auto"},
        "threshold": dict(POS, default=1e-6),
        "floor": dict(POS, default=1e-9),
    }, required=["input"]),
    "speckle": _schema({
        "spectrum": {"enum": ["disk", "annular"], "default": "disk"},
        "kmax": dict(POS, default=math.pi / 4),
        "kmin": {"type": "number", "minimum": 0},
        "grid": dict(INT, minimum=8, default=512),
        "spacing": dict(POS, default=1.0),
        "realizations": dict(POSINT, default=64),
        "waves": dict(POSINT, default=256),
        "mean_intensity": dict(POS, default=1.0),
        "save_fields": {"type": "integer", "minimum": 0, "default": 0},
    }),
    "propagate": _schema({
        "lambda": dict(POS, default=0.5),
        "z": {"oneOf": [NUM, {"type": "array", "items": NUM, "minItems": 3, "maxItems": 3}], "default": [1.0, 5.0, 3]},
        "input": {"type": "string"},
        "mask_spec": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "symmetry": {"type": "integer"}, "hole_diameter": POS, "min_separation": POS,
                "aperture_diameter": POS, "count": POSINT,
            },
        },
        "grid": dict(INT, minimum=8, default=1536),
        "spacing": dict(POS, default=1 / 30),
        "kernel": {"enum": ["paraxial", "helmholtz"], "default": "helmholtz"},
        "pad": dict(POSINT, default=2),
        "threshold": dict(POS, default=0.3),
        "NA": dict(POS, default=1.0),
        "save_fields": {"type": "boolean", "default": True},
    }),
    "holo encode": _schema({
        "input": {"type": "string"},
        "lg": {"type": "object", "additionalProperties": False,
               "properties": {"p": {"type": "integer", "minimum": 0}, "m": INT, "w": POS}},
        "grid": dict(INT, minimum=8, default=512),
        "spacing": dict(POS, default=1.0),
        "pitch": dict(POS, default=8.0),
        "kind": {"enum": ["blazed", "binary", "sinusoidal"], "default": "blazed"},
        "convention": {"enum": ["exact", "literal"], "default": "exact"},
    }),
    "holo render": _schema({
        "plan": {"type": "string"},
        "kind": {"enum": ["blazed", "binary", "sinusoidal"]},
    }, required=["plan"]),
    "holo simulate": _schema({
        "plan": {"type": "string"},
        "oversample": dict(POSINT, default=16),
        "quantize": {"type": "boolean", "default": False},
    }, required=["plan"]),
    "recover": _schema({
        "comb": {"type": "string"},
        "noise_db": dict(NUM, default=17.0),
        "averages": dict(POSINT, default=10),
        "trials": dict(POSINT, default=100),
        "samples_per_period": dict(POSINT, default=65536),
        "method": {"enum": ["exact", "fft"], "default": "fft"},
    }),
    "plotdata": _schema({
        "kind": {"enum": ["fig1", "fig10", "carpet", "gamma", "recovery"]},
        "input": {"type": "string"},
    }, required=["kind", "input"]),
}


def _defaults(schema: dict) -> dict:
    return {k: v["default"] for k, v in schema["properties"].items() if "default" in v}


def _flag_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def validate_config(command: str, cfg: dict) -> dict:
    """Fill defaults and validate; raises CLIError(exit 2) naming the offending key."""
    schema = SCHEMAS[command]
    merged = {**_defaults(schema), **cfg}
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(merged), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        key = None
        if err.validator == "additionalProperties":
            extra = set(err.instance) - set(err.schema.get("properties", {}))
            key = sorted(extra)[0] if extra else None
        elif err.absolute_path:
            key = ".".join(str(p) for p in err.absolute_path)
        elif err.validator == "required":
            key = err.message.split("'")[1]
        raise CLIError(EXIT_SCHEMA, "schema", f"invalid configuration for '{command}': {err.message}", key=key)
    return merged


# --------------------------------------------------------------------------
# output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return format(v, ".17g") if math.isfinite(v) else "nan"


def write_csv(path: Path, header, columns) -> Path:
    cols = [np.asarray(c).ravel() for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(command: str, cfg: dict, seed: int) -> str:
    doc = json.dumps({"command": command, "config": _clean(cfg), "seed": seed}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


class Run:
    """Output directory bookkeeping for one invocation."""

    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        self.outputs: list[Path] = []
        self.inputs: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(p)
        return p

    def field(self, name: str, field) -> Path:
        ext = ".csv" if self.fmt == "csv" else ".swf"
        p = self.path(name + ext)
        write_field(field, p)
        return p

    def read(self, path) -> object:
        p = Path(path)
        self.inputs.append(p)
        try:
            return read_field(p)
        except FileNotFoundError as exc:
            raise CLIError(EXIT_IO, "io", f"input file not found: {p}") from exc

    def read_json(self, path) -> dict:
        p = Path(path)
        self.inputs.append(p)
        try:
            return json.loads(p.read_text())
        except FileNotFoundError as exc:
            raise CLIError(EXIT_IO, "io", f"input file not found: {p}") from exc
        except json.JSONDecodeError as exc:
            raise CLIError(EXIT_IO, "io", f"{p} is not valid JSON: {exc}") from exc


# --------------------------------------------------------------------------
# targets


def make_target(spec: dict, run: Run | None = None):
    kind = spec["kind"]
    k = spec.get("k", 1.0)
    if kind == "cos":
        return lambda x: np.cos(k * np.asarray(x))
    if kind == "sin":
        return lambda x: np.sin(k * np.asarray(x))
    if kind == "expi":
        return lambda x: np.exp(1j * k * np.asarray(x))
    if kind == "sinc":
        return lambda x: np.sinc(k * np.asarray(x) / np.pi)
    if kind == "jn":
        from .bessel import spherical_jn

        n = spec.get("n", 0)
        return lambda x: spherical_jn(n, x)
    if kind == "gauss":
        w = spec.get("width", 1.0)
        return lambda x: np.exp(-np.asarray(x) ** 2 / (2 * w * w))
    if "path" not in spec:
        raise CLIError(EXIT_SCHEMA, "schema", "target kind 'file' needs a 'path'", key="target.path")
    f = run.read(spec["path"]) if run else read_field(spec["path"])
    if f.ndim != 1:
        raise CLIError(EXIT_SCHEMA, "schema", "target file must hold a 1D field", key="target.path")
    return (f.grid.x, np.asarray(f.values))


# --------------------------------------------------------------------------
# commands


def cmd_construct_product(cfg, run, seed, threads):
    from .direct import ProductFunctionParams, product_function
    from .field import Grid1D
    from .local import local_map, super_regions

    grid = Grid1D.span(cfg["x_min"], cfg["x_max"], cfg["n_samples"])
    f = product_function(ProductFunctionParams(cfg["N"], cfg["a"]), grid)
    m = local_map(f, 1.0, cfg["method"], cfg["threshold"])
    run.field("field", f)
    write_csv(run.path("analysis.csv"), ["x", "k", "kappa", "band_upper", "band_lower"],
              [grid.x, m.k_local, m.kappa_local, np.ones(grid.size), -np.ones(grid.size)])
    i0 = grid.index_of(0.0)
    rep = super_regions(m, 1.0)
    return {
        "x0": grid.x[i0], "k0": m.k_local[i0], "kappa0": m.kappa_local[i0], "method": m.method,
        "superoscillating_fraction": rep.superoscillating_fraction,
        "supergrowing_fraction": rep.supergrowing_fraction, "log_scale": f.meta.get("log_scale"),
    }


def cmd_construct_forced_zeros(cfg, run, seed, threads):
    from .direct import ForcedZeroDesign, forced_zero_field
    from .field import Grid2D, measured_bandlimit

    d = ForcedZeroDesign(cfg["omega"], cfg["n"], cfg["m"], [tuple(z) for z in cfg["zeros"]])
    grid = Grid2D.centered(cfg["grid"], cfg["spacing"])
    g = forced_zero_field(d, grid)
    base = forced_zero_field(ForcedZeroDesign(cfg["omega"], cfg["n"], cfg["m"]), grid)
    run.field("field", g)
    peak = np.abs(g.values).max()
    # the field vanishes on the lines x = x_j and y = y_j
    on_zero = 0.0
    for x0, y0 in d.zeros:
        on_zero = max(on_zero, float(np.max(np.abs(d.evaluate(np.full_like(grid.y, x0), grid.y)))),
                      float(np.max(np.abs(d.evaluate(grid.x, np.full_like(grid.x, y0))))))
    return {
        "bandlimit_base_x": measured_bandlimit(base, axis=0), "bandlimit_base_y": measured_bandlimit(base, axis=1),
        "bandlimit_x": measured_bandlimit(g, axis=0), "bandlimit_y": measured_bandlimit(g, axis=1),
        "bin_x": grid.dkx, "bin_y": grid.dky, "max_on_zero_lines_rel": on_zero / peak,
    }


def cmd_construct_canvas(cfg, run, seed, threads):
    from .direct import CanvasDesign, canvas_fit, canvas_function
    from .field import Grid1D
    from .local import local_map

    if "coeffs" in cfg:
        coeffs = [complex(*c) if isinstance(c, list) else complex(c) for c in cfg["coeffs"]]
        m = cfg.get("m", len(coeffs) + 2)
        d = CanvasDesign(cfg["omega"], m, coeffs, cfg["allow_non_integrable"])
    elif "target_k" in cfg:
        kt = cfg["target_k"]
        d = canvas_fit(lambda x: np.exp(1j * kt * x), tuple(cfg["interval"]), cfg["degree"], cfg["omega"], cfg.get("m"))
    else:
        raise CLIError(EXIT_SCHEMA, "schema", "construct canvas needs 'coeffs' or 'target_k'", key="coeffs")
    grid = Grid1D.span(cfg["x_min"], cfg["x_max"], cfg["n_samples"])
    f = canvas_function(d, grid)
    lm = local_map(f, cfg["omega"])
    run.field("field", f)
    write_csv(run.path("analysis.csv"), ["x", "k", "kappa", "band_upper", "band_lower"],
              [grid.x, lm.k_local, lm.kappa_local, np.full(grid.size, cfg["omega"]), np.full(grid.size, -cfg["omega"])])
    return {"m": d.m, "coeffs": [complex(c) for c in d.poly_coeffs]}


def cmd_construct_taylor(cfg, run, seed, threads):
    from .direct import taylor_match_coeffs, taylor_match_field
    from .field import Grid1D

    a = complex(cfg["a"], cfg["a_imag"]) if cfg["a_imag"] else cfg["a"]
    d = taylor_match_coeffs(cfg["N"], a)
    f = taylor_match_field(d, Grid1D.span(cfg["x_min"], cfg["x_max"], cfg["n_samples"]))
    run.field("field", f)
    return {"k": d.k, "X": d.X}


def _view(cfg):
    return np.linspace(cfg["view"][0], cfg["view"][1], cfg["n_view"])


def _target_values(target, t):
    if callable(target):
        return np.asarray(target(t), dtype=complex)
    x, v = target
    return np.interp(t, x, v.real) + 1j * np.interp(t, x, v.imag)


def cmd_fit_interval(cfg, run, seed, threads):
    from .approx import interval_approx

    target = make_target(cfg["target"], run)
    d = interval_approx(target, tuple(cfg["interval"]), cfg["N"], cfg["bandlimit"], cfg["rcond"])
    t = _view(cfg)
    approx = d.evaluate(t)
    inside = (t >= d.interval[0]) & (t <= d.interval[1])
    tv = _target_values(target, t)
    write_csv(run.path("fit.csv"), ["t", "target", "approx", "inside_interval"], [t, tv.real, approx.real, inside])
    write_csv(run.path("fit_complex.csv"), ["t", "target_re", "target_im", "approx_re", "approx_im"],
              [t, tv.real, tv.imag, approx.real, approx.imag])
    return {
        "N": d.N, "interval": d.interval, "bandlimit": d.bandlimit, "k": d.k, "C": d.C,
        "residual": d.residual, "rank": d.rank,
        "max_error_inside": float(np.max(np.abs(approx - tv)[inside])),
        "max_abs_view": float(np.max(np.abs(approx))),
    }


def cmd_fit_bessel(cfg, run, seed, threads):
    from .approx import bessel_line_approx

    target = make_target(cfg["target"], run)
    d = bessel_line_approx(target, tuple(cfg["interval"]), cfg["N_terms"], cfg["rcond"])
    t = _view(cfg)
    approx = d.evaluate(t)
    inside = (t >= d.interval[0]) & (t <= d.interval[1])
    tv = _target_values(target, t)
    write_csv(run.path("fit.csv"), ["t", "target", "approx", "inside_interval"], [t, tv.real, approx.real, inside])
    return {"N_terms": d.N_terms, "interval": d.interval, "D": d.D, "residual": d.residual, "rank": d.rank}


def cmd_fit_comb(cfg, run, seed, threads):
    from .comb import comb_fit

    target = make_target(cfg["target"], run)
    w0, w1 = cfg["window"]
    x = np.linspace(w0, w1, cfg["n_fit"]) if cfg["n_fit"] > 1 else np.array([(w0 + w1) / 2])
    comb = comb_fit(x, _target_values(target, x), cfg["K"], cfg["omega_min"], cfg["Omega"], cfg["rcond"])
    t = np.linspace(w0, w1, 2001)
    psi = comb.evaluate(t)
    write_csv(run.path("fit.csv"), ["x", "target", "psi_re", "psi_im"], [t, _target_values(target, t).real, psi.real, psi.imag])
    return {
        "K": comb.K, "omega_min": comb.omega_min, "Omega": comb.Omega, "omegas": comb.omegas,
        "amplitudes": comb.amplitudes, "window": [w0, w1], "diagnostics": comb.diagnostics,
    }


def cmd_fit_phases(cfg, run, seed, threads):
    from .comb import PhaseDescentConfig, phase_descent
    from .field import Grid1D, SampledField
    from .local import local_wavenumber

    pc = PhaseDescentConfig(cfg["T_SO"], cfg["step"], cfg["max_iter"], cfg["restarts"], cfg["tol"], seed)
    res = phase_descent(cfg["A"], cfg["omegas"], pc)
    T = cfg["T_SO"]
    grid = Grid1D.span(-T, T, cfg["n_view"])
    psi = res.comb.evaluate(grid.x)
    lm = local_wavenumber(SampledField(grid, psi), method="fd4", threshold=1e-9)
    write_csv(run.path("waveform.csv"), ["t", "re", "im", "local_frequency"], [grid.x, psi.real, psi.imag, lm.k_local])
    return {
        "omegas": res.comb.omegas, "delays": res.comb.delays, "objective": res.objective,
        "converged": res.converged, "iterations": len(res.history) - 1,
        "max_local_frequency": float(np.nanmax(np.abs(lm.k_local))), "max_tone": float(np.max(np.abs(cfg["omegas"]))),
    }


def cmd_analyze(cfg, run, seed, threads):
    from .field import measured_bandlimit
    from .local import local_map, super_regions, supergrowth_strength

    f = run.read(cfg["input"])
    band = cfg.get("bandlimit") or measured_bandlimit(f, cfg["floor"])
    m = local_map(f, band, cfg["method"], cfg["threshold"])
    rep = super_regions(m, band)
    out = {"bandlimit": band, "method": m.method, "superoscillating_fraction": rep.superoscillating_fraction,
           "supergrowing_fraction": rep.supergrowing_fraction, "n_valid": rep.n_valid,
           "n_superoscillating_regions": len(rep.superoscillating_regions)}
    gamma = m.gamma
    if "irradiance_bandlimit" in cfg:
        sg = supergrowth_strength(f, cfg["irradiance_bandlimit"], irradiance=None, method=cfg["method"],
                                  threshold=cfg["threshold"])
        gamma = sg.gamma
        out["gamma_max"] = float(np.nanmax(np.where(sg.valid, sg.gamma, np.nan)))
    v = np.asarray(f.values)
    cols = ["re", "im", "k_local", "kappa_local", "gamma", "valid"]
    data = [v.real, v.imag, m.k_local, m.kappa_local, gamma, m.valid]
    if f.ndim == 1:
        write_csv(run.path("local.csv"), ["x"] + cols, [f.grid.x] + data)
    else:
        X, Y = f.grid.mesh()
        write_csv(run.path("local.csv"), ["x", "y"] + cols, [X, Y] + data)
    return out


def cmd_speckle(cfg, run, seed, threads):
    from .field import BandDescriptor, Grid2D
    from .speckle import SpeckleModel, measure_fractions, speckle_ensemble, superoscillatory_fraction_theory

    shape = cfg["spectrum"]
    band = BandDescriptor(cfg["kmax"], shape, cfg.get("kmin") if shape == "annular" else None)
    model = SpeckleModel(band, cfg["waves"], cfg["mean_intensity"], seed)
    grid = Grid2D.centered(cfg["grid"], cfg["spacing"])
    saved = []

    def stream():
        for r in speckle_ensemble(model, grid, cfg["realizations"], workers=threads):
            if r.index < cfg["save_fields"]:
                saved.append(run.field(f"realization_{r.index:04d}", r.field))
            yield r

    stats = measure_fractions(stream())
    write_csv(run.path("hist_gradient.csv"), ["g_lo", "g_hi", "probability"], [stats.g_edges[:-1], stats.g_edges[1:], stats.g_hist])
    gi, ii = np.meshgrid(np.arange(len(stats.g_edges) - 1), np.arange(len(stats.I_edges) - 1))
    write_csv(run.path("hist_joint.csv"), ["I_lo", "I_hi", "g_lo", "g_hi", "probability"],
              [stats.I_edges[:-1][ii], stats.I_edges[1:][ii], stats.g_edges[:-1][gi], stats.g_edges[1:][gi], stats.joint_hist])
    out = stats.as_dict()
    out["theory_fraction"] = superoscillatory_fraction_theory(band)
    out["spectrum"] = shape
    return out


def _zs(z):
    if isinstance(z, list):
        return np.linspace(z[0], z[1], int(z[2]))
    return np.array([float(z)])


def cmd_propagate(cfg, run, seed, threads):
    from concurrent.futures import ThreadPoolExecutor

    from .field import Grid2D, SampledField
    from .propagate import HoleArraySpec, PropagationSetup, find_hotspots, propagate_field, quasiperiodic_mask

    if "input" in cfg:
        field = run.read(cfg["input"])
        if field.ndim != 2:
            raise CLIError(EXIT_SCHEMA, "schema", "propagate input must be a 2D field", key="input")
        n_holes = None
    else:
        spec = HoleArraySpec(seed=seed, **{"aperture_diameter": 36.0, **cfg.get("mask_spec", {})})
        field = quasiperiodic_mask(spec, Grid2D.centered(cfg["grid"], cfg["spacing"]))
        run.field("mask", field)
        n_holes = field.meta["n_holes"]
    zs = _zs(cfg["z"])

    def one(z):
        out = propagate_field(PropagationSetup(cfg["lambda"], float(z), field, cfg["pad"], cfg["kernel"]))
        I = SampledField(out.grid, out.intensity, None, {"propagated_z": float(z)})
        return out, find_hotspots(I, cfg["threshold"], cfg["lambda"], cfg["NA"])

    with ThreadPoolExecutor(max(threads, 1)) as pool:
        results = list(pool.map(one, zs))
    rows = []
    planes = []
    for i, (z, (out, rep)) in enumerate(zip(zs, results)):
        if cfg["save_fields"]:
            run.field(f"plane_{i:03d}", out)
        for s in rep.spots:
            rows.append((z, s.x, s.y, s.peak, s.fwhm, s.sub_diffraction))
        best = rep.smallest()
        planes.append({"z": z, "n_spots": len(rep.spots), "n_sub_diffraction": rep.n_sub_diffraction,
                       "min_fwhm": best.fwhm if best else None})
    cols = list(zip(*rows)) if rows else [[]] * 6
    write_csv(run.path("hotspots.csv"), ["z", "x", "y", "peak", "fwhm", "sub_diffraction"], cols)
    fw = [p["min_fwhm"] for p in planes if p["min_fwhm"] is not None]
    return {"wavelength": cfg["lambda"], "diffraction_limit": cfg["lambda"] / (2 * cfg["NA"]), "planes": planes,
            "n_holes": n_holes, "min_fwhm": min(fw) if fw else None,
            "sub_wavelength_found": bool(fw and min(fw) < cfg["lambda"])}


def _save_plan(run, plan):
    from .field import SampledField

    run.field("plan", SampledField(plan.grid, plan.M * np.exp(1j * plan.Phi)))
    write_json(run.path("plan.json"), {"pitch": plan.pitch, "kind": plan.kind, "convention": plan.convention,
                                       "scale": plan.scale, "plan_file": "plan" + (".csv" if run.fmt == "csv" else ".swf")})


def _load_plan(run, path):
    from .holography import HologramPlan

    p = Path(path)
    meta_path = p if p.suffix == ".json" else p.with_suffix(".json")
    meta = run.read_json(meta_path)
    f = run.read(meta_path.parent / meta["plan_file"])
    v = np.asarray(f.values)
    M = np.clip(np.abs(v), 0, 1)
    return HologramPlan(f.grid, M, np.angle(v), meta["pitch"], meta["kind"], meta["convention"], meta["scale"])


def cmd_holo_encode(cfg, run, seed, threads):
    from .field import Grid2D
    from .holography import TargetField, encode_hologram, laguerre_gauss

    if "input" in cfg:
        target = TargetField.from_field(run.read(cfg["input"]))
    else:
        lg = {"p": 5, "m": 1, "w": 40.0, **cfg.get("lg", {})}
        target = TargetField.from_field(laguerre_gauss(Grid2D.centered(cfg["grid"], cfg["spacing"]), lg["p"], lg["m"], lg["w"]))
    plan = encode_hologram(target, cfg["pitch"], cfg["kind"], cfg["convention"])
    _save_plan(run, plan)
    return {"pitch": plan.pitch, "kind": plan.kind, "M_min": plan.M.min(), "M_max": plan.M.max(), "scale": plan.scale}


def cmd_holo_render(cfg, run, seed, threads):
    from dataclasses import replace

    from .field import SampledField
    from .holography import quantize_8bit, render_grating, write_pgm

    plan = _load_plan(run, cfg["plan"])
    if cfg.get("kind"):
        plan = replace(plan, kind=cfg["kind"])
    phase = render_grating(plan)
    levels = quantize_8bit(phase)
    write_pgm(levels, run.path("hologram.pgm"))
    run.field("phase", SampledField(plan.grid, phase))
    return {"kind": plan.kind, "max_quantization_error": float(np.max(np.abs(levels * (2 * np.pi / 255) - phase)))}


def cmd_holo_simulate(cfg, run, seed, threads):
    from .holography import first_order_field, simulate_first_order

    plan = _load_plan(run, cfg["plan"])
    sim = simulate_first_order(plan, cfg["oversample"], cfg["quantize"])
    cf = first_order_field(plan)
    run.field("first_order_simulated", sim)
    run.field("first_order_closed_form", cf)
    err = np.asarray(sim.values) - np.asarray(cf.values)
    rms = math.sqrt(np.mean(np.abs(err) ** 2) / np.mean(np.abs(cf.values) ** 2))
    return {"rms_relative": rms, "oversample": cfg["oversample"], "quantize": cfg["quantize"]}


def cmd_recover(cfg, run, seed, threads):
    from .comb import CombSpec
    from .recover import NoiseModel, add_noise, comb_record, noise_experiment, sinc_comb, spectral_filter_recover

    if "comb" in cfg:
        d = run.read_json(cfg["comb"])
        amps = np.array([complex(*a) for a in d["amplitudes"]])
        comb = CombSpec(d["K"], d["omega_min"], d["Omega"], amps)
        window = tuple(d["window"])
    else:
        comb, window = sinc_comb()
    res = noise_experiment(comb, window, cfg["noise_db"], cfg["averages"], cfg["trials"], cfg["samples_per_period"],
                           seed=seed, method=cfg["method"])
    x, psi = comb_record(comb, 1, cfg["samples_per_period"])
    model = NoiseModel(db=cfg["noise_db"], seed=seed)
    records = np.stack([add_noise(psi, model, res.a_so, stream=(0, a))[0] for a in range(cfg["averages"])])
    rep = spectral_filter_recover(records, x, comb, window, psi, cfg["method"])
    sel = (x >= window[0]) & (x <= window[1])
    write_csv(run.path("reconstruction.csv"), ["x", "truth_re", "truth_im", "noisy_re", "noisy_im", "recovered_re", "recovered_im"],
              [x[sel], psi[sel].real, psi[sel].imag, records[0][sel].real, records[0][sel].imag,
               rep.reconstructed[sel].real, rep.reconstructed[sel].imag])
    write_csv(run.path("trials.csv"), ["trial", "mse"], [np.arange(len(res.mse)), res.mse])
    return {"median_mse": res.median, "mean_mse": float(np.mean(res.mse)), "sigma": res.sigma, "a_so": res.a_so,
            "averages": res.n_averages, "trials": len(res.mse), "samples_per_period": res.samples_per_period,
            "window": window, "trial0": rep.as_dict()}


def cmd_plotdata(cfg, run, seed, threads):
    from .field import SampledField
    from .local import local_map

    src = Path(cfg["input"])
    if not src.is_dir():
        raise CLIError(EXIT_IO, "io", f"input directory not found: {src}")

    def need(name):
        p = src / name
        if not p.exists():
            raise CLIError(EXIT_IO, "io", f"missing input {p}")
        return p

    kind = cfg["kind"]
    if kind == "fig1":
        path = need("field.csv") if (src / "field.csv").exists() else need("field.swf")
        f = run.read(path)
        m = local_map(f, 1.0)
        write_csv(run.path("fig1.csv"), ["x", "k", "kappa", "band_upper", "band_lower"],
                  [f.grid.x, m.k_local, m.kappa_local, np.ones(f.grid.size), -np.ones(f.grid.size)])
        return {"rows": f.grid.size}
    if kind == "fig10":
        p = need("fit.csv")
        run.inputs.append(p)
        data = np.genfromtxt(p, delimiter=",", names=True)
        if set(data.dtype.names) != {"t", "target", "approx", "inside_interval"}:
            raise CLIError(EXIT_IO, "io", f"{p} is not an interval-fit table")
        write_csv(run.path("fig10.csv"), ["t", "target", "approx", "inside_interval"],
                  [data["t"], data["target"], data["approx"], data["inside_interval"].astype(int)])
        return {"rows": len(data)}
    if kind == "carpet":
        planes = sorted(src.glob("plane_*.swf")) + sorted(src.glob("plane_*.csv"))
        if not planes:
            raise CLIError(EXIT_IO, "io", f"no plane_* fields in {src}")
        rep = run.read_json(need("report.json"))
        zs = [p["z"] for p in rep["planes"]]
        for p, z in zip(planes, zs):
            f = run.read(p)
            X, Y = f.grid.mesh()
            write_csv(run.path(f"carpet_{p.stem}.csv"), ["x", "y", "z", "irradiance"], [X, Y, np.full(X.shape, z), f.intensity])
        return {"planes": len(planes)}
    if kind == "gamma":
        p = need("local.csv")
        run.inputs.append(p)
        data = np.genfromtxt(p, delimiter=",", names=True)
        cols = [c for c in ("x", "y", "gamma", "valid") if c in data.dtype.names]
        write_csv(run.path("gamma.csv"), cols, [data[c] for c in cols])
        return {"rows": len(data)}
    p = need("reconstruction.csv")
    run.inputs.append(p)
    data = np.genfromtxt(p, delimiter=",", names=True)
    write_csv(run.path("recovery.csv"), ["x", "truth", "noisy", "recovered"],
              [data["x"], data["truth_re"], data["noisy_re"], data["recovered_re"]])
    return {"rows": len(data)}


COMMANDS = {
    "construct product": cmd_construct_product,
    "construct forced-zeros": cmd_construct_forced_zeros,
    "construct canvas": cmd_construct_canvas,
    "construct taylor": cmd_construct_taylor,
    "fit interval": cmd_fit_interval,
    "fit bessel": cmd_fit_bessel,
    "fit comb": cmd_fit_comb,
    "fit phases": cmd_fit_phases,
    "analyze": cmd_analyze,
    "speckle": cmd_speckle,
    "propagate": cmd_propagate,
    "holo encode": cmd_holo_encode,
    "holo render": cmd_holo_render,
    "holo simulate": cmd_holo_simulate,
    "recover": cmd_recover,
    "plotdata": cmd_plotdata,
}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """Argument errors become exit-2 JSON errors like schema failures."""

    def error(self, message):
        key = None
        if "unrecognized arguments:" in message:
            key = message.split(":", 1)[1].split()[0].lstrip("-").replace("-", "_")
        raise CLIError(EXIT_SCHEMA, "schema", f"{self.prog}: {message}", key=key)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with parameters (flags override it)")
    p.add_argument("--out", default="superwave-out", help="output directory")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default $SUPERWAVE_THREADS or 1)")
    p.add_argument("--format", choices=["binary", "csv"], default="binary", help="field file format")


def _add_schema_flags(p: argparse.ArgumentParser, schema: dict):
    for key, prop in schema["properties"].items():
        flag = "--" + key.replace("_", "-")
        help_ = "JSON value" if prop.get("type") in ("array", "object") or "oneOf" in prop else None
        if "default" in prop:
            help_ = f"{help_ + ', ' if help_ else ''}default {json.dumps(prop['default'])}"
        p.add_argument(flag, dest=key, type=_flag_value, default=argparse.SUPPRESS, help=help_)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="superwave", description="Superoscillation and supergrowth toolkit.")
    parser.add_argument("--version", action="version", version=f"superwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for name, schema in SCHEMAS.items():
        parts = name.split()
        if len(parts) == 1:
            p = sub.add_parser(parts[0])
        else:
            if parts[0] not in groups:
                gp = sub.add_parser(parts[0])
                groups[parts[0]] = gp.add_subparsers(dest="action", required=True)
            p = groups[parts[0]].add_parser(parts[1])
        _add_common(p)
        _add_schema_flags(p, schema)
    return parser


def _split_args(ns: argparse.Namespace):
    command = ns.command + (f" {ns.action}" if getattr(ns, "action", None) else "")
    common = {"config", "out", "seed", "threads", "format", "command", "action"}
    flags = {k: v for k, v in vars(ns).items() if k not in common}
    return command, flags


def _threads(ns) -> int:
    if ns.threads is not None:
        t = ns.threads
    else:
        env = os.environ.get("SUPERWAVE_THREADS")
        try:
            t = int(env) if env else 1
        except ValueError:
            raise CLIError(EXIT_SCHEMA, "schema", f"SUPERWAVE_THREADS must be an integer, got {env!r}", key="threads")
    if t < 1:
        raise CLIError(EXIT_SCHEMA, "schema", "--threads must be at least 1", key="threads")
    return t


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    command, flags = _split_args(ns)
    threads = _threads(ns)
    cfg = {}
    if ns.config:
        try:
            cfg = json.loads(Path(ns.config).read_text())
        except FileNotFoundError:
            raise CLIError(EXIT_IO, "io", f"config file not found: {ns.config}")
        except json.JSONDecodeError as exc:
            raise CLIError(EXIT_SCHEMA, "schema", f"config is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise CLIError(EXIT_SCHEMA, "schema", "config must be a JSON object")
    cfg = validate_config(command, {**cfg, **flags})
    out = Path(ns.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(EXIT_IO, "io", f"cannot create output directory {out}: {exc}")
    chash = config_hash(command, cfg, ns.seed)
    manifest_path = out / "manifest.json"
    notes = []
    if manifest_path.exists():
        try:
            old = json.loads(manifest_path.read_text())
            if old.get("config_hash") == chash:
                notes.append(f"identical configuration already run in {out}; outputs are overwritten")
                print(f"warning: {notes[-1]}", file=sys.stderr)
        except (OSError, json.JSONDecodeError):
            pass
    r = Run(out, ns.format)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught, threadpool_limits(threads):
        warnings.simplefilter("always")
        report = COMMANDS[command](cfg, r, ns.seed, threads)
    wall = time.perf_counter() - t0
    notes += sorted({str(w.message) for w in caught})
    if report is not None:
        write_json(r.path("report.json"), report)
    manifest = {
        "tool": "superwave", "version": __version__, "command": command, "config": cfg, "seed": ns.seed,
        "threads": threads, "config_hash": chash, "wall_time_s": wall, "warnings": notes,
        "inputs": {str(p): sha256(p) for p in r.inputs if p.exists()},
        "outputs": {p.name: sha256(p) for p in r.outputs},
    }
    write_json(manifest_path, manifest)
    return 0


def main(argv=None) -> int:
    try:
        code = run(argv)
    except CLIError as exc:
        _report_error(exc.kind, str(exc), **exc.extra)
        code = exc.code
    except FieldFormatError as exc:
        _report_error("io", str(exc))
        code = EXIT_IO
    except OSError as exc:
        _report_error("io", str(exc))
        code = EXIT_IO
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        _report_error("numeric", f"{type(exc).__name__}: {exc}")
        code = EXIT_NUMERIC
    return code


def _report_error(kind: str, message: str, **extra):
    print(json.dumps({"error": kind, "message": message, **{k: v for k, v in extra.items() if v is not None}}), file=sys.stderr)
