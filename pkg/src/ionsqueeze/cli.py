"""Command-line runner: YAML configuration in, CSV tables and a YAML summary out.

Usage::

    ionsqueeze CONFIG [--output DIR] [--order before|after] [--oracle] [-v]

Exit status is 0 on success, 2 for configuration errors, 3 for physics or
numerical errors and 4 when the Fock oracle is under-truncated.
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from scipy import constants

from . import fock_oracle as fock
from . import protocols, su11
from .core import GammaSchedule, PhysicalParams, beryllium9
from .errors import ConfigError, IonSqueezeError, UnderTruncationError

log = logging.getLogger("ionsqueeze")

OUTPUT_ENV = "IONSQUEEZE_OUTPUT"
PROTOCOLS = ("freq_change", "separation", "sweep_freq_change", "oracle_crosscheck")
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_TRUNCATION = 0, 2, 3, 4

FREQ_TOL = 1e-9
SEPARATION_PHONON_TOL = 0.02
ORACLE_TOL = 1e-6

# key -> (type, default); a dict value describes a nested section
_RANGE = {"start": (float, None), "stop": (float, None), "num": (int, None),
          "spacing": (str, "linear")}
SCHEMA: dict[str, Any] = {
    "protocol": (str, None),
    "output": (str, None),
    "sample_points": (int, 201),
    "seed": (int, 0),
    "workers": (int, 1),
    "oracle": (bool, False),
    "oracle_truncation": (int, fock.DEFAULT_TRUNCATION),
    "physical": {
        "species": (str, "Be9"),
        "mass_amu": (float, None),
        "charge_e": (float, None),
        "omega0_hz": (float, 1.0e6),
    },
    "freq_change": {
        "gamma_final": (float, 1.0),
        "t_f_us": (float, 0.5),
        "with_preparation": (bool, True),
        "order": (str, "before"),
    },
    "separation": {
        "t_p_us": (float, 3.0),
        "t_s1_us": (float, 0.5),
        "t_s2_us": (float, None),
        "t_s3_us": (float, 1.0),
        "eta_us": (float, 0.5),
        "target_separation_um": (float, 100.0),
        "order": (str, "before"),
        "str_target": (str, "omega0"),
    },
    "sweep_freq_change": {
        "gamma_final": (float, 1.0),
        "t_f_us": _RANGE,
        "with_preparation": (bool, False),
        "order": (str, "before"),
        "check_monotone": (bool, True),
    },
    "oracle_crosscheck": {
        "n_schedules": (int, 5),
        "max_gamma": (float, 1.0),
        "max_duration": (float, 10.0),
        "truncation": (int, fock.DEFAULT_TRUNCATION),
    },
}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads YAML 1.2 floats such as ``1e6``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)\.?[0-9_]*(?:[eE][-+]?[0-9]+)?$
               |^[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?$
               |^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$""", re.X),
    list("-+0123456789."),
)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; ``raw`` holds the normalized mapping."""

    protocol: str
    physical: PhysicalParams
    params: dict
    output: Path
    sample_points: int
    seed: int
    raw: dict


def _mark(marks, path):
    m = marks.get(tuple(path))
    return (m.line + 1, m.column + 1) if m is not None else (None, None)


def _collect_marks(node, prefix=(), out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = prefix + (key.value,)
            out[path] = key.start_mark
            _collect_marks(value, path, out)
    return out


def _coerce(value, typ, path, marks):
    line, col = _mark(marks, path)
    name = ".".join(path)
    if value is None:
        return None
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false", line, col)
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer", line, col)
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number", line, col)
        if not math.isfinite(value):
            raise ConfigError(f"{name} must be finite", line, col)
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string", line, col)
    return value


def _validate(data, schema, marks, path=()):
    if not isinstance(data, dict):
        line, col = _mark(marks, path)
        raise ConfigError(f"{'.'.join(path) or 'document'} must be a mapping", line, col)
    out = {}
    for key in data:
        if key not in schema:
            line, col = _mark(marks, path + (key,))
            raise ConfigError(f"unknown key {'.'.join(path + (key,))!r}", line, col)
    for key, spec in schema.items():
        value = data.get(key)
        if isinstance(spec, dict):
            if value is None and spec is _RANGE:
                out[key] = None
            else:
                out[key] = _validate({} if value is None else value, spec, marks, path + (key,))
        else:
            typ, default = spec
            value = _coerce(value, typ, path + (key,), marks)
            out[key] = default if value is None else value
    return out


def load_config(path, output_override=None, order_override=None, oracle=None) -> RunConfig:
    """Parse and strictly validate a YAML run configuration.

    A summary file written by a previous run is accepted as well: its embedded
    ``config`` block is used.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(str(exc.problem), mark.line + 1 if mark else None,
                          mark.column + 1 if mark else None) from exc
    marks = _collect_marks(node) if node is not None else {}
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
        marks = {k[1:]: v for k, v in marks.items() if k and k[0] == "config"}
    raw = _validate(data if data is not None else {}, SCHEMA, marks)

    if raw["protocol"] not in PROTOCOLS:
        line, col = _mark(marks, ("protocol",))
        raise ConfigError(f"protocol must be one of {', '.join(PROTOCOLS)}", line, col)
    if order_override is not None:
        for section in ("freq_change", "separation", "sweep_freq_change"):
            raw[section]["order"] = order_override
    if oracle is not None:
        raw["oracle"] = raw["oracle"] or oracle
    if output_override is not None:
        raw["output"] = str(output_override)
    if raw["output"] is None:
        raw["output"] = os.environ.get(OUTPUT_ENV, "ionsqueeze-output")
    if raw["sample_points"] < 1:
        raise ConfigError("sample_points must be at least 1", *_mark(marks, ("sample_points",)))
    _check_positive(raw, marks)

    phys = raw["physical"]
    base = beryllium9(2 * math.pi * phys["omega0_hz"])
    if phys["species"] != "Be9" and phys["mass_amu"] is None:
        raise ConfigError(f"unknown species {phys['species']!r}; give mass_amu",
                          *_mark(marks, ("physical", "species")))
    mass = base.mass if phys["mass_amu"] is None else phys["mass_amu"] * constants.atomic_mass
    charge = base.charge if phys["charge_e"] is None else phys["charge_e"] * constants.e
    try:
        physical = PhysicalParams(mass=mass, charge=charge, omega0=base.omega0)
    except IonSqueezeError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(raw["protocol"], physical, raw[raw["protocol"]], Path(raw["output"]),
                     raw["sample_points"], raw["seed"], raw)


def _check_positive(raw, marks):
    positive = [("physical", "omega0_hz"), ("physical", "mass_amu"), ("physical", "charge_e"),
                ("separation", "target_separation_um"), ("oracle_crosscheck", "max_duration"),
                ("oracle_crosscheck", "truncation"), ("oracle_crosscheck", "n_schedules")]
    non_negative = [("freq_change", "t_f_us"), ("separation", "t_p_us"),
                    ("separation", "t_s1_us"), ("separation", "t_s2_us"),
                    ("separation", "t_s3_us"), ("separation", "eta_us")]
    for path in positive + non_negative:
        value = raw[path[0]][path[1]]
        if value is None:
            continue
        bad = value <= 0 if path in positive else value < 0
        if bad:
            kind = "positive" if path in positive else "non-negative"
            raise ConfigError(f"{'.'.join(path)} must be {kind}", *_mark(marks, path))
    for section in ("freq_change", "separation", "sweep_freq_change"):
        if raw[section]["order"] not in ("before", "after"):
            raise ConfigError(f"{section}.order must be 'before' or 'after'",
                              *_mark(marks, (section, "order")))
    rng = raw["sweep_freq_change"]["t_f_us"]
    if raw["protocol"] == "sweep_freq_change":
        if rng is None or any(rng[k] is None for k in ("start", "stop", "num")):
            raise ConfigError("sweep_freq_change.t_f_us needs start, stop and num",
                              *_mark(marks, ("sweep_freq_change",)))
        if rng["num"] < 1 or rng["start"] < 0 or rng["stop"] < rng["start"]:
            raise ConfigError("sweep_freq_change.t_f_us range is invalid",
                              *_mark(marks, ("sweep_freq_change", "t_f_us")))
        if rng["spacing"] not in ("linear", "log") or (rng["spacing"] == "log" and rng["start"] <= 0):
            raise ConfigError("spacing must be 'linear' or 'log' (log needs start > 0)",
                              *_mark(marks, ("sweep_freq_change", "t_f_us", "spacing")))


# -- output helpers ---------------------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(x):.12e}"


def write_table(path: Path, columns: dict[str, np.ndarray]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    rows = zip(*(np.asarray(columns[n]) for n in names))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_summary(path: Path, summary: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        yaml.safe_dump(_plain(summary), fh, sort_keys=False, default_flow_style=False)


def _freq(omega):
    return {"rad_s": omega, "hz": omega / (2 * math.pi)}


# -- protocol runners -----------------------------------------------------------------------


def _run_freq_change(cfg: RunConfig) -> dict:
    p = cfg.params
    w0 = cfg.physical.omega0
    t_f = p["t_f_us"] * 1e-6
    rep = protocols.run_frequency_change(w0, p["gamma_final"], t_f, p["with_preparation"],
                                         p["order"], samples=cfg.sample_points)
    # a zero-length ramp is a sudden jump to the final well
    schedule_gamma = [p["gamma_final"] * math.sin(math.pi * t / (2 * t_f)) ** 2 if t_f > 0
                      else p["gamma_final"] for t in rep.times]
    write_table(cfg.output / "timeseries.csv", {
        "time_us": rep.times * 1e6,
        "gamma": schedule_gamma,
        "n_omega0": rep.phonons_initial,
        "n_final": rep.phonons_final,
    })
    n_final = rep.final_phonons_final
    result = {
        "r_p": rep.r_p,
        "theta_m": rep.theta_m,
        "u_s_squeeze": rep.u_s.squeeze_parameter,
        "final_n_omega0": rep.final_phonons_initial,
        "final_n_final_basis": n_final,
        "final_frequency": _freq(w0 * (1 + p["gamma_final"])),
    }
    checks = {}
    if p["with_preparation"]:
        checks["final_ground_state"] = {"value": n_final, "tolerance": FREQ_TOL,
                                        "pass": abs(n_final) < FREQ_TOL}
    if cfg.raw["oracle"]:
        N = cfg.raw["oracle_truncation"]
        angles = su11.euler_decompose(rep.preparation)
        if p["order"] == "before":
            state = fock.squeezed_vacuum(angles.r_s, angles.theta_a, N)
            state = fock.evolve_schedule(state, _ramp(p, t_f), w0)
            n_oracle = fock.phonon_number(state, p["gamma_final"])
            checks["fock_oracle"] = {"value": abs(n_oracle - n_final), "tolerance": ORACLE_TOL,
                                     "pass": abs(n_oracle - n_final) < ORACLE_TOL}
            result["fock_final_n_final_basis"] = n_oracle
        else:
            log.warning("oracle cross-check of the 'after' order is not implemented; skipped")
    return {"result": result, "checks": checks}


def _ramp(p, t_f):
    from .core import frequency_ramp

    return frequency_ramp(p["gamma_final"], t_f)


def _run_separation(cfg: RunConfig) -> dict:
    p = cfg.params
    us = 1e-6
    t_s2 = None if p["t_s2_us"] is None else p["t_s2_us"] * us
    plan = protocols.plan_separation(
        cfg.physical, p["t_p_us"] * us, p["t_s1_us"] * us, p["t_s3_us"] * us, p["eta_us"] * us,
        target_separation=p["target_separation_um"] * 1e-6, t_s2=t_s2, order=p["order"],
        str_target=p["str_target"])
    res = protocols.run_separation(plan, samples=max(cfg.sample_points, 2))
    tr, rep = res.trajectory, res.report
    write_table(cfg.output / "timeseries.csv", {
        "time_us": tr.times / us,
        "pos_ion1_um": tr.positions[0] / 1e-6,
        "pos_ion2_um": tr.positions[1] / 1e-6,
        "well_ion1_um": tr.well_centers[0] / 1e-6,
        "well_ion2_um": tr.well_centers[1] / 1e-6,
        "well_strength": tr.well_strength,
        "n_com_omega0": rep.phonons_com_omega0,
        "n_str_sqrt3omega0": rep.phonons_str_sqrt3,
        "n_str_omega0": rep.phonons_str_omega0,
    })
    g_c, g_s, th_c, th_s = plan.drives
    result = {
        "t_s2_us": plan.t_s2 / us,
        "t_f_us": plan.t_f / us,
        "r_p_com": plan.r_p_com,
        "theta_m_com": plan.theta_m_com,
        "r_p_str": plan.r_p_str,
        "theta_m_str": plan.theta_m_str,
        "g_com": _freq(g_c),
        "g_str": _freq(g_s),
        "theta_I_com": th_c,
        "theta_I_str": th_s,
        "final_separation_um": res.final_separation / 1e-6,
        "final_n_com_omega0": res.total_com,
        "final_n_str_omega0": res.total_str,
        "final_n_str_sqrt3omega0": res.total_str_sqrt3,
        "quantum_n_com": res.quantum_com,
        "quantum_n_str": res.quantum_str,
        "classical_residual_n_com": res.residual_com,
        "classical_residual_n_str": res.residual_str,
        "classical_residual_amplitude": res.residual_amplitude,
        "final_velocities_m_s": list(tr.velocities[:, -1]),
        "max_extent_over_half_separation": res.max_validity_ratio,
    }
    checks = {
        "quantum_ground_state": {"value": max(res.quantum_com, res.quantum_str),
                                 "tolerance": FREQ_TOL,
                                 "pass": max(res.quantum_com, res.quantum_str) < FREQ_TOL},
        "final_phonons": {"value": max(res.total_com, res.total_str),
                          "tolerance": SEPARATION_PHONON_TOL,
                          "pass": max(res.total_com, res.total_str) < SEPARATION_PHONON_TOL},
        "quadratic_coulomb_validity": {"value": res.max_validity_ratio,
                                       "tolerance": protocols.VALIDITY_LIMIT,
                                       "pass": res.validity_ok},
    }
    if cfg.raw["oracle"]:
        checks["fock_oracle_com"] = _separation_oracle(cfg, plan, res)
    return {"result": result, "checks": checks}


def _separation_oracle(cfg, plan, res):
    """Exact-modulation Fock run of the COM mode against the Bogoliubov result."""
    N = cfg.raw["oracle_truncation"]
    w0 = cfg.physical.omega0
    drive = plan.drive_com
    state = fock.vacuum(N)
    if drive is not None and drive.g > 0:
        state = fock.evolve_exact_modulation(state, drive.g, drive.theta_I, w0, drive.t_p)
    state = fock.evolve_schedule(state, plan.schedule, w0, (plan.t_p, plan.t_f))
    n_oracle = fock.phonon_number(state, 0.0)
    return {"value": n_oracle, "bogoliubov_rwa": res.quantum_com,
            "note": "exact modulation keeps counter-rotating terms; the mismatch grows as (g/omega0)^2 and with squeezing"}


def _t_f_grid(rng) -> np.ndarray:
    if rng["num"] == 1:
        return np.array([rng["start"]])
    if rng["spacing"] == "log":
        return np.geomspace(rng["start"], rng["stop"], rng["num"])
    return np.linspace(rng["start"], rng["stop"], rng["num"])


def sweep(cfg: RunConfig):
    """Final occupation in the final well for each ``t_f`` of a sweep configuration.

    Returns ``(t_f_us, n_final)`` arrays ordered by ``t_f`` whatever the
    number of workers.
    """
    p = cfg.params
    t_us = _t_f_grid(p["t_f_us"])
    values = protocols.sweep_frequency_change(cfg.physical.omega0, p["gamma_final"], t_us * 1e-6,
                                              p["with_preparation"], p["order"],
                                              workers=cfg.raw["workers"])
    return t_us, values


def _run_sweep(cfg: RunConfig) -> dict:
    p = cfg.params
    t_us, values = sweep(cfg)
    write_table(cfg.output / "sweep.csv", {"t_f_us": t_us, "n_final": values})
    monotone = bool(np.all(np.diff(values) <= 1e-12))
    result = {"points": len(values), "first_n_final": values[0], "last_n_final": values[-1],
              "max_n_final": float(np.max(values)), "monotone_decreasing": monotone}
    checks = {}
    if p["check_monotone"] and not p["with_preparation"]:
        checks["monotone_decreasing"] = {"pass": monotone}
    if p["with_preparation"]:
        worst = float(np.max(np.abs(values)))
        checks["prepared_ground_state"] = {"value": worst, "tolerance": FREQ_TOL,
                                           "pass": worst < FREQ_TOL}
    return {"result": result, "checks": checks}


def random_schedule(rng: np.random.Generator, max_gamma: float, max_duration: float,
                    omega0: float = 1.0) -> GammaSchedule:
    """Smooth random ramp: one to three sin^2 pieces with |gamma| <= max_gamma.

    Each piece ramps from the previous endpoint to a new random level, so
    ``gamma`` is continuous.  Durations are in units of ``1/omega0``.
    """
    n = int(rng.integers(1, 4))
    durations = rng.uniform(0.2, 1.0, n)
    durations *= rng.uniform(0.3, 1.0) * max_duration / durations.sum() / omega0
    levels = rng.uniform(-max_gamma, max_gamma, n)
    segs, t, prev = [], 0.0, 0.0
    for dur, level in zip(durations, levels):
        segs.append(_blend_segment(t, t + dur, prev, level))
        t += dur
        prev = level
    return _BlendSchedule(segs)


class _BlendSchedule:
    """Piecewise ``g0 + (g1 - g0) sin^2`` ramps; exposes the ``pieces()`` interface."""

    def __init__(self, segments):
        self.segments = segments

    @property
    def total_duration(self):
        return self.segments[-1][1]

    def pieces(self):
        return [(a, b, fn) for a, b, fn in self.segments]

    def __call__(self, t):
        for a, b, fn in self.segments:
            if a <= t <= b:
                return fn(t)
        raise ValueError(t)

    def to_dict(self):
        return {"segments": [[a, b] for a, b, _ in self.segments]}


def _blend_segment(a, b, g0, g1):
    def fn(t):
        return g0 + (g1 - g0) * math.sin(math.pi * (t - a) / (2 * (b - a))) ** 2

    return (a, b, fn)


def _run_oracle(cfg: RunConfig) -> dict:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rows = {"index": [], "duration": [], "basis_gamma": [], "n_su11_omega0": [],
            "n_fock_omega0": [], "n_su11_basis": [], "n_fock_basis": []}
    for i in range(p["n_schedules"]):
        sched = random_schedule(rng, p["max_gamma"], p["max_duration"])
        basis = float(rng.uniform(-0.5, 1.0))
        b = su11.evolve(sched, 1.0)
        state = fock.evolve_schedule(fock.vacuum(p["truncation"]), sched, 1.0)
        rows["index"].append(i)
        rows["duration"].append(sched.total_duration)
        rows["basis_gamma"].append(basis)
        rows["n_su11_omega0"].append(su11.phonon_number(b, 0.0))
        rows["n_fock_omega0"].append(fock.phonon_number(state, 0.0))
        rows["n_su11_basis"].append(su11.phonon_number(b, basis))
        rows["n_fock_basis"].append(fock.phonon_number(state, basis))
    write_table(cfg.output / "oracle.csv", rows)
    diff = max(np.max(np.abs(np.subtract(rows["n_su11_omega0"], rows["n_fock_omega0"]))),
               np.max(np.abs(np.subtract(rows["n_su11_basis"], rows["n_fock_basis"]))))
    return {"result": {"max_abs_difference": float(diff)},
            "checks": {"oracle_agreement": {"value": float(diff), "tolerance": ORACLE_TOL,
                                            "pass": bool(diff < ORACLE_TOL)}}}


RUNNERS = {
    "freq_change": _run_freq_change,
    "separation": _run_separation,
    "sweep_freq_change": _run_sweep,
    "oracle_crosscheck": _run_oracle,
}


def execute(cfg: RunConfig) -> dict:
    """Run a validated configuration, write its outputs and return the summary."""
    cfg.output.mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s", cfg.protocol, cfg.output)
    out = RUNNERS[cfg.protocol](cfg)
    summary = {"protocol": cfg.protocol, **out, "config": copy.deepcopy(cfg.raw)}
    write_summary(cfg.output / "summary.yaml", summary)
    return summary


def run(config_path, output=None, order=None, oracle=None) -> int:
    """Load, execute and map errors onto exit codes."""
    try:
        cfg = load_config(config_path, output, order, oracle)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        execute(cfg)
    except UnderTruncationError as exc:
        print(f"under-truncated Fock space: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except IonSqueezeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ionsqueeze", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="YAML run configuration (or a previous summary.yaml)")
    ap.add_argument("-o", "--output", help=f"output directory (overrides config and ${OUTPUT_ENV})")
    ap.add_argument("--order", choices=("before", "after"),
                    help="apply the preparation squeeze before or after the main operation")
    ap.add_argument("--oracle", action="store_true", default=None,
                    help="cross-check the run with the Fock-space oracle (slow)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.config, args.output, args.order, args.oracle)


if __name__ == "__main__":
    sys.exit(main())
