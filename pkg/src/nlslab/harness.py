"""Configuration ingestion, run dispatch, persistence and sweeps.

A run config is one JSON document with sections grid / params / solver /
dynamics plus a seed and an output directory; unknown keys anywhere are hard
errors.  Every run writes its artifacts plus a manifest.json whose file list
carries content hashes; identical (config, command, seed) reproduce
bit-identical numeric outputs.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks
from .descent import SolverOptions
from .dynamics import PropagatorConfig, evolve, stability_experiment
from .energy import ModelParams, validate
from .errors import NumericalError, ValidationError
from .fields import GridSpec, file_sha256, save_field
from .spectral import spectrum_report
from .variational import (component_bound_check, minimize_pair,
                          minimize_single, scaling_probe, subadd_probe,
                          theta_scaling_check)

COMMANDS = ("minimize", "minimize-single", "spectrum", "rearrange-check",
            "evolve", "stability", "probe", "selftest")

_SECTION_KEYS = {
    "grid": {"n1", "n2", "n3", "L1", "L2", "L3"},
    "params": {"mu1", "mu2", "beta", "p1", "p2", "r1", "r2", "a1", "a2"},
    "solver": {"tau0", "armijo", "tol_energy", "tol_residual", "max_iter"},
    "dynamics": {"dt", "T", "linear_tol", "record_every"},
}

DEFAULT_PARAMS = ModelParams(mu1=1.0, mu2=1.0, beta=1.0, p1=3.0, p2=3.0,
                             r1=1.5, r2=1.5, a1=1.0, a2=1.0)


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: ModelParams
    solver: SolverOptions
    dynamics: PropagatorConfig
    seed: int
    outdir: Path

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "params": self.params.to_dict(),
            "solver": self.solver.to_dict(),
            "dynamics": self.dynamics.to_dict(),
            "seed": self.seed,
            "outdir": str(self.outdir),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        known_top = set(_SECTION_KEYS) | {"seed", "outdir"}
        unknown = set(doc) - known_top
        if unknown:
            raise ValidationError([f"unknown config key: {k}" for k in sorted(unknown)])
        for section, keys in _SECTION_KEYS.items():
            extra = set(doc.get(section, {})) - keys
            if extra:
                raise ValidationError(
                    [f"unknown config key: {section}.{k}" for k in sorted(extra)])
        try:
            grid = GridSpec.from_dict(doc["grid"]) if "grid" in doc else GridSpec.default()
            solver = SolverOptions.from_dict(doc.get("solver", {}))
            dynamics = PropagatorConfig.from_dict(
                doc.get("dynamics", {"dt": 1e-3, "T": 1.0}))
        except (TypeError, ValueError) as exc:
            raise ValidationError(str(exc)) from exc
        params = (ModelParams.from_dict(doc["params"]) if "params" in doc
                  else DEFAULT_PARAMS)
        return cls(grid=grid, params=params, solver=solver, dynamics=dynamics,
                   seed=int(doc.get("seed", 0)),
                   outdir=Path(doc.get("outdir", "runs")))

    @classmethod
    def default(cls) -> "RunConfig":
        return cls.from_dict({})


@dataclass
class RunRecord:
    config: dict
    command: str
    options: dict
    started: str
    finished: str = ""
    results: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "command": self.command,
                "options": self.options, "started": self.started,
                "finished": self.finished, "results": self.results,
                "files": self.files}


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)!r}")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _write_trace_csv(path: Path, result) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "energy", "residual", "tau"])
        n = len(result.residuals) if result.residuals is not None else 0
        for i, e in enumerate(result.trace):
            res = result.residuals[i - 1] if 0 < i <= n else ""
            tau = result.taus[i - 1] if 0 < i <= n else ""
            writer.writerow([i, f"{e:.17g}",
                             f"{res:.17g}" if res != "" else "",
                             f"{tau:.17g}" if tau != "" else ""])


def _write_trajectory_csv(path: Path, traj) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mass1", "mass2", "energy", "distance"])
        dist = traj.distance
        for i, t in enumerate(traj.times):
            d = f"{dist[i]:.17g}" if dist is not None else ""
            writer.writerow([f"{t:.17g}", f"{traj.mass1[i]:.17g}",
                             f"{traj.mass2[i]:.17g}", f"{traj.energy[i]:.17g}", d])


def _minimize_results(res) -> dict:
    b = res.energy
    return {
        "energy": {"kinetic": b.kinetic, "potential": b.potential,
                   "self1": b.self1, "self2": b.self2, "cross": b.cross,
                   "total": b.total},
        "multipliers": {"lambda1": res.multipliers.lambda1,
                        "lambda2": res.multipliers.lambda2},
        "iterations": res.iterations,
        "converged": res.converged,
    }


def run(config: RunConfig, command: str, options: dict | None = None) -> RunRecord:
    """Dispatch a command, persist artifacts and the manifest, return the record."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")
    options = dict(options or {})
    validate(config.params)

    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    record = RunRecord(config=config.to_dict(), command=command,
                       options=options, started=_now())
    artifacts: list[Path] = []

    if command == "minimize":
        res = minimize_pair(config.params, "gaussian", config.solver,
                            grid=config.grid, seed=config.seed)
        record.results = _minimize_results(res)
        trace = outdir / "energy_trace.csv"
        _write_trace_csv(trace, res)
        artifacts.append(trace)
        artifacts.extend(save_field(res.state.first, outdir / "minimizer_1"))
        artifacts.extend(save_field(res.state.second, outdir / "minimizer_2"))
    elif command == "minimize-single":
        res = minimize_single(config.params.mu1, config.params.p1,
                              config.params.a1, config.solver,
                              grid=config.grid, seed=config.seed)
        record.results = _minimize_results(res)
        trace = outdir / "energy_trace.csv"
        _write_trace_csv(trace, res)
        artifacts.append(trace)
        artifacts.extend(save_field(res.state.first, outdir / "minimizer_1"))
    elif command == "spectrum":
        record.results = spectrum_report(config.grid, config.solver)
        spath = outdir / "spectrum.json"
        _write_json(spath, record.results)
        artifacts.append(spath)
    elif command == "rearrange-check":
        results, elapsed = checks.rearrange_suite(
            grid=config.grid, n_fields=int(options.get("n_fields", 100)),
            seed=config.seed, r1=config.params.r1, r2=config.params.r2)
        results += checks.strict_coupled_suite(grid=config.grid,
                                               seed=config.seed)
        record.results = {"elapsed_seconds": elapsed,
                          "checks": [r.to_dict() for r in results],
                          "passed": all(r.passed for r in results)}
        rpath = outdir / "rearrange_check.json"
        _write_json(rpath, record.results)
        artifacts.append(rpath)
        if not record.results["passed"]:
            raise NumericalError("rearrangement property suite failed")
    elif command in ("evolve", "stability"):
        if command == "evolve":
            res = minimize_pair(config.params, "gaussian", config.solver,
                                grid=config.grid, seed=config.seed)
            traj = evolve(res.state, config.params, config.dynamics)
        else:
            res = minimize_pair(config.params, "gaussian", config.solver,
                                grid=config.grid, seed=config.seed)
            traj = stability_experiment(res, float(options.get("delta", 1e-2)),
                                        config.params, config.dynamics,
                                        seed=config.seed)
        tpath = outdir / "trajectory.csv"
        _write_trajectory_csv(tpath, traj)
        artifacts.append(tpath)
        record.results = {
            "steps": int(round(config.dynamics.T / config.dynamics.dt)),
            "mass_drift1": float(np.max(np.abs(traj.mass1 - traj.mass1[0]))),
            "mass_drift2": float(np.max(np.abs(traj.mass2 - traj.mass2[0]))),
            "energy_drift": float(np.max(np.abs(traj.energy - traj.energy[0]))),
        }
        if traj.distance is not None:
            record.results["max_distance"] = float(np.max(traj.distance))
    elif command == "probe":
        kind = options.get("kind", "subadd")
        if kind == "subadd":
            splits = options.get("splits") or [[config.params.a1 / 2,
                                                config.params.a2 / 2]]
            rep = subadd_probe(config.params,
                               [tuple(map(float, s)) for s in splits],
                               grid=config.grid, opts=config.solver,
                               seed=config.seed)
            record.results = rep.to_dict()
        elif kind == "theta":
            theta = float(options.get("theta", 2.0))
            lhs, rhs = theta_scaling_check(config.params.mu1, config.params.p1,
                                           config.params.a1, theta,
                                           grid=config.grid, opts=config.solver,
                                           seed=config.seed)
            record.results = {"theta": theta, "m_scaled": lhs,
                              "theta_times_m": rhs, "gap": rhs - lhs}
        elif kind == "scaling":
            lambdas = options.get("lambdas") or np.geomspace(0.05, 0.8, 12).tolist()
            curve = scaling_probe(config.params.mu1, config.params.p1,
                                  config.params.a1,
                                  [float(x) for x in lambdas])
            record.results = curve.to_dict()
        elif kind == "lemma41-3":
            record.results = component_bound_check(config.params,
                                                   grid=config.grid,
                                                   opts=config.solver,
                                                   seed=config.seed)
        else:
            raise ValidationError(f"unknown probe kind {kind!r}")
        ppath = outdir / f"probe_{kind}.json"
        _write_json(ppath, record.results)
        artifacts.append(ppath)
    elif command == "selftest":
        results, passed = checks.selftest(seed=config.seed)
        record.results = {"checks": [r.to_dict() for r in results],
                          "passed": passed}
        spath = outdir / "selftest.json"
        _write_json(spath, record.results)
        artifacts.append(spath)
        if not passed:
            raise NumericalError("selftest failed")

    record.finished = _now()
    record.files = [{"path": p.name, "sha256": file_sha256(p),
                     "bytes": p.stat().st_size} for p in artifacts]
    _write_json(outdir / "manifest.json", record.to_dict())
    return record


_HEADLINES = {
    "minimize": lambda r: r["energy"]["total"],
    "minimize-single": lambda r: r["energy"]["total"],
    "spectrum": lambda r: r["Lambda0"],
    "evolve": lambda r: r["energy_drift"],
    "stability": lambda r: r.get("max_distance", ""),
    "rearrange-check": lambda r: float(r["passed"]),
    "selftest": lambda r: float(r["passed"]),
    "probe": lambda r: r.get("gap", r.get("gap_first_linear", "")),
}


def _set_axis(doc: dict, axis: str, value: float) -> dict:
    """Assign a numeric config field named bare or as section.key."""
    doc = json.loads(json.dumps(doc))
    if "." in axis:
        section, key = axis.split(".", 1)
        if section not in _SECTION_KEYS or key not in _SECTION_KEYS[section]:
            raise ValidationError(f"invalid sweep axis {axis!r}")
        doc.setdefault(section, {})[key] = value
        return doc
    if axis == "seed":
        doc["seed"] = int(value)
        return doc
    for section, keys in _SECTION_KEYS.items():
        if axis in keys:
            doc.setdefault(section, {})[axis] = value
            return doc
    raise ValidationError(f"invalid sweep axis {axis!r}")


def sweep(base: RunConfig, axis: str, values, command: str,
          options: dict | None = None, workers: int | None = None) -> list[RunRecord]:
    """One run per axis value in its own subdirectory, plus a summary CSV."""
    values = list(values)
    if workers is None:
        workers = int(os.environ.get("NLSLAB_WORKERS", "1"))
    workers = max(1, min(workers, max(1, len(values))))

    base_doc = base.to_dict()
    configs = []
    for v in values:
        doc = _set_axis(base_doc, axis, v)
        doc["outdir"] = str(Path(base.outdir) / f"{axis.replace('.', '_')}={v:g}")
        configs.append(RunConfig.from_dict(doc))

    if workers == 1:
        records = [run(cfg, command, options) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda cfg: run(cfg, command, options),
                                    configs))

    if values:
        headline = _HEADLINES[command]
        summary = Path(base.outdir) / "sweep_summary.csv"
        summary.parent.mkdir(parents=True, exist_ok=True)
        with summary.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([axis, "headline"])
            for v, rec in zip(values, records):
                h = headline(rec.results)
                writer.writerow([f"{v:.17g}",
                                 f"{h:.17g}" if isinstance(h, float) else h])
    return records
