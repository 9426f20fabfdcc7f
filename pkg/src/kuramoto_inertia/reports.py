"""Run orchestration, bound monitors, and deterministic artifact writers.

Artifacts: ``trajectory.csv`` with the fixed column set
``t, theta_0..theta_{N-1}, omega_0..omega_{N-1}, R_p, phi_p, E_K, E_P,
D_theta, D_omega, F``; ``final_state.csv`` (snapshot: theta,omega);
``report.json`` with the top-level keys ``config_hash, verdicts, sync_time,
classification, bound_violations, decay_fits, timings`` (plus an
``experiment`` payload for non-single kinds); ``summary.csv`` one-line
aggregate.  Floats are written with 17 significant digits so reruns are
byte-identical; files land via temp-file + rename.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (
    check_diameter_condition,
    check_large_coupling,
    check_near_uniform,
    classify_lock,
    detect_sync,
    fit_decay,
)
from .config import ResolvedConfig, sweep_children
from .errors import ValidationError, VariantError
from .integrate import Trajectory, simulate
from .meanfield import (
    kinetic_sync_experiment,
    meanfield_convergence_experiment,
    stability_experiment,
)
from .model import ModelVariant
from .observables import TrajectoryObservables, frequency_bound, trajectory_observables

MONITOR_SLACK = 1e-6


def fmt(x) -> str:
    """17-significant-digit decimal, round-trip exact for doubles."""
    return format(float(x), ".17g")


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def json_ready(obj):
    """Convert report payloads to JSON-safe values (nonfinite floats -> strings)."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class RunReport:
    config_hash: str
    verdicts: list = field(default_factory=list)
    sync_time: Optional[float] = None
    classification: Optional[dict] = None
    bound_violations: list = field(default_factory=list)
    decay_fits: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    final_values: dict = field(default_factory=dict)  # internal, not serialized

    def to_json(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "verdicts": self.verdicts,
            "sync_time": self.sync_time,
            "classification": self.classification,
            "bound_violations": self.bound_violations,
            "decay_fits": self.decay_fits,
            "timings": self.timings,
        }
        if self.experiment:
            payload["experiment"] = self.experiment
        return json.dumps(json_ready(payload), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# monitors


def _first_violation(name, traj, over, values, bounds):
    """First sample (and oscillator, if 2-D) where `over` is positive."""
    if over.ndim == 1:
        bad = np.where(over > 0.0)[0]
        if bad.size == 0:
            return None
        k = int(bad[0])
        return {"monitor": name, "time": float(traj.times[k]),
                "value": float(values[k]), "bound": float(bounds[k])}
    mask = over > 0.0
    rows = np.where(mask.any(axis=1))[0]
    if rows.size == 0:
        return None
    k = int(rows[0])
    i = int(np.argmax(mask[k]))
    return {"monitor": name, "time": float(traj.times[k]),
            "value": float(values[k, i]), "bound": float(bounds[i])}


def evaluate_monitors(traj: Trajectory, obs: TrajectoryObservables,
                      enabled) -> list:
    """Check enabled a priori bounds at every sample; report first violations."""
    params = traj.params
    homogeneous = params.variant() is ModelVariant.HOMOGENEOUS_ALL_TO_ALL
    violations = []
    for name in enabled:
        if name == "frequency_bound":
            bound = frequency_bound(traj.initial_state, params)
            values = np.abs(traj.omegas)
            over = values - bound[np.newaxis, :] - MONITOR_SLACK
            hit = _first_violation(name, traj, over, values, bound)
        elif name == "kinetic_energy_bound":
            if homogeneous:
                m = float(params.masses[0])
                gamma = float(params.frictions[0])
                cap = max(obs.e_kinetic[0],
                          m * m * params.coupling ** 2 * params.n / (4.0 * gamma ** 2))
            else:
                cap = obs.e_kinetic[0] + obs.e_potential[0]
            caps = np.full_like(obs.e_kinetic, cap)
            hit = _first_violation(name, traj, obs.e_kinetic - cap - MONITOR_SLACK,
                                   obs.e_kinetic, caps)
        elif name == "potential_energy_bound":
            if homogeneous:
                cap = 0.5 * params.coupling * params.n
            else:
                cap = params.coupling * params.capacity.sum()
            caps = np.full_like(obs.e_potential, cap)
            hit = _first_violation(name, traj, obs.e_potential - cap - MONITOR_SLACK,
                                   obs.e_potential, caps)
        elif name == "support_bound":
            # global kinetic-support envelope max(max|omega(0)|, m*kappa)
            cap = max(float(np.abs(traj.omegas[0]).max()),
                      float(params.masses.max()) * params.coupling)
            values = np.abs(traj.omegas).max(axis=1)
            caps = np.full_like(values, cap)
            hit = _first_violation(name, traj, values - cap - MONITOR_SLACK,
                                   values, caps)
        else:
            raise ValidationError(f"unknown monitor {name!r}")
        if hit is not None:
            violations.append(hit)
    return violations


# ---------------------------------------------------------------------------
# artifact writers


def trajectory_csv(traj: Trajectory, obs: TrajectoryObservables) -> str:
    n = traj.params.n
    header = (["t"] + [f"theta_{i}" for i in range(n)]
              + [f"omega_{i}" for i in range(n)]
              + ["R_p", "phi_p", "E_K", "E_P", "D_theta", "D_omega", "F"])
    lines = [",".join(header)]
    for k in range(len(traj)):
        cells = ([fmt(traj.times[k])]
                 + [fmt(v) for v in traj.thetas[k]]
                 + [fmt(v) for v in traj.omegas[k]]
                 + [fmt(obs.r_p[k]), fmt(obs.phi_p[k]), fmt(obs.e_kinetic[k]),
                    fmt(obs.e_potential[k]), fmt(obs.d_theta[k]),
                    fmt(obs.d_omega[k]), fmt(obs.f[k])])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def snapshot_csv(theta: np.ndarray, omega: np.ndarray) -> str:
    lines = ["theta,omega"]
    for th, om in zip(theta, omega):
        lines.append(f"{fmt(th)},{fmt(om)}")
    return "\n".join(lines) + "\n"


def read_snapshot(path) -> tuple:
    """Read a snapshot CSV (theta,omega header) into two arrays."""
    text = Path(path).read_text().strip().splitlines()
    if not text or [c.strip() for c in text[0].split(",")] != ["theta", "omega"]:
        raise ValidationError(f"{path}: expected a snapshot CSV with header 'theta,omega'")
    theta, omega = [], []
    for line in text[1:]:
        a, b = line.split(",")
        theta.append(float(a))
        omega.append(float(b))
    return np.array(theta), np.array(omega)


def summary_csv(report: RunReport, config: ResolvedConfig,
                obs: Optional[TrajectoryObservables]) -> str:
    header = ("config_hash,n,kappa,t_final,sync_time,final_R_p,final_D_omega,"
              "final_E_K,classification,n_bound_violations")
    kind = report.classification["kind"] if report.classification else ""
    row = [
        report.config_hash,
        str(config.params.n),
        fmt(config.params.coupling),
        fmt(config.integrator.t_final),
        "" if report.sync_time is None else fmt(report.sync_time),
        fmt(obs.r_p[-1]) if obs is not None else "",
        fmt(obs.d_omega[-1]) if obs is not None else "",
        fmt(obs.e_kinetic[-1]) if obs is not None else "",
        kind,
        str(len(report.bound_violations)),
    ]
    return header + "\n" + ",".join(row) + "\n"


# ---------------------------------------------------------------------------
# execution


def compute_verdicts(config: ResolvedConfig) -> list:
    verdicts = []
    for vid in config.analyses.verdicts:
        try:
            if vid == "T34":
                v = check_large_coupling(config.init, config.params)
            elif vid == "T35":
                v = check_near_uniform(config.init, config.params)
            else:
                v = check_diameter_condition(config.init, config.params, vid)
            verdicts.append({"condition_id": v.condition_id,
                             "satisfied": v.satisfied, "margins": v.margins})
        except (VariantError, ValidationError) as err:
            verdicts.append({"condition_id": vid, "satisfied": None,
                             "margins": {}, "error": str(err)})
    return verdicts


def _classification_dict(cls) -> dict:
    return {"kind": cls.kind.value, "k": cls.k,
            "phi_star": cls.phi_star, "residual": cls.residual}


def _write(out_dir: Path, name: str, text: str, formats, kind: str) -> None:
    if kind in formats:
        atomic_write_text(out_dir / name, text)


def execute_single(config: ResolvedConfig, out_dir: Path) -> RunReport:
    report = RunReport(config_hash=config.config_hash)
    t_start = time.perf_counter()
    traj = simulate(config.init, config.params, config.integrator)
    t_sim = time.perf_counter()
    obs = trajectory_observables(traj)

    report.verdicts = compute_verdicts(config)
    if config.analyses.sync is not None:
        report.sync_time = detect_sync(traj, config.analyses.sync["tol_freq"],
                                       config.analyses.sync["hold_time"])
    if config.analyses.classify is not None:
        cls = classify_lock(traj.thetas[-1], config.analyses.classify["tol_angle"])
        report.classification = _classification_dict(cls)
    report.bound_violations = evaluate_monitors(traj, obs, config.analyses.monitors)
    report.final_values = {"R_p": float(obs.r_p[-1]),
                           "D_omega": float(obs.d_omega[-1]),
                           "E_K": float(obs.e_kinetic[-1])}
    for spec in config.analyses.decay_fits:
        try:
            f = fit_decay(traj.times, obs.column(spec["quantity"]), spec["window"])
            report.decay_fits.append({"quantity": spec["quantity"], "rate": f.rate,
                                      "r2": f.r2, "window": list(f.window)})
        except ValidationError as err:
            report.decay_fits.append({"quantity": spec["quantity"],
                                      "error": str(err)})
    t_analyze = time.perf_counter()

    _write(out_dir, "trajectory.csv", trajectory_csv(traj, obs),
           config.output_formats, "csv")
    _write(out_dir, "final_state.csv",
           snapshot_csv(traj.thetas[-1], traj.omegas[-1]),
           config.output_formats, "csv")
    _write(out_dir, "summary.csv", summary_csv(report, config, obs),
           config.output_formats, "csv")
    t_write = time.perf_counter()
    report.timings = {"simulate_s": t_sim - t_start,
                      "analyze_s": t_analyze - t_sim,
                      "write_s": t_write - t_analyze,
                      "total_s": t_write - t_start}
    _write(out_dir, "report.json", report.to_json() + "\n",
           config.output_formats, "json")
    return report


def _run_sweep_child(args):
    """Top-level worker for sweep children (picklable for process pools)."""
    idx, value, child, out_dir, verdict_ids = args
    try:
        report = execute_single(child, Path(out_dir) / f"child_{idx:03d}")
        cells = ([child.config_hash] + _sweep_cells(report, verdict_ids) + [""])
        return idx, value, cells, bool(report.bound_violations), False
    except Exception as err:  # noqa: BLE001 - row-level fault isolation
        cells = (["", "", "", ""] + ["" for _ in verdict_ids]
                 + [str(err).replace(",", ";")])
        return idx, value, cells, False, True


def execute_sweep(config: ResolvedConfig, out_dir: Path, workers: int = 1) -> tuple:
    """Run each sweep child (optionally on a process pool); one CSV row per value."""
    parameter = config.experiment["parameter"]
    verdict_ids = list(config.analyses.verdicts)
    header = (["parameter", "value", "config_hash", "sync_time", "final_R_p",
               "final_D_omega"] + [f"verdict_{vid}" for vid in verdict_ids]
              + ["error"])
    jobs = [(idx, value, child, str(out_dir), verdict_ids)
            for idx, (value, child) in enumerate(sweep_children(config))]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sweep_child, jobs))
    else:
        results = [_run_sweep_child(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    lines = [",".join(header)]
    any_violation = False
    any_error = False
    for _, value, cells, violated, errored in results:
        any_violation = any_violation or violated
        any_error = any_error or errored
        lines.append(",".join([parameter, fmt(value)] + cells))
    text = "\n".join(lines) + "\n"
    if "csv" in config.output_formats:
        atomic_write_text(out_dir / "sweep.csv", text)
    return results, any_violation, any_error


def _sweep_cells(report: RunReport, verdict_ids) -> list:
    sync = "" if report.sync_time is None else fmt(report.sync_time)
    by_id = {v["condition_id"]: v for v in report.verdicts}
    verdict_cells = []
    for vid in verdict_ids:
        v = by_id.get(vid)
        if v is None or v.get("satisfied") is None:
            verdict_cells.append("")
        else:
            verdict_cells.append("true" if v["satisfied"] else "false")
    return [sync, fmt(report.final_values["R_p"]),
            fmt(report.final_values["D_omega"])] + verdict_cells


def execute_stability(config: ResolvedConfig, out_dir: Path) -> RunReport:
    report = RunReport(config_hash=config.config_hash)
    t_start = time.perf_counter()
    experiment = config.experiment
    result = stability_experiment(
        config.init, experiment["_init_b_resolved"], config.params,
        config.integrator, epsilon=experiment.get("epsilon"),
        fit_window=experiment.get("fit_window"),
    )
    if result.fit is not None:
        report.decay_fits.append({"quantity": "E_eps", "rate": result.fit.rate,
                                  "r2": result.fit.r2,
                                  "window": list(result.fit.window)})
    for label, traj in (("a", result.traj_a), ("b", result.traj_b)):
        obs = trajectory_observables(traj)
        for hit in evaluate_monitors(traj, obs, config.analyses.monitors):
            hit["run"] = label
            report.bound_violations.append(hit)
    report.experiment = {
        "kind": "stability_pair",
        "epsilon": result.epsilon,
        "c1_sum": result.c1_sum,
        "gamma_tilde": result.gamma_tilde,
        "gamma_tilde_corrected": result.gamma_tilde_corrected,
        "hypothesis_ok": result.hypothesis_ok,
        "hypothesis": result.hypothesis,
        "c2_constant": result.c2_constant,
        "max_increase": result.max_increase,
        "dissipation_residual_max": result.dissipation_residual_max,
        "d_sum_max": result.d_sum_max,
    }
    lines = ["t,E_eps"]
    for t, e in zip(result.times, result.e_eps):
        lines.append(f"{fmt(t)},{fmt(e)}")
    _write(out_dir, "stability.csv", "\n".join(lines) + "\n",
           config.output_formats, "csv")
    report.timings = {"total_s": time.perf_counter() - t_start}
    _write(out_dir, "report.json", report.to_json() + "\n",
           config.output_formats, "json")
    return report


def execute_convergence(config: ResolvedConfig, out_dir: Path,
                        workers: int = 1) -> RunReport:
    report = RunReport(config_hash=config.config_hash)
    t_start = time.perf_counter()
    experiment = config.experiment
    result = meanfield_convergence_experiment(
        config.init_dist, experiment["n_list"], experiment["n_ref"],
        config.params, config.integrator, experiment["seeds"],
        workers=workers, exact_cap=experiment["exact_cap"],
        n_projections=experiment["n_projections"],
    )
    lines = ["seed,n,sup_w2,method"]
    for row in result.rows:
        lines.append(f"{row['seed']},{row['n']},{fmt(row['sup_w2'])},{row['method']}")
    _write(out_dir, "convergence.csv", "\n".join(lines) + "\n",
           config.output_formats, "csv")
    report.experiment = {
        "kind": "meanfield_convergence",
        "medians": {str(n): v for n, v in result.medians.items()},
        "hypothesis": result.hypothesis,
    }
    report.timings = {"total_s": time.perf_counter() - t_start}
    _write(out_dir, "report.json", report.to_json() + "\n",
           config.output_formats, "json")
    return report


def execute_kinetic(config: ResolvedConfig, out_dir: Path) -> RunReport:
    report = RunReport(config_hash=config.config_hash)
    t_start = time.perf_counter()
    tol_angle = (config.analyses.classify or {"tol_angle": 1e-3})["tol_angle"]
    result = kinetic_sync_experiment(
        config.init_dist, config.params.n, config.params, config.integrator,
        seed=config.init_seed or 0, tol_angle=tol_angle,
    )
    cond = result.condition
    report.verdicts = [{"condition_id": cond.condition_id,
                        "satisfied": cond.satisfied, "margins": cond.margins}]
    report.classification = _classification_dict(result.classification)
    report.experiment = {
        "kind": "kinetic_sync",
        "c1c2": list(result.c1c2) if result.c1c2 else None,
        "final_kinetic_energy": float(result.e_kinetic[-1]),
        "final_r": float(result.r_trace[-1]),
    }
    lines = ["t,E_K,E_P,R"]
    for k in range(result.times.size):
        lines.append(f"{fmt(result.times[k])},{fmt(result.e_kinetic[k])},"
                     f"{fmt(result.e_potential[k])},{fmt(result.r_trace[k])}")
    _write(out_dir, "kinetic.csv", "\n".join(lines) + "\n",
           config.output_formats, "csv")
    report.timings = {"total_s": time.perf_counter() - t_start}
    _write(out_dir, "report.json", report.to_json() + "\n",
           config.output_formats, "json")
    return report
