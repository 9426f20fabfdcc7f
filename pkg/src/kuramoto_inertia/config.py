"""Experiment configuration: JSON schema, defaults, resolution, and hashing.

A config document has six sections (all but ``model``, ``init`` and
``integrator`` optional)::

    {
      "model": {
        "n": 16, "kappa": 1.0,
        "mass": 0.5 | [..n..] | {"kind": "uniform", "low": .., "high": .., "seed": ..},
        "friction": <same forms>, "natural_freq": <same forms, default 0.0>,
        "capacity": "all_to_all"
                    | {"kind": "perturbed_uniform", "a_bar": .., "delta_row": .., "seed": ..}
                    | {"kind": "explicit", "matrix": [[..]]}
      },
      "init": {"kind": "explicit", "theta": [..], "omega": [..]}
              | {"kind": "arc_uniform", "center": .., "halfwidth": .., "omega_value": .., "seed": ..}
              | {"kind": "von_mises_normal", "mu": .., "concentration": ..,
                 "omega_sigma": .., "omega_cutoff": .., "seed": ..}
              | {"kind": "two_pole", "c1": .., "phi_star": ..},
      "integrator": {"dt": .., "t_final": .., "sample_every": 1, "scheme": "rk4"},
      "analyses": {"verdicts": ["T34"], "sync": {"tol_freq": .., "hold_time": ..},
                   "classify": {"tol_angle": ..}, "monitors": [..],
                   "decay_fits": [{"quantity": "D_omega", "window": [t0, t1]}]},
      "experiment": {"kind": "single"} | {"kind": "sweep", "parameter": "model.kappa",
                     "values": [..]} | {"kind": "stability_pair", "init_b": <init>,
                     "epsilon": .., "fit_window": [..]} | {"kind": "meanfield_convergence",
                     "n_list": [..], "n_ref": .., "seeds": [..], "n_projections": ..,
                     "exact_cap": ..} | {"kind": "kinetic_sync"},
      "output": {"dir": "...", "formats": ["csv", "json"]}
    }

Unknown keys are rejected with the offending field path.  Every stochastic
element (parameter draws, samplers) requires an explicit seed.  The config
hash is the SHA-256 of the canonical resolved document (sorted keys,
drawn values expanded) excluding the output section, so identical science
yields identical hashes regardless of where artifacts land.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .integrate import IntegratorConfig, Scheme
from .meanfield import ArcUniform, TwoPole, VonMisesNormal, sample_initial
from .model import ModelParams, OscillatorEnsemble

VERDICT_IDS = ("T31", "T32", "T33", "T34", "T35")
MONITOR_NAMES = ("frequency_bound", "kinetic_energy_bound",
                 "potential_energy_bound", "support_bound")
FIT_QUANTITIES = ("R_p", "E_K", "E_P", "D_theta", "D_omega", "F")
SWEEP_PARAMETERS = ("model.kappa", "model.mass", "model.friction",
                    "model.natural_freq", "integrator.dt", "integrator.t_final")
ENV_OUT_DIR = "KURAMOTO_OUT_DIR"


def _check_keys(obj: dict, path: str, allowed, required=()) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _number(value, path: str, *, minimum=None, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    x = float(value)
    if not np.isfinite(x):
        raise ConfigError(path, "must be finite")
    if positive and x <= 0.0:
        raise ConfigError(path, "must be positive")
    if minimum is not None and x < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return x


def _integer(value, path: str, *, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return value


def _seed(obj: dict, path: str) -> int:
    if "seed" not in obj:
        raise ConfigError(f"{path}.seed", "seed is mandatory for stochastic elements")
    seed = obj["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{path}.seed", "must be a nonnegative integer")
    return seed


def _number_list(value, path: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a nonempty list of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _per_oscillator(value, n: int, path: str, *, positive: bool) -> np.ndarray:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        x = _number(value, path, positive=positive)
        return np.full(n, x)
    if isinstance(value, list):
        vals = _number_list(value, path)
        if len(vals) != n:
            raise ConfigError(path, f"expected {n} entries, got {len(vals)}")
        arr = np.array(vals)
        if positive and np.any(arr <= 0.0):
            raise ConfigError(path, "all entries must be positive")
        return arr
    if isinstance(value, dict):
        _check_keys(value, path, ("kind", "low", "high", "seed"),
                    ("kind", "low", "high", "seed"))
        if value["kind"] != "uniform":
            raise ConfigError(f"{path}.kind", "only the 'uniform' generator is supported")
        low = _number(value["low"], f"{path}.low")
        high = _number(value["high"], f"{path}.high")
        if high < low:
            raise ConfigError(f"{path}.high", "must be >= low")
        if positive and low <= 0.0:
            raise ConfigError(f"{path}.low", "must be positive")
        rng = np.random.default_rng(_seed(value, path))
        return rng.uniform(low, high, n)
    raise ConfigError(path, "expected a number, a list, or a generator object")


def _capacity(value, n: int, path: str) -> np.ndarray:
    if value == "all_to_all" or (isinstance(value, dict) and value.get("kind") == "all_to_all"):
        if isinstance(value, dict):
            _check_keys(value, path, ("kind",), ("kind",))
        return np.full((n, n), 1.0 / n)
    if not isinstance(value, dict):
        raise ConfigError(path, "expected 'all_to_all' or a capacity object")
    kind = value.get("kind")
    if kind == "perturbed_uniform":
        _check_keys(value, path, ("kind", "a_bar", "delta_row", "seed"),
                    ("kind", "a_bar", "delta_row", "seed"))
        a_bar = _number(value["a_bar"], f"{path}.a_bar", positive=True)
        delta_row = _number(value["delta_row"], f"{path}.delta_row", minimum=0.0)
        if a_bar < delta_row / n:
            raise ConfigError(f"{path}.delta_row",
                              "delta_row/n may not exceed a_bar (entries would go negative)")
        rng = np.random.default_rng(_seed(value, path))
        noise = rng.uniform(-1.0, 1.0, (n, n))
        noise = np.triu(noise) + np.triu(noise, 1).T
        return a_bar + (delta_row / n) * noise
    if kind == "explicit":
        _check_keys(value, path, ("kind", "matrix"), ("kind", "matrix"))
        matrix = value["matrix"]
        if not isinstance(matrix, list) or len(matrix) != n:
            raise ConfigError(f"{path}.matrix", f"expected {n} rows")
        rows = [_number_list(row, f"{path}.matrix[{i}]") for i, row in enumerate(matrix)]
        arr = np.array(rows)
        if arr.shape != (n, n):
            raise ConfigError(f"{path}.matrix", f"expected {n}x{n} entries")
        mismatch = np.argwhere(arr != arr.T)
        if mismatch.size:
            i, j = (int(k) for k in mismatch[0])
            raise ConfigError(f"{path}.matrix",
                              f"not symmetric: entry ({i},{j}) != ({j},{i})")
        if np.any(arr < 0.0):
            raise ConfigError(f"{path}.matrix", "entries must be nonnegative")
        return arr
    raise ConfigError(f"{path}.kind", f"unknown capacity kind {kind!r}")


_INIT_KEYS = {
    "explicit": ("kind", "theta", "omega"),
    "arc_uniform": ("kind", "center", "halfwidth", "omega_value", "seed"),
    "von_mises_normal": ("kind", "mu", "concentration", "omega_sigma",
                         "omega_cutoff", "seed"),
    "two_pole": ("kind", "c1", "phi_star"),
}


def _parse_init(obj, n: int, path: str):
    """Returns (kind, ensemble_or_None, dist_or_None, seed_or_None)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(path, "expected an init object with a 'kind'")
    kind = obj["kind"]
    if kind not in _INIT_KEYS:
        raise ConfigError(f"{path}.kind", f"unknown init kind {kind!r}")
    _check_keys(obj, path, _INIT_KEYS[kind],
                tuple(k for k in _INIT_KEYS[kind] if k not in ("omega_value",)))
    if kind == "explicit":
        theta = _number_list(obj["theta"], f"{path}.theta")
        omega = _number_list(obj["omega"], f"{path}.omega")
        if len(theta) != n or len(omega) != n:
            raise ConfigError(path, f"theta and omega must each have {n} entries")
        return kind, OscillatorEnsemble(theta=theta, omega=omega), None, None
    if kind == "arc_uniform":
        dist = ArcUniform(center=_number(obj["center"], f"{path}.center"),
                          halfwidth=_number(obj["halfwidth"], f"{path}.halfwidth",
                                            positive=True),
                          omega_value=_number(obj.get("omega_value", 0.0),
                                              f"{path}.omega_value"))
        seed = _seed(obj, path)
        return kind, sample_initial(dist, n, seed), dist, seed
    if kind == "von_mises_normal":
        dist = VonMisesNormal(
            mu=_number(obj["mu"], f"{path}.mu"),
            concentration=_number(obj["concentration"], f"{path}.concentration",
                                  positive=True),
            omega_sigma=_number(obj["omega_sigma"], f"{path}.omega_sigma", minimum=0.0),
            omega_cutoff=_number(obj["omega_cutoff"], f"{path}.omega_cutoff",
                                 positive=True),
        )
        seed = _seed(obj, path)
        return kind, sample_initial(dist, n, seed), dist, seed
    dist = TwoPole(c1=_number(obj["c1"], f"{path}.c1"),
                   phi_star=_number(obj["phi_star"], f"{path}.phi_star"))
    return kind, sample_initial(dist, n, 0), dist, 0


@dataclass(frozen=True)
class AnalysisOptions:
    verdicts: tuple = ()
    sync: Optional[dict] = None
    classify: Optional[dict] = None
    monitors: tuple = ()
    decay_fits: tuple = ()


def _parse_analyses(obj, path: str) -> AnalysisOptions:
    _check_keys(obj, path, ("verdicts", "sync", "classify", "monitors", "decay_fits"))
    verdicts = []
    for i, vid in enumerate(obj.get("verdicts", [])):
        if vid not in VERDICT_IDS:
            raise ConfigError(f"{path}.verdicts[{i}]", f"unknown condition id {vid!r}")
        verdicts.append(vid)
    sync = None
    if obj.get("sync") is not None:
        _check_keys(obj["sync"], f"{path}.sync", ("tol_freq", "hold_time"), ("tol_freq",))
        sync = {"tol_freq": _number(obj["sync"]["tol_freq"], f"{path}.sync.tol_freq",
                                    positive=True),
                "hold_time": _number(obj["sync"].get("hold_time", 10.0),
                                     f"{path}.sync.hold_time", minimum=0.0)}
    classify = None
    if obj.get("classify") is not None:
        _check_keys(obj["classify"], f"{path}.classify", ("tol_angle",))
        classify = {"tol_angle": _number(obj["classify"].get("tol_angle", 1e-3),
                                         f"{path}.classify.tol_angle", positive=True)}
    monitors = []
    for i, name in enumerate(obj.get("monitors", [])):
        if name not in MONITOR_NAMES:
            raise ConfigError(f"{path}.monitors[{i}]", f"unknown monitor {name!r}")
        monitors.append(name)
    fits = []
    for i, fit in enumerate(obj.get("decay_fits", [])):
        fpath = f"{path}.decay_fits[{i}]"
        _check_keys(fit, fpath, ("quantity", "window"), ("quantity", "window"))
        if fit["quantity"] not in FIT_QUANTITIES:
            raise ConfigError(f"{fpath}.quantity",
                              f"unknown quantity {fit['quantity']!r}")
        window = _number_list(fit["window"], f"{fpath}.window")
        if len(window) != 2 or window[0] >= window[1]:
            raise ConfigError(f"{fpath}.window", "expected [t_start, t_end] with t_start < t_end")
        fits.append({"quantity": fit["quantity"], "window": tuple(window)})
    return AnalysisOptions(verdicts=tuple(verdicts), sync=sync, classify=classify,
                           monitors=tuple(monitors), decay_fits=tuple(fits))


_EXPERIMENT_KEYS = {
    "single": ("kind",),
    "sweep": ("kind", "parameter", "values"),
    "stability_pair": ("kind", "init_b", "epsilon", "fit_window"),
    "meanfield_convergence": ("kind", "n_list", "n_ref", "seeds",
                              "n_projections", "exact_cap"),
    "kinetic_sync": ("kind",),
}


def _parse_experiment(obj, raw: dict, path: str) -> dict:
    kind = obj.get("kind")
    if kind not in _EXPERIMENT_KEYS:
        raise ConfigError(f"{path}.kind", f"unknown experiment kind {kind!r}")
    _check_keys(obj, path, _EXPERIMENT_KEYS[kind], ("kind",))
    out = {"kind": kind}
    if kind == "sweep":
        parameter = obj.get("parameter")
        if parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"{path}.parameter",
                              f"unknown sweep parameter {parameter!r}")
        section, key = parameter.split(".")
        target = raw.get(section, {}).get(key)
        if isinstance(target, bool) or not isinstance(target, (int, float)):
            raise ConfigError(f"{path}.parameter",
                              f"{parameter} must be a scalar in the config to sweep it")
        values = obj.get("values", [])
        if not isinstance(values, list):
            raise ConfigError(f"{path}.values", "expected a list")
        out["parameter"] = parameter
        out["values"] = [_number(v, f"{path}.values[{i}]") for i, v in enumerate(values)]
    elif kind == "stability_pair":
        if "init_b" not in obj:
            raise ConfigError(f"{path}.init_b", "missing required key")
        out["init_b"] = obj["init_b"]
        if "epsilon" in obj:
            out["epsilon"] = _number(obj["epsilon"], f"{path}.epsilon", positive=True)
        if "fit_window" in obj:
            window = _number_list(obj["fit_window"], f"{path}.fit_window")
            if len(window) != 2:
                raise ConfigError(f"{path}.fit_window", "expected [t_start, t_end]")
            out["fit_window"] = tuple(window)
    elif kind == "meanfield_convergence":
        for key in ("n_list", "n_ref", "seeds"):
            if key not in obj:
                raise ConfigError(f"{path}.{key}", "missing required key")
        out["n_list"] = [_integer(v, f"{path}.n_list[{i}]", minimum=1)
                         for i, v in enumerate(obj["n_list"])]
        out["n_ref"] = _integer(obj["n_ref"], f"{path}.n_ref", minimum=1)
        out["seeds"] = [_integer(v, f"{path}.seeds[{i}]", minimum=0)
                        for i, v in enumerate(obj["seeds"])]
        out["n_projections"] = _integer(obj.get("n_projections", 256),
                                        f"{path}.n_projections", minimum=1)
        out["exact_cap"] = _integer(obj.get("exact_cap", 512),
                                    f"{path}.exact_cap", minimum=1)
    return out


@dataclass
class ResolvedConfig:
    raw: dict
    canonical: dict
    config_hash: str
    params: ModelParams
    init_kind: str
    init: OscillatorEnsemble
    init_dist: object
    init_seed: Optional[int]
    integrator: IntegratorConfig
    analyses: AnalysisOptions
    experiment: dict
    output_dir: str
    output_formats: tuple


def parse_config(text: str) -> ResolvedConfig:
    """Parse and fully resolve a JSON config document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("$", f"invalid JSON at line {err.lineno}: {err.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("$", "top level must be an object")
    return resolve_config(raw)


def resolve_config(raw: dict) -> ResolvedConfig:
    _check_keys(raw, "$", ("model", "init", "integrator", "analyses",
                           "experiment", "output"),
                ("model", "integrator"))
    model = raw["model"]
    _check_keys(model, "model", ("n", "kappa", "mass", "friction",
                                 "natural_freq", "capacity"),
                ("n", "kappa", "mass", "friction"))
    n = _integer(model["n"], "model.n", minimum=1)
    kappa = _number(model["kappa"], "model.kappa", minimum=0.0)
    masses = _per_oscillator(model["mass"], n, "model.mass", positive=True)
    frictions = _per_oscillator(model["friction"], n, "model.friction", positive=True)
    nus = _per_oscillator(model.get("natural_freq", 0.0), n,
                          "model.natural_freq", positive=False)
    capacity = _capacity(model.get("capacity", "all_to_all"), n, "model.capacity")
    params = ModelParams(masses=masses, frictions=frictions, natural_freqs=nus,
                         coupling=kappa, capacity=capacity)

    init_obj = raw.get("init", {"kind": "explicit",
                                "theta": [0.0] * n, "omega": [0.0] * n})
    init_kind, init, init_dist, init_seed = _parse_init(init_obj, n, "init")

    integ = raw["integrator"]
    _check_keys(integ, "integrator", ("dt", "t_final", "sample_every", "scheme"),
                ("dt", "t_final"))
    scheme_name = integ.get("scheme", "rk4")
    try:
        scheme = Scheme(scheme_name)
    except ValueError:
        raise ConfigError("integrator.scheme",
                          f"unknown scheme {scheme_name!r}") from None
    integrator = IntegratorConfig(
        dt=_number(integ["dt"], "integrator.dt", positive=True),
        t_final=_number(integ["t_final"], "integrator.t_final", minimum=0.0),
        sample_every=_integer(integ.get("sample_every", 1),
                              "integrator.sample_every", minimum=1),
        scheme=scheme,
    )

    analyses = _parse_analyses(raw.get("analyses", {}), "analyses")
    experiment = _parse_experiment(raw.get("experiment", {"kind": "single"}),
                                   raw, "experiment")

    if experiment["kind"] in ("meanfield_convergence", "kinetic_sync"):
        if init_dist is None:
            raise ConfigError("init.kind",
                              f"{experiment['kind']} needs a sampled init, not explicit")
    if experiment["kind"] == "stability_pair":
        kind_b, init_b, _, _ = _parse_experiment_init_b(experiment, n)
        experiment = dict(experiment)
        experiment["_init_b_resolved"] = init_b

    output = raw.get("output", {})
    _check_keys(output, "output", ("dir", "formats"))
    out_dir = output.get("dir") or os.environ.get(ENV_OUT_DIR) or "kuramoto_out"
    formats = tuple(output.get("formats", ["csv", "json"]))
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ConfigError("output.formats", f"unknown format {fmt!r}")

    canonical = {
        "model": {
            "n": n,
            "kappa": kappa,
            "mass": masses.tolist(),
            "friction": frictions.tolist(),
            "natural_freq": nus.tolist(),
            "capacity": capacity.tolist(),
        },
        "init": {"kind": init_kind, "theta": init.theta.tolist(),
                 "omega": init.omega.tolist()},
        "integrator": {"dt": integrator.dt, "t_final": integrator.t_final,
                       "sample_every": integrator.sample_every,
                       "scheme": integrator.scheme.value},
        "analyses": {
            "verdicts": list(analyses.verdicts),
            "sync": analyses.sync,
            "classify": analyses.classify,
            "monitors": list(analyses.monitors),
            "decay_fits": [{"quantity": f["quantity"], "window": list(f["window"])}
                           for f in analyses.decay_fits],
        },
        "experiment": {k: v for k, v in experiment.items()
                       if not k.startswith("_")},
    }
    digest = hashlib.sha256(
        json.dumps(canonical, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()

    return ResolvedConfig(
        raw=raw, canonical=canonical, config_hash=digest, params=params,
        init_kind=init_kind, init=init, init_dist=init_dist, init_seed=init_seed,
        integrator=integrator, analyses=analyses, experiment=experiment,
        output_dir=str(out_dir), output_formats=formats,
    )


def _parse_experiment_init_b(experiment: dict, n: int):
    return _parse_init(experiment["init_b"], n, "experiment.init_b")


def apply_overrides(raw: dict, *, out_dir=None, seed=None, dt=None,
                    t_final=None) -> dict:
    """Apply CLI flag overrides to a raw config document (flag wins)."""
    raw = copy.deepcopy(raw)
    if out_dir is not None:
        raw.setdefault("output", {})["dir"] = str(out_dir)
    if seed is not None:
        init = raw.setdefault("init", {})
        if init.get("kind") not in (None, "explicit", "two_pole"):
            init["seed"] = int(seed)
    if dt is not None:
        raw.setdefault("integrator", {})["dt"] = float(dt)
    if t_final is not None:
        raw.setdefault("integrator", {})["t_final"] = float(t_final)
    return raw


def sweep_children(config: ResolvedConfig) -> list:
    """Expand a sweep config into (value, resolved child) pairs, ordered by value."""
    experiment = config.experiment
    if experiment["kind"] != "sweep":
        raise ConfigError("experiment.kind", "sweep expansion needs a sweep experiment")
    section, key = experiment["parameter"].split(".")
    children = []
    for value in sorted(experiment["values"]):
        child_raw = copy.deepcopy(config.raw)
        child_raw[section][key] = value
        child_raw["experiment"] = {"kind": "single"}
        children.append((value, resolve_config(child_raw)))
    return children
