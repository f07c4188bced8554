"""End-to-end experiments: gate targets, Hamiltonian templates, runs and replays.

A scenario is a JSON-compatible dict validated against
``data/scenario.schema.json``. It may name a ``preset``; any other keys
override the preset. :func:`resolve_config` expands a document into the
full configuration that is written to ``config.json`` with every result.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import _accel, qdyn
from .objective import RobustObjective, Uncertainty, UncertaintyModel
from .optimize import OptimizerAbort, OptimizerConfig, OptimizerTrace, initial_params, minimize
from .pulses import FixtureError, FourierPulse, PiecewisePulse, load_pulse, pulse_from_dict
from .sparsegrid import SamplingSet, dense_grid, monte_carlo_set, smolyak_grid, to_csv

CONTOUR_LEVELS = (1e-2, 1e-3, 1e-4, 1e-5)


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ gates

_S2 = 1.0 / np.sqrt(2.0)

GATES = {
    "hadamard": _S2 * np.array([[1, 1], [1, -1]], dtype=complex),
    "pi8": np.diag([1.0, np.exp(1j * np.pi / 4)]),
    "phase_s": np.diag([1.0, 1j]),
    "rx_pi": -1j * qdyn.pauli("X"),
    "cnot": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def gate(name: str) -> np.ndarray:
    try:
        return GATES[name].copy()
    except KeyError:
        raise ConfigError(f"unknown gate {name!r}") from None


# --------------------------------------------------------------- templates

TEMPLATE_SIZES = {
    "single-qubit-detuning-amp": 2,
    "three-axis": 3,
    "five-uncertainty": 5,
    "cnot-two-detuning": 2,
}


def hamiltonian(template: str) -> qdyn.HamiltonianModel:
    X, Y, Z = (qdyn.pauli(c) for c in "XYZ")
    zero = np.zeros((2, 2))
    if template == "single-qubit-detuning-amp":
        # detuning on sigma_z / 2, amplitude error scales both controls
        return qdyn.HamiltonianModel(
            zero, (X / 2, Y / 2), (Z / 2, zero), np.array([[0.0, 1.0], [0.0, 1.0]]),
            ("x", "y"), ("detuning", "amplitude"),
        )
    if template == "three-axis":
        return qdyn.HamiltonianModel(zero, (X / 2, Y / 2), (X / 2, Y / 2, Z / 2), None, ("x", "y"), ("dx", "dy", "dz"))
    if template == "five-uncertainty":
        scaling = np.zeros((2, 5))
        scaling[0, 0] = scaling[1, 1] = 1.0
        return qdyn.HamiltonianModel(
            zero, (X / 2, Y / 2), (zero, zero, X / 2, Y / 2, Z / 2), scaling,
            ("x", "y"), ("ax", "ay", "dx", "dy", "dz"),
        )
    if template == "cnot-two-detuning":
        t = qdyn.two_qubit
        return qdyn.HamiltonianModel(
            t("Z", "Z"),
            (t("X", "I"), t("Y", "I"), t("I", "X"), t("I", "Y")),
            (t("Z", "I"), t("I", "Z")),
            None,
            ("x1", "y1", "x2", "y2"),
            ("d1", "d2"),
        )
    raise ConfigError(f"unknown Hamiltonian template {template!r}")


# ----------------------------------------------------------------- presets


def _uniform(labels, half):
    return [{"label": lab, "kind": "uniform", "low": -half, "high": half} for lab in labels]


def _single_qubit(gate_name):
    return {
        "name": gate_name,
        "gate": gate_name,
        "template": "single-qubit-detuning-amp",
        "algorithm": "smgoat",
        "metric": "phi2",
        "T": 10.0,
        "uncertainties": _uniform(["detuning", "amplitude"], 0.1),
        "pulse": {"family": "fourier", "T_p": 10.0, "N": 3},
        "sampler": {"kind": "smolyak", "level": 3},
        "optimizer": {"method": "quasi-newton", "max_iterations": 2000, "max_evaluations": 2000},
        "fixture": f"{gate_name}.json",
    }


def _rx_pi(level):
    return {
        "name": f"rx_pi_k{level}",
        "gate": "rx_pi",
        "template": "three-axis",
        "algorithm": "smgoat",
        "metric": "phi1",
        "T": 50.0,
        "uncertainties": _uniform(["dx", "dy", "dz"], 0.05),
        "pulse": {"family": "fourier", "T_p": 50.0, "N": 3},
        "sampler": {"kind": "smolyak", "level": level},
        "optimizer": {"method": "quasi-newton", "max_iterations": 2000, "max_evaluations": 2000},
        "battery": {"n": 800, "seed": 0},
        "landscape": {"axes": [[2, 0], [0, 1], [1, 2]], "resolution": 41},
        "fixture": f"rx_pi_k{level}.json",
    }


def _cnot(sigma, level=3):
    return {
        "name": "cnot",
        "gate": "cnot",
        "template": "cnot-two-detuning",
        "algorithm": "smgrape",
        "metric": "phi3",
        "T": 4.0,
        "uncertainties": [
            {"label": "d1", "kind": "normal", "sigma": sigma},
            {"label": "d2", "kind": "normal", "sigma": sigma},
        ],
        "pulse": {"family": "piecewise", "segments": 100},
        "sampler": {"kind": "smolyak", "level": level},
        "optimizer": {"method": "adaptive-moment", "max_iterations": 3000, "learning_rate": 0.02, "return_best": True},
    }


PRESETS = {
    "hadamard": _single_qubit("hadamard"),
    "pi8": _single_qubit("pi8"),
    "phase_s": _single_qubit("phase_s"),
    "rx_pi_k3": _rx_pi(3),
    "rx_pi_k4": _rx_pi(4),
    "rx_pi_d5": {
        "name": "rx_pi_d5",
        "gate": "rx_pi",
        "template": "five-uncertainty",
        "algorithm": "smgrape",
        "metric": "phi3",
        "T": 50.0,
        "uncertainties": _uniform(["ax", "ay", "dx", "dy", "dz"], 0.05),
        "pulse": {"family": "piecewise", "segments": 100},
        "sampler": {"kind": "smolyak", "level": 3},
        "optimizer": {"method": "adaptive-moment", "max_iterations": 5000, "learning_rate": 0.01},
        "benchmark": {"iterations": 500, "every": 25, "mc_n": 61, "mc_seeds": 50, "mode": "trajectory"},
    },
    "cnot": _cnot(0.10),
    "cnot_s015": _cnot(0.15),
}

DEFAULTS = {
    "seed": 0,
    "seeds": 8,
    "init_scale": 1.0,
    "battery": {"n": 800, "seed": 0},
    "landscape": {"axes": [[0, 1]], "resolution": 101, "span": 1.0},
    "benchmark": {"iterations": 200, "every": 10, "mc_n": 61, "mc_seeds": 50, "mode": "trajectory"},
}


def _schema() -> dict:
    text = resources.files("smolyak_qc").joinpath("data/scenario.schema.json").read_text()
    return json.loads(text)


def validate_document(doc: dict) -> None:
    import jsonschema

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        lines = []
        for err in errors:
            where = "/".join(str(p) for p in err.path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise ConfigError("invalid scenario config:\n  " + "\n  ".join(lines))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(doc: dict | str) -> dict:
    """Validate a scenario document and fill in preset values and defaults."""
    if isinstance(doc, str):
        doc = {"preset": doc}
    validate_document(doc)
    cfg = copy.deepcopy(DEFAULTS)
    if "preset" in doc:
        cfg = _merge(cfg, PRESETS[doc["preset"]])
    cfg = _merge(cfg, {k: v for k, v in doc.items() if k != "preset"})
    if "preset" in doc:
        cfg["preset"] = doc["preset"]
    for key in ("gate", "template", "T", "uncertainties", "pulse", "sampler", "metric"):
        if key not in cfg:
            raise ConfigError(f"scenario config missing {key!r}")
    d = len(cfg["uncertainties"])
    if TEMPLATE_SIZES[cfg["template"]] != d:
        raise ConfigError(
            f"template {cfg['template']!r} has {TEMPLATE_SIZES[cfg['template']]} uncertainties, config lists {d}"
        )
    pulse = cfg["pulse"]
    pulse.setdefault("family", "fourier")
    if pulse["family"] == "fourier":
        pulse.setdefault("N", 3)
        pulse.setdefault("T_p", cfg["T"])
        if cfg["T"] > pulse["T_p"]:
            raise ConfigError("horizon T exceeds the Fourier period T_p")
        prop = cfg.setdefault("propagation", {})
        prop.setdefault("scheme", "cf4")
        prop.setdefault("steps", int(round(100 * cfg["T"])))
    else:
        pulse.setdefault("segments", 100)
        prop = cfg.setdefault("propagation", {})
        prop.setdefault("scheme", "midpoint")
        prop.setdefault("steps", pulse["segments"])
    ref = cfg.setdefault("reference", {})
    ref.setdefault("orders", 9 if d <= 3 else 5)
    cfg.setdefault("algorithm", "smgoat" if pulse["family"] == "fourier" else "smgrape")
    cfg.setdefault("optimizer", {})
    cfg.setdefault("name", cfg.get("preset", cfg["gate"]))
    return cfg


def load_config(path) -> dict:
    """Read and resolve a JSON scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return resolve_config(doc)


# ------------------------------------------------------------- assembling


def uncertainty_model(cfg: dict) -> UncertaintyModel:
    chans = []
    for k, u in enumerate(cfg["uncertainties"]):
        label = u.get("label", f"e{k}")
        if u["kind"] == "normal":
            chans.append(Uncertainty.normal(label, u.get("sigma", 1.0), u.get("mean", 0.0)))
        else:
            chans.append(Uncertainty.uniform(label, u.get("low", -0.5), u.get("high", 0.5)))
    return UncertaintyModel(tuple(chans))


def make_sampling(spec: dict, unc: UncertaintyModel) -> SamplingSet:
    kind = spec["kind"]
    if kind == "smolyak":
        return smolyak_grid(unc.dim, spec.get("level", 3), unc.measures)
    if kind == "dense":
        return dense_grid(unc.dim, spec.get("orders", 5), unc.measures)
    if kind == "mc":
        return monte_carlo_set(unc.dim, spec.get("n", 61), unc.measures, spec.get("seed", 0))
    raise ConfigError(f"unknown sampler {kind!r}")


def reference_sampling(cfg: dict) -> SamplingSet:
    unc = uncertainty_model(cfg)
    return dense_grid(unc.dim, cfg["reference"]["orders"], unc.measures)


def pulse_template(cfg: dict, model: qdyn.HamiltonianModel):
    p = cfg["pulse"]
    labels = model.control_labels
    if p["family"] == "fourier":
        return FourierPulse.zeros(p["T_p"], p["N"], model.n_controls, labels)
    return PiecewisePulse.zeros(cfg["T"], p["segments"], model.n_controls, labels, p.get("bound"))


def build_scenario(cfg: dict | str, sampling: SamplingSet | None = None, backend=None) -> RobustObjective:
    """Wire a resolved (or preset-name) config into a :class:`RobustObjective`."""
    if isinstance(cfg, str) or "propagation" not in cfg:
        cfg = resolve_config(cfg)
    model = hamiltonian(cfg["template"])
    unc = uncertainty_model(cfg)
    target = gate(cfg["gate"])
    if target.shape[0] != model.dim:
        raise ConfigError(f"gate {cfg['gate']!r} does not act on the {cfg['template']!r} system")
    grid = qdyn.PropagationGrid(cfg["T"], cfg["propagation"]["steps"], cfg["propagation"]["scheme"])
    if sampling is None:
        sampling = make_sampling(cfg["sampler"], unc)
    return RobustObjective(model, pulse_template(cfg, model), grid, target, unc, sampling, cfg["metric"], backend)


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture, by file name or bare stem (``"hadamard"``)."""
    if not name.endswith(".json"):
        name += ".json"
    return Path(str(resources.files("smolyak_qc").joinpath(f"data/fixtures/{name}")))


def load_fixture(cfg: dict, path=None):
    path = path or cfg.get("fixture")
    if path is None:
        raise FixtureError("no fixture given")
    p = Path(path)
    if not p.exists():
        p = fixture_path(str(path))
    model = hamiltonian(cfg["template"])
    pulse = load_pulse(p, expect_channels=model.n_controls)
    tmpl = pulse_template(cfg, model)
    if pulse.family != tmpl.family or pulse.n_params != tmpl.n_params:
        raise FixtureError(f"fixture {p.name} does not match the {cfg['name']!r} pulse family")
    if pulse.horizon < cfg["T"]:
        raise FixtureError(f"fixture {p.name} is shorter than the horizon T={cfg['T']}")
    return pulse


# ------------------------------------------------------------ evaluations


def battery(objective: RobustObjective, theta, n: int = 800, seed: int = 0) -> np.ndarray:
    """Pointwise infidelity at ``n`` random draws from the uncertainty distributions."""
    unc = objective.uncertainty
    draws = monte_carlo_set(unc.dim, n, unc.measures, seed)
    return objective.infidelity_at(theta, unc.physical(draws.nodes))


def self_convergence(objective: RobustObjective, theta, n_nodes: int = 5) -> float:
    """Max Frobenius change of U(T) when the step count doubles, over a few nodes."""
    nodes = objective.sampling.nodes[: max(1, n_nodes)]
    deltas = objective.uncertainty.physical(nodes)
    pulse = objective.pulse.with_params(theta)
    U1 = qdyn.propagate_batch(objective.model, pulse, deltas, objective.grid, objective.backend)
    U2 = qdyn.propagate_batch(objective.model, pulse, deltas, objective.grid.refined(2), objective.backend)
    return float(np.max(np.linalg.norm(U1 - U2, axis=(1, 2))))


@dataclass
class Landscape:
    axes: tuple[int, int]
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # (len(xs), len(ys))

    def area_fractions(self, levels=CONTOUR_LEVELS) -> dict:
        return {f"{lv:g}": float(np.mean(self.values < lv)) for lv in levels}

    def to_csv(self, labels=("x", "y")) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([labels[0], labels[1], "infidelity"])
        for i, x in enumerate(self.xs):
            for j, y in enumerate(self.ys):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{self.values[i, j]:.17g}"])
        return buf.getvalue()


def support(u: Uncertainty, span: float = 1.0) -> tuple[float, float]:
    half = 0.5 * u.scale if u.kind == "uniform" else 3.0 * u.scale
    return u.center - span * half, u.center + span * half


def landscape_scan(objective: RobustObjective, theta, axes=(0, 1), ranges=None, resolution: int = 101) -> Landscape:
    """Pointwise infidelity on a grid over two uncertainties; the others sit at their centers."""
    unc = objective.uncertainty
    i, j = axes
    if not (0 <= i < unc.dim and 0 <= j < unc.dim) or i == j:
        raise ConfigError(f"invalid landscape axes {axes} for {unc.dim} uncertainties")
    if ranges is None:
        ranges = (support(unc.channels[i]), support(unc.channels[j]))
    xs = np.linspace(ranges[0][0], ranges[0][1], resolution)
    ys = np.linspace(ranges[1][0], ranges[1][1], resolution)
    center = np.array([c.center for c in unc.channels])
    deltas = np.tile(center, (resolution * resolution, 1))
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    deltas[:, i] = gx.ravel()
    deltas[:, j] = gy.ravel()
    values = objective.infidelity_at(theta, deltas).reshape(resolution, resolution)
    return Landscape((i, j), xs, ys, values)


def evaluate_report(cfg: dict, objective: RobustObjective, theta, reference: SamplingSet | None = None) -> dict:
    reference = reference or reference_sampling(cfg)
    bat = cfg.get("battery", {})
    worst = battery(objective, theta, bat.get("n", 800), bat.get("seed", 0))
    return {
        "expected_infidelity": objective.expected(theta),
        "reference_infidelity": objective.expected(theta, reference),
        "worst_case": float(np.max(worst)),
        "battery_mean": float(np.mean(worst)),
        "battery_median": float(np.median(worst)),
        "n_nodes": len(objective.sampling),
        "reference_nodes": len(reference),
        "metric": objective.metric,
        "sampler": objective.sampling.describe(),
        "backend": _accel.backend_name(),
    }


# ----------------------------------------------------------- persistence


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_bundle(outdir, cfg, pulse, trace: OptimizerTrace | None, sampling: SamplingSet, report: dict) -> Path:
    out = Path(outdir)
    _atomic_write(out / "config.json", _dumps(cfg))
    _atomic_write(out / "pulse.json", _dumps(pulse.to_dict()))
    if trace is not None:
        _atomic_write(out / "trace.csv", trace.to_csv())
    _atomic_write(out / "grid.csv", to_csv(sampling))
    _atomic_write(out / "report.json", _dumps(report))
    return out


def reload_and_evaluate(bundle_dir) -> float:
    """Re-evaluate a persisted run's expected infidelity from its files."""
    bundle = Path(bundle_dir)
    cfg = json.loads((bundle / "config.json").read_text())
    pulse = pulse_from_dict(json.loads((bundle / "pulse.json").read_text()))
    return build_scenario(cfg).expected(pulse.params)


# ------------------------------------------------------------------- runs


@dataclass
class RunResult:
    config: dict
    theta: np.ndarray
    trace: OptimizerTrace
    report: dict
    objective: RobustObjective

    @property
    def pulse(self):
        return self.objective.pulse.with_params(self.theta)


def _optimizer_config(cfg: dict, algorithm: str, overrides: dict | None = None) -> OptimizerConfig:
    opt = dict(cfg.get("optimizer", {}))
    opt.setdefault("method", "quasi-newton" if algorithm == "smgoat" else "adaptive-moment")
    bound = cfg["pulse"].get("bound")
    if bound is not None:
        opt.setdefault("lower", -bound)
        opt.setdefault("upper", bound)
    opt.update(overrides or {})
    return OptimizerConfig.from_dict(opt)


def _bgrape_fun(objective: RobustObjective, cfg: dict, seed: int):
    """Objective whose Monte Carlo batch is redrawn at every call."""
    unc = objective.uncertainty
    n = cfg["sampler"].get("n", 61) if cfg["sampler"]["kind"] == "mc" else 61
    stream = np.random.Generator(np.random.PCG64(seed))

    def fun(theta):
        batch = monte_carlo_set(unc.dim, n, unc.measures, int(stream.integers(2**63 - 1)))
        return objective.value_and_grad(theta, batch)

    return fun


def run(cfg: dict | str, algorithm: str | None = None, seed: int | None = None, theta0=None,
        optimizer: dict | None = None, reference: SamplingSet | None = None, outdir=None) -> RunResult:
    """Optimize one scenario from one seed and evaluate the result.

    ``algorithm`` is ``smgoat`` (quasi-Newton, smooth pulses), ``smgrape``
    (Adam, Smolyak sampling) or ``bgrape`` (Adam, Monte Carlo batch redrawn
    every iteration).
    """
    cfg = resolve_config(cfg) if isinstance(cfg, str) or "propagation" not in cfg else copy.deepcopy(cfg)
    algorithm = algorithm or cfg["algorithm"]
    if algorithm not in ("smgoat", "smgrape", "bgrape"):
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    seed = cfg["seed"] if seed is None else seed
    cfg["seed"] = seed
    cfg["algorithm"] = algorithm
    if algorithm == "bgrape" and cfg["sampler"]["kind"] != "mc":
        cfg["sampler"] = {"kind": "mc", "n": 61, "seed": seed}
    objective = build_scenario(cfg)
    opt_cfg = _optimizer_config(cfg, algorithm, optimizer)
    cfg["optimizer"] = opt_cfg.to_dict()
    if theta0 is None:
        theta0 = initial_params(objective.n_params, seed, cfg.get("init_scale", 1.0))
    fun = _bgrape_fun(objective, cfg, seed) if algorithm == "bgrape" else objective.value_and_grad
    t0 = time.perf_counter()
    try:
        theta, trace = minimize(fun, theta0, opt_cfg)
    except OptimizerAbort as exc:
        if outdir is not None:
            _atomic_write(Path(outdir) / "config.json", _dumps(cfg))
            _atomic_write(Path(outdir) / "trace.csv", exc.trace.to_csv())
        raise
    report = evaluate_report(cfg, objective, theta, reference)
    report.update(
        {
            "algorithm": algorithm,
            "seed": seed,
            "iterations": len(trace),
            "evaluations": trace.evaluations[-1] if trace.evaluations else 1,
            "optimizer_message": trace.message,
            "wall_time_s": time.perf_counter() - t0,
        }
    )
    result = RunResult(cfg, theta, trace, report, objective)
    if outdir is not None:
        write_bundle(outdir, cfg, result.pulse, trace, objective.sampling, report)
    return result


def run_smgoat(cfg, **kw) -> RunResult:
    return run(cfg, "smgoat", **kw)


def run_smgrape(cfg, **kw) -> RunResult:
    return run(cfg, "smgrape", **kw)


def run_bgrape(cfg, **kw) -> RunResult:
    return run(cfg, "bgrape", **kw)


def sweep(cfg, algorithm=None, seeds=None, outdir=None, **kw) -> tuple[RunResult, list[dict]]:
    """Run several seeds; return the best run (by reference infidelity) and all reports."""
    cfg = resolve_config(cfg) if isinstance(cfg, str) or "propagation" not in cfg else cfg
    if seeds is None:
        seeds = range(cfg["seed"], cfg["seed"] + cfg["seeds"])
    reference = reference_sampling(cfg)
    best = None
    reports = []
    for s in seeds:
        sub = None if outdir is None else Path(outdir) / f"seed_{s}"
        res = run(cfg, algorithm, seed=s, reference=reference, outdir=sub, **kw)
        reports.append(res.report)
        if best is None or res.report["reference_infidelity"] < best.report["reference_infidelity"]:
            best = res
    if outdir is not None:
        write_bundle(outdir, best.config, best.pulse, best.trace, best.objective.sampling, best.report)
    return best, reports


# ---------------------------------------------------------------- replay


def replay_fixture(cfg: dict | str, fixture=None, outdir=None, landscapes: bool = True) -> dict:
    """Evaluate a published pulse: estimate, dense reference, battery, landscapes."""
    cfg = resolve_config(cfg) if isinstance(cfg, str) or "propagation" not in cfg else cfg
    pulse = load_fixture(cfg, fixture)
    objective = build_scenario(cfg)
    theta = pulse.params
    t0 = time.perf_counter()
    report = evaluate_report(cfg, objective, theta)
    report["self_convergence"] = self_convergence(objective, theta)
    report["variance"] = objective.variance(theta)
    scans = {}
    if landscapes:
        land = cfg.get("landscape", {})
        span = land.get("span", 1.0)
        for i, j in land.get("axes", [[0, 1]]):
            unc = objective.uncertainty.channels
            scan = landscape_scan(objective, theta, (i, j), (support(unc[i], span), support(unc[j], span)),
                                  land.get("resolution", 101))
            key = f"{unc[i].label}-{unc[j].label}"
            scans[key] = scan
            report.setdefault("landscape_area_fractions", {})[key] = scan.area_fractions()
            report.setdefault("landscape_min", {})[key] = float(scan.values.min())
    report["wall_time_s"] = time.perf_counter() - t0
    if outdir is not None:
        out = Path(outdir)
        _atomic_write(out / "config.json", _dumps(cfg))
        _atomic_write(out / "pulse.json", _dumps(pulse.to_dict()))
        _atomic_write(out / "grid.csv", to_csv(objective.sampling))
        _atomic_write(out / "report.json", _dumps(report))
        for key, scan in scans.items():
            labels = tuple(key.split("-"))
            _atomic_write(out / f"landscape_{key}.csv", scan.to_csv(labels))
    return report


# ------------------------------------------------------------- benchmark


def estimator_errors(objective: RobustObjective, theta, reference: SamplingSet, mc_n: int = 61,
                     mc_seeds=range(50)) -> dict:
    """Smolyak error and Monte Carlo errors (one per seed) against a dense reference."""
    unc = objective.uncertainty
    ref = objective.expected(theta, reference)
    sm = objective.expected(theta)
    mc = []
    for s in mc_seeds:
        batch = monte_carlo_set(unc.dim, mc_n, unc.measures, s)
        mc.append(objective.expected(theta, batch))
    mc = np.array(mc)
    return {"reference": ref, "smolyak": sm, "smolyak_err": abs(sm - ref), "mc": mc, "mc_err": np.abs(mc - ref)}


def benchmark(cfg: dict | str) -> list[dict]:
    """Per-iteration estimates against the dense reference.

    ``mode="trajectory"``: follow one seeded smGRAPE trajectory and, at each
    checkpoint, evaluate the Smolyak estimate and a seeded Monte Carlo batch of
    equal size. ``mode="optimizers"``: run smGRAPE and bGRAPE from the same
    initial parameters and report each method's own running estimate.
    """
    cfg = resolve_config(cfg) if isinstance(cfg, str) or "propagation" not in cfg else cfg
    bench = cfg["benchmark"]
    objective = build_scenario(cfg)
    reference = reference_sampling(cfg)
    unc = objective.uncertainty
    theta0 = initial_params(objective.n_params, cfg["seed"], cfg.get("init_scale", 1.0))
    every = bench["every"]
    rows = []

    def checkpoints(fun):
        opt = _optimizer_config(cfg, "smgrape", {"max_iterations": bench["iterations"], "ftol": 0.0})
        kept = []

        def wrapped(theta):
            f, g = fun(theta)
            kept.append((np.array(theta, copy=True), f))
            return f, g

        minimize(wrapped, theta0, opt)
        # evaluation k holds the iterate after k updates
        return [(k, th, f) for k, (th, f) in enumerate(kept) if k % every == 0]

    if bench.get("mode", "trajectory") == "trajectory":
        for k, theta, _ in checkpoints(objective.value_and_grad):
            ref = objective.expected(theta, reference)
            sm = objective.expected(theta)
            batch = monte_carlo_set(unc.dim, bench["mc_n"], unc.measures, cfg["seed"] * 1_000_003 + k)
            mc = objective.expected(theta, batch)
            label = f"smolyak-K{cfg['sampler'].get('level', 3)}"
            rows.append({"iter": k, "estimator": label, "estimate": sm, "reference": ref, "abs_err": abs(sm - ref)})
            rows.append({"iter": k, "estimator": f"mc-{bench['mc_n']}", "estimate": mc, "reference": ref,
                         "abs_err": abs(mc - ref)})
        return rows

    bcfg = dict(cfg, sampler={"kind": "mc", "n": bench["mc_n"], "seed": cfg["seed"]})
    runs = {
        "smgrape": objective.value_and_grad,
        "bgrape": _bgrape_fun(objective, bcfg, cfg["seed"]),
    }
    for name, fun in runs.items():
        for k, theta, est in checkpoints(fun):
            ref = objective.expected(theta, reference)
            rows.append({"iter": k, "estimator": name, "estimate": est, "reference": ref, "abs_err": abs(est - ref)})
    return rows


def rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([f"{r[c]:.17g}" if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()
