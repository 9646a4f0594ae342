"""Experiment runner: TOML config -> problem -> solver runs -> CSV traces and an SVG plot.

Config layout::

    [problem]
    family = "lasso"          # lasso | nnpca | phase
    data = "synthetic"        # or a LIBSVM file path
    lam = 1.0
    N = 200                   # synthetic sizes (phase uses n and d)
    n = 50
    seed = 1

    [run]
    max_epochs = 50
    tol = 1e-10
    seed = 0
    output_dir = "out"
    init = "default"          # default | zero | spectral | <csv path>

    [[solvers]]
    name = "spiral"           # see SOLVERS
    beta = 0.5                # remaining keys go to the solver config
"""

from __future__ import annotations

import copy
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import tomli

from .baselines import FinitoConfig, ProxSgdConfig, finito_miso_run, prox_sgd_run
from .core import SpiralConfig, SpiralSolver
from .data import hadamard_phase_data, load_libsvm, spectral_init, synth_lasso
from .plotting import emit_svg
from .problems import lasso_problem, nnpca_problem, phase_retrieval_problem
from .trace import write_csv

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "SOLVERS",
    "OUTPUT_ENV",
    "load_config",
    "parse_config",
    "build_problem",
    "initial_point",
    "run_solver",
    "run_experiment",
]

OUTPUT_ENV = "SPIRAL_OUTPUT_DIR"
FAMILIES = ("lasso", "nnpca", "phase")
# name -> (kind, fixed options)
SOLVERS = {
    "spiral": ("spiral", {"variant": "full"}),
    "spiral-no-ls": ("spiral", {"variant": "no-ls"}),
    "adaspiral": ("spiral", {"variant": "adaptive"}),
    "spiral-euclidean": ("spiral-euclidean", {"variant": "full"}),
    "spiral-no-ls-euclidean": ("spiral-euclidean", {"variant": "no-ls"}),
    "adaspiral-euclidean": ("spiral-euclidean", {"variant": "adaptive"}),
    "proxsgd": ("proxsgd", {}),
    "finito": ("finito", {}),
}
NNPCA_WARMUP_EPOCHS = 10


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: Dict[str, Any]
    solvers: List[Dict[str, Any]]
    max_epochs: float = 100.0
    tol: float = 1e-10
    seed: int = 0
    output_dir: str = "out"
    init: str = "default"
    plot: bool = True
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        if not self.solvers:
            raise ConfigError("at least one solver is required")
        if not self.max_epochs >= 1:
            raise ConfigError("epoch budget must be at least 1")
        fam = self.problem.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"problem.family must be one of {FAMILIES}, got {fam!r}")
        labels = set()
        for s in self.solvers:
            name = s.get("name")
            if not isinstance(name, str):
                raise ConfigError("every solver needs a name")
            label = s.get("label", name)
            if not re.fullmatch(r"[A-Za-z0-9_.-]+", label):
                raise ConfigError(f"solver label {label!r} is not a safe file name")
            if label in labels:
                raise ConfigError(f"duplicate solver label {label!r}")
            labels.add(label)


@dataclass
class ExperimentResult:
    outputs: Dict[str, Path] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    traces: Dict[str, Any] = field(default_factory=dict)
    svg: Optional[Path] = None

    @property
    def ok(self):
        return not self.errors


def parse_config(text, base_dir=None):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    if "problem" not in raw or not isinstance(raw["problem"], dict):
        raise ConfigError("missing [problem] table")
    solvers = raw.get("solvers", [])
    if not isinstance(solvers, list) or not all(isinstance(s, dict) for s in solvers):
        raise ConfigError("solvers must be an array of tables")
    run = raw.get("run", {})
    known = {"max_epochs", "tol", "seed", "output_dir", "init", "plot"}
    extra = set(run) - known
    if extra:
        raise ConfigError(f"unknown [run] keys: {sorted(extra)}")
    try:
        return ExperimentConfig(
            problem=dict(raw["problem"]),
            solvers=[dict(s) for s in solvers],
            base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
            **run,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else cfg.base_dir / p


def _load_vector(path):
    vec = np.loadtxt(path, delimiter=",", dtype=float, ndmin=1).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{path}: non-finite entries")
    return vec


def build_problem(cfg):
    """Return ``(problem, extras)`` for the config's problem table."""
    spec = cfg.problem
    fam = spec["family"]
    data = spec.get("data", "synthetic")
    seed = int(spec.get("seed", 0))
    extras = {}
    if fam == "lasso":
        if data == "synthetic":
            A, b, lam, zstar = synth_lasso(int(spec.get("N", 200)), int(spec.get("n", 50)),
                                           float(spec.get("density", 0.1)), seed,
                                           float(spec.get("lam", 1.0)))
            extras["z_star"] = zstar
        else:
            ds = load_libsvm(_resolve(cfg, data), n=spec.get("n"))
            A, b, lam = ds.to_dense(), ds.labels, float(spec.get("lam", 1.0))
        return lasso_problem(A, b, lam), extras
    if fam == "nnpca":
        if data == "synthetic":
            rng = np.random.default_rng(seed)
            A = rng.standard_normal((int(spec.get("N", 300)), int(spec.get("n", 20))))
        else:
            A = load_libsvm(_resolve(cfg, data), n=spec.get("n")).to_dense()
        return nnpca_problem(A), extras
    # phase retrieval
    n = int(spec.get("n", 16))
    z_true = spec.get("z_true")
    if z_true is not None:
        z_true = _load_vector(_resolve(cfg, z_true))
        n = z_true.shape[0]
    A, b = hadamard_phase_data(n, int(spec.get("d", 5)), float(spec.get("p_c", 0.02)),
                               seed, z_true)
    kernel = spec.get("kernel", "quartic")
    prob = phase_retrieval_problem(A, b, float(spec.get("lam", 0.0)), kernel=kernel,
                                   radius=spec.get("radius"))
    return prob, extras


def initial_point(cfg, problem):
    """Shared starting point for all solvers of an experiment."""
    fam, init = cfg.problem["family"], cfg.init
    if init not in ("default", "zero", "spectral"):
        z0 = _load_vector(_resolve(cfg, init))
        if z0.shape != (problem.n,):
            raise ValueError(f"init vector has length {z0.size}, expected {problem.n}")
        return z0
    if init == "zero" or (init == "default" and fam == "lasso"):
        return np.zeros(problem.n)
    if init == "spectral" or (init == "default" and fam == "phase"):
        return spectral_init(problem.A, problem.b, iters=20, seed=cfg.seed)
    # nnpca: proxSGD warm start from a seeded feasible point
    rng = np.random.default_rng(cfg.seed)
    z = np.abs(rng.standard_normal(problem.n))
    z /= np.linalg.norm(z)
    warm = ProxSgdConfig(seed=cfg.seed, max_epochs=NNPCA_WARMUP_EPOCHS)
    return prox_sgd_run(problem, warm, z).z


def run_solver(problem, entry, cfg, z0):
    entry = dict(entry)
    name = entry.pop("name")
    entry.pop("label", None)
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}")
    kind, fixed = SOLVERS[name]
    opts = {"max_epochs": cfg.max_epochs, "tol": cfg.tol, "seed": cfg.seed}
    opts.update(entry)
    try:
        if kind in ("spiral", "spiral-euclidean"):
            opts.update(fixed)
            sc = SpiralConfig(**opts)
            return SpiralSolver(problem, sc, z0, euclidean=(kind == "spiral-euclidean")).run()
        if kind == "proxsgd":
            return prox_sgd_run(problem, ProxSgdConfig(**opts), z0)
        opts.pop("seed", None)
        return finito_miso_run(problem, FinitoConfig(**opts), z0)
    except TypeError as exc:
        raise ValueError(f"bad options for {name}: {exc}") from None


def run_experiment(cfg, output_dir=None):
    """Run every solver of ``cfg``; failures of single runs are recorded, not raised."""
    out = Path(output_dir or os.environ.get(OUTPUT_ENV) or _resolve(cfg, cfg.output_dir))
    out.mkdir(parents=True, exist_ok=True)
    res = ExperimentResult()
    shared = None
    for entry in cfg.solvers:
        label = entry.get("label", entry["name"])
        try:
            problem, _ = build_problem(cfg)
            if shared is None:
                shared = initial_point(cfg, problem)
            trace = run_solver(problem, entry, cfg, shared.copy())
        except Exception as exc:  # noqa: BLE001 - any single-run failure is reported
            res.errors[label] = f"{type(exc).__name__}: {exc}"
            continue
        trace.solver = label
        path = out / f"{label}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_csv(trace, fh)
        res.outputs[label] = path
        res.traces[label] = trace
    if cfg.plot and res.traces:
        res.svg = out / "convergence.svg"
        res.svg.write_text(emit_svg(list(res.traces.values())), encoding="utf-8")
    return res
