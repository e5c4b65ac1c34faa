"""Execute a resolved scenario and write its artifacts."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, kernels
from ..dynamics import Hamiltonian
from ..master import (SolverError, Trajectory, alternating_evolve, exact_projected_reference,
                      markov_evolve, premaster_evolve)
from ..measurement import (collapse_counts, interference_series, nested_schmidt, schmidt,
                           tree_from_ensemble)
from ..policy import get_policy
from ..state import PureState, spectral, trace_distance
from .config import ScenarioConfig

__all__ = ["OUT_ENV", "RunManifest", "Check", "run_scenario", "resolve_out_dir", "atomic_write"]

OUT_ENV = "QRELEVANCE_OUT_DIR"
BASE_COLUMNS = ("step", "t", "trace_dev", "entropy", "positivity_margin")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float | None
    threshold: float | None
    guard: bool = False  # a failed guard check means exit code 3

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        if self.value is not None:
            object.__setattr__(self, "value", float(self.value))


@dataclass
class RunManifest:
    scenario: str
    config_digest: str
    tool_version: str
    seed: int
    backend: str
    solver: str
    duration_s: float
    checks: list[Check] = field(default_factory=list)
    outputs: dict[str, str] = field(default_factory=dict)  # file name -> sha256
    error: str | None = None
    error_step: int | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks if c.guard)

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_out_dir(config: ScenarioConfig, out_dir: str | os.PathLike | None = None) -> Path:
    """--out beats the environment variable, which beats the config's [output] dir."""
    if out_dir is not None:
        return Path(out_dir)
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else Path(config.output_dir)


def atomic_write(path: Path, data: str) -> str:
    """Write via a temp file in the same directory and rename; returns the sha256."""
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(raw).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def _pure_states(psi0: PureState, h: Hamiltonian, times) -> list[PureState]:
    dec = spectral(h.matrix)
    v, e = dec.eigenvectors, dec.eigenvalues
    c0 = v.conj().T @ psi0.amplitudes
    out = []
    for t in times:
        amp = v @ (np.exp(-1j * e * t) * c0)
        out.append(PureState.normalized(psi0.space, amp))
    return out


def _solve(cfg: ScenarioConfig) -> Trajectory:
    s = cfg.solver
    if s.kind == "exact":
        return exact_projected_reference(cfg.initial, cfg.hamiltonian, cfg.projection, s.grid)
    if s.kind == "premaster":
        irr = None
        if s.rho_irr == "consistent":
            irr = cfg.initial.matrix - cfg.projection.apply_matrix(cfg.initial.matrix)
        return premaster_evolve(cfg.initial, cfg.hamiltonian, cfg.projection, s.grid, irr)
    if s.kind == "markov":
        return markov_evolve(cfg.initial, cfg.hamiltonian, cfg.projection, s.epsilon, s.grid)
    return alternating_evolve(cfg.initial, cfg.hamiltonian, cfg.projection, s.coarse_dt, s.T)


def _csv(traj: Trajectory, extra: dict[str, np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BASE_COLUMNS + tuple(extra))
    for k, t in enumerate(traj.times):
        row = [k, t, traj.trace_dev[k], traj.entropy[k], traj.positivity_margin[k]]
        row += [col[k] for col in extra.values()]
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_scenario(cfg: ScenarioConfig, out_dir=None, seed: int | None = None) -> RunManifest:
    """Run ``cfg`` and write ``<prefix>.trajectory.csv``, ``.branches.json``, ``.manifest.json``.

    A solver guard failure still writes the manifest (with ``error`` and
    ``error_step`` set) before the :class:`SolverError` propagates.
    """
    if seed is not None and seed != cfg.seed:
        cfg = cfg.with_seed(seed)
    pol = get_policy()
    out = resolve_out_dir(cfg, out_dir)
    names = {k: f"{cfg.prefix}.{k}" for k in ("trajectory.csv", "branches.json", "manifest.json")}
    manifest = RunManifest(cfg.name, cfg.digest, __version__, cfg.seed, kernels.BACKEND,
                           cfg.solver.kind, 0.0)
    start = time.perf_counter()
    try:
        traj = _solve(cfg)
    except SolverError as exc:
        manifest.duration_s = time.perf_counter() - start
        manifest.error, manifest.error_step = str(exc), exc.step
        atomic_write(out / names["manifest.json"], _dumps(manifest.to_dict()))
        raise

    checks = manifest.checks
    max_tr = float(traj.trace_dev.max())
    min_pos = float(traj.positivity_margin.min())
    checks.append(Check("trace", max_tr <= pol.solver_trace, max_tr, pol.solver_trace))
    checks.append(Check("positivity", min_pos >= pol.positivity, min_pos, pol.positivity))
    checks.append(Check("positivity_guard", min_pos >= pol.positivity_guard, min_pos,
                        pol.positivity_guard, guard=True))
    if cfg.solver.kind in ("markov", "alternating"):
        drop = float(np.min(np.diff(traj.entropy))) if len(traj.entropy) > 1 else 0.0
        checks.append(Check("entropy_non_decreasing", drop >= pol.positivity, drop, pol.positivity))

    extra: dict[str, np.ndarray] = {}
    if cfg.solver.compare_exact:
        ref = exact_projected_reference(cfg.initial, cfg.hamiltonian, cfg.projection, traj.grid)
        dist = np.array([trace_distance(a.matrix, b.matrix)
                         for a, b in zip(traj.states, ref.states)])
        extra["oracle_trace_distance"] = dist
        checks.append(Check("oracle_distance_finite", bool(np.isfinite(dist).all()), float(dist.max()), None))

    meas = cfg.measurement
    branches = None
    if meas is not None:
        psi0 = cfg.initial_pure
        if meas.schmidt_columns:
            side1, side2 = meas.bipartition
            width = min(cfg.space.dim_of(side1), cfg.space.dim_of(side2))
            cols = np.zeros((len(traj.times), width))
            for k, psi in enumerate(_pure_states(psi0, cfg.hamiltonian, traj.times - traj.grid.t0)):
                c = schmidt(psi, meas.bipartition).coefficients
                cols[k, :len(c)] = c
            for j in range(width):
                extra[f"schmidt_c{j + 1}"] = cols[:, j]
        t_c = traj.grid.T - traj.grid.t0 if meas.time is None else meas.time
        psi = _pure_states(psi0, cfg.hamiltonian, [t_c])[0]
        tree = (nested_schmidt(psi, meas.nested) if meas.nested is not None
                else tree_from_ensemble(psi, meas.bipartition))
        branches = {"scenario": cfg.name, "collapse_time": t_c, "tree": tree.to_dict()}
        leaves = [n for n in tree.nodes if n.level == 1]
        total = float(sum(n.probability for n in leaves))
        checks.append(Check("branch_probability_sum", abs(total - 1.0) <= 1e-8, total, 1e-8))
        if meas.samples:
            counts = collapse_counts(psi, tree.regions[:1] + (tuple(
                lab for r in tree.regions[1:] for lab in r),), meas.samples, cfg.seed)
            branches["samples"] = {"n": meas.samples, "seed": cfg.seed,
                                   "counts": [int(c) for c in counts],
                                   "frequencies": [int(c) / meas.samples for c in counts]}
        if meas.interference and len(leaves) >= 2:
            later = traj.times[traj.times - traj.grid.t0 >= t_c]
            amp = interference_series(leaves[0], leaves[1], cfg.hamiltonian,
                                      later - traj.grid.t0 - t_c)
            branches["interference"] = {
                "branches": [leaves[0].node, leaves[1].node],
                "t": [float(x) for x in later],
                "amplitude": [[float(a.real), float(a.imag)] for a in amp],
            }
            checks.append(Check("interference_initially_zero", abs(amp[0]) <= 1e-12,
                                float(abs(amp[0])), 1e-12))

    manifest.outputs[names["trajectory.csv"]] = atomic_write(out / names["trajectory.csv"],
                                                             _csv(traj, extra))
    if branches is not None:
        manifest.outputs[names["branches.json"]] = atomic_write(out / names["branches.json"],
                                                                _dumps(branches))
    manifest.duration_s = time.perf_counter() - start
    atomic_write(out / names["manifest.json"], _dumps(manifest.to_dict()))
    return manifest
