"""Scenario configuration: TOML schema, validation and resolution.

Schema (all tables except ``space``, ``hamiltonian``, ``projection``,
``initial`` and ``solver`` are optional)::

    name = "my-run"                 # required
    description = "..."
    seed = 7                        # sampling seed (CLI --seed overrides)

    [space]
    factors = [["S", 2], ["B1", 2]] # ordered (label, dim) pairs

    [hamiltonian]                   # exactly one of preset / matrix
    preset = "qubit-bath"           # see HAMILTONIAN_PRESETS
    coupling = 0.5
    seed = 7
    matrix = [[[re, im], ...], ...] # dense literal, rows of [re, im] pairs

    [projection]
    kind = "dephase"                # identity | dephase | block_dephase |
                                    # coarse_grain_equipartition | product_of_marginals
    basis = "computational"         # dephase: or a matrix literal (columns = vectors)
    partition = { factor = "S" }    # block/coarse: or { blocks = [[0, 1], [2, 3]] }
    split = [["S"], ["B1"]]         # product_of_marginals

    [initial]
    kind = "basis"                  # basis | diagonal | pure | product | premeasured |
                                    # random_pure | random_mixed | ghz
    ...                             # kind-specific keys, see _INITIAL_KEYS

    [solver]
    kind = "exact"                  # exact | premaster | markov | alternating
    dt = 0.01
    steps = 100                     # or T (must be a multiple of dt)
    epsilon = 1e-3                  # markov
    coarse_dt = 0.1                 # alternating (with T)
    rho_irr = "zero"                # premaster: zero | consistent
    compare_exact = false           # add an oracle_trace_distance column

    [measurement]
    bipartition = [["S"], ["P"]]
    samples = 1000
    time = 2.0                      # collapse time; defaults to the final grid time
    nested = [["A"], ["B"], ["C"]]  # two-level branch tree instead of one split
    schmidt_columns = true
    interference = false

    [output]
    dir = "runs"
    prefix = "my-run"

Numbers are never parsed from strings and booleans are never numbers; an
integer is accepted where a real is expected.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .. import models
from ..dynamics import Hamiltonian, TimeGrid
from ..measurement import premeasure
from ..policy import get_policy
from ..relevance import SubspacePartition, ZwanzigProjection
from ..state import DensityOperator, HilbertSpace, PureState, random_density, random_pure

__all__ = ["ConfigError", "ScenarioConfig", "SolverSpec", "MeasurementSpec",
           "validate_config", "config_digest", "HAMILTONIAN_PRESETS"]


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario config:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class SolverSpec:
    kind: str
    grid: TimeGrid | None = None
    epsilon: float = 1e-3
    coarse_dt: float | None = None
    T: float | None = None
    rho_irr: str = "zero"
    compare_exact: bool = False


@dataclass(frozen=True)
class MeasurementSpec:
    bipartition: tuple[tuple[str, ...], tuple[str, ...]]
    samples: int = 0
    time: float | None = None
    nested: tuple[tuple[str, ...], ...] | None = None
    schmidt_columns: bool = False
    interference: bool = False


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    description: str
    seed: int
    space: HilbertSpace
    hamiltonian: Hamiltonian
    projection: ZwanzigProjection
    initial: DensityOperator
    initial_pure: PureState | None
    solver: SolverSpec
    measurement: MeasurementSpec | None
    output_dir: str
    prefix: str
    tree: dict = field(repr=False, default_factory=dict)

    @property
    def digest(self) -> str:
        return config_digest(self.tree)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        tree = dict(self.tree, seed=seed)
        return validate_tree(tree)


HAMILTONIAN_PRESETS = {
    "zero": "H = 0",
    "random-local": "independent random Hermitian term on every factor, no coupling",
    "random": "dense random Hermitian matrix scaled by `coupling`",
    "qubit-bath": "qubit S coupled via sigma_x to a random two-qubit bath B1, B2",
    "resonant-exchange": "S and B1 exchange on resonance, B2 dephases the pair",
    "pure-dephasing": "qubit S coupled to a two-qubit bath through sigma_z",
    "coupled-pair": "two qubits A, B with random local fields and XX+ZZ coupling",
}
_PRESET_LAYOUT = {
    "qubit-bath": (("S", 2), ("B1", 2), ("B2", 2)),
    "resonant-exchange": (("S", 2), ("B1", 2), ("B2", 2)),
    "pure-dephasing": (("S", 2), ("B1", 2), ("B2", 2)),
    "coupled-pair": (("A", 2), ("B", 2)),
}

_TOP_KEYS = {"name", "description", "seed", "space", "hamiltonian", "projection", "initial",
             "solver", "measurement", "output"}
_SECTION_KEYS = {
    "space": {"factors"},
    "hamiltonian": {"preset", "coupling", "seed", "matrix"},
    "projection": {"kind", "basis", "partition", "split"},
    "solver": {"kind", "dt", "steps", "T", "epsilon", "coarse_dt", "rho_irr", "compare_exact"},
    "measurement": {"bipartition", "samples", "time", "nested", "schmidt_columns", "interference"},
    "output": {"dir", "prefix"},
}
_INITIAL_KEYS = {
    "basis": {"index"},
    "diagonal": {"weights"},
    "pure": {"amplitudes"},
    "product": {"states"},
    "premeasured": {"system", "pointer", "amplitudes"},
    "random_pure": {"seed"},
    "random_mixed": {"seed", "rank"},
    "ghz": set(),
}
_SOLVERS = ("exact", "premaster", "markov", "alternating")


def config_digest(tree: dict) -> str:
    canon = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def err(self, msg: str):
        self.errors.append(msg)

    def keys(self, where: str, table: dict, allowed: set):
        for k in sorted(set(table) - allowed):
            self.err(f"{where}: unknown key {k!r}")

    def real(self, where: str, v, positive=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.err(f"{where}: expected a number, got {type(v).__name__} {v!r}")
            return None
        if positive and not v > 0:
            self.err(f"{where}: must be positive, got {v!r}")
            return None
        return float(v)

    def integer(self, where: str, v, minimum=None):
        if isinstance(v, bool) or not isinstance(v, int):
            self.err(f"{where}: expected an integer, got {type(v).__name__} {v!r}")
            return None
        if minimum is not None and v < minimum:
            self.err(f"{where}: must be >= {minimum}, got {v}")
            return None
        return v

    def boolean(self, where: str, v):
        if not isinstance(v, bool):
            self.err(f"{where}: expected true/false, got {v!r}")
            return None
        return v

    def string(self, where: str, v, choices=None):
        if not isinstance(v, str):
            self.err(f"{where}: expected a string, got {type(v).__name__} {v!r}")
            return None
        if choices is not None and v not in choices:
            self.err(f"{where}: {v!r} is not one of {sorted(choices)}")
            return None
        return v

    def complex_vector(self, where: str, v):
        if not isinstance(v, list) or not v:
            self.err(f"{where}: expected a non-empty list of [re, im] pairs")
            return None
        out = []
        for i, pair in enumerate(v):
            if (not isinstance(pair, list) or len(pair) != 2
                    or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in pair)):
                self.err(f"{where}[{i}]: expected [re, im] with numeric entries, got {pair!r}")
                return None
            out.append(complex(pair[0], pair[1]))
        return np.array(out)

    def complex_matrix(self, where: str, v, dim: int):
        if not isinstance(v, list) or len(v) != dim:
            self.err(f"{where}: expected {dim} rows")
            return None
        rows = []
        for i, row in enumerate(v):
            r = self.complex_vector(f"{where}[{i}]", row)
            if r is None:
                return None
            if len(r) != dim:
                self.err(f"{where}[{i}]: expected {dim} entries, got {len(r)}")
                return None
            rows.append(r)
        return np.array(rows)

    def labels(self, where: str, v, space: HilbertSpace | None):
        if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
            self.err(f"{where}: expected a list of factor labels")
            return None
        if space is not None:
            bad = [x for x in v if x not in space.labels]
            if bad:
                self.err(f"{where}: unknown factor labels {bad}")
                return None
        return tuple(v)

    def groups(self, where: str, v, space, n: int):
        if not isinstance(v, list) or len(v) != n:
            self.err(f"{where}: expected {n} factor groups")
            return None
        gs = [self.labels(f"{where}[{i}]", g, space) for i, g in enumerate(v)]
        if any(g is None for g in gs):
            return None
        flat = [x for g in gs for x in g]
        if len(set(flat)) != len(flat):
            self.err(f"{where}: factor groups overlap")
            return None
        if any(not g for g in gs):
            self.err(f"{where}: empty factor group")
            return None
        if space is not None and set(flat) != set(space.labels):
            self.err(f"{where}: groups must cover all factors {list(space.labels)}")
            return None
        return tuple(gs)


def validate_config(text: str) -> ScenarioConfig:
    """Parse and resolve a TOML scenario; raises ConfigError listing every violation."""
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax error: {exc}"]) from None
    return validate_tree(tree)


def _space(ck: _Checker, tab) -> HilbertSpace | None:
    facs = tab.get("factors")
    if not isinstance(facs, list) or not facs:
        ck.err("space.factors: expected a non-empty list of [label, dim] pairs")
        return None
    parsed = []
    for i, f in enumerate(facs):
        if not (isinstance(f, list) and len(f) == 2 and isinstance(f[0], str)):
            ck.err(f"space.factors[{i}]: expected [label, dim], got {f!r}")
            return None
        d = ck.integer(f"space.factors[{i}] dim", f[1], minimum=1)
        if d is None:
            return None
        parsed.append((f[0], d))
    labels = [lab for lab, _ in parsed]
    if len(set(labels)) != len(labels):
        ck.err(f"space.factors: duplicate labels {labels}")
        return None
    total = int(np.prod([d for _, d in parsed]))
    cap = get_policy().max_dim
    if total > cap:
        ck.err(f"space.factors: total dimension {total} exceeds cap {cap} "
               f"(factors {', '.join(f'{lab}={d}' for lab, d in parsed)})")
        return None
    return HilbertSpace(parsed)


def _hamiltonian(ck: _Checker, tab, space) -> Hamiltonian | None:
    has_preset, has_matrix = "preset" in tab, "matrix" in tab
    if has_preset == has_matrix:
        ck.err("hamiltonian: give exactly one of 'preset' or 'matrix'")
        return None
    coupling = ck.real("hamiltonian.coupling", tab.get("coupling", 0.5))
    seed = ck.integer("hamiltonian.seed", tab.get("seed", 7))
    if has_matrix:
        if space is None:
            return None
        m = ck.complex_matrix("hamiltonian.matrix", tab["matrix"], space.total_dim)
        if m is None:
            return None
        if np.max(np.abs(m - m.conj().T)) > get_policy().hermiticity:
            ck.err("hamiltonian.matrix: not Hermitian")
            return None
        return Hamiltonian(space, m)
    preset = ck.string("hamiltonian.preset", tab["preset"], HAMILTONIAN_PRESETS)
    if preset is None or space is None or coupling is None or seed is None:
        return None
    layout = _PRESET_LAYOUT.get(preset)
    if layout is not None and space.factors != layout:
        ck.err(f"hamiltonian.preset {preset!r} needs factors {[list(f) for f in layout]}")
        return None
    if preset == "zero":
        return Hamiltonian.zero(space)
    if preset == "random":
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(space.total_dim,) * 2) + 1j * rng.normal(size=(space.total_dim,) * 2)
        return Hamiltonian(space, coupling * 0.5 * (a + a.conj().T) / np.sqrt(space.total_dim))
    if preset == "random-local":
        rng = np.random.default_rng(seed)
        h = np.zeros((space.total_dim,) * 2, dtype=complex)
        for lab, d in space.factors:
            a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            h += models.embed(space, {lab: 0.5 * (a + a.conj().T)})
        return Hamiltonian(space, h)
    if preset == "qubit-bath":
        return models.qubit_bath(coupling, seed)
    if preset == "resonant-exchange":
        return models.resonant_exchange(coupling)
    if preset == "pure-dephasing":
        return models.pure_dephasing(coupling, seed)
    return models.coupled_pair(coupling, seed=seed)


def _partition(ck: _Checker, tab, space) -> SubspacePartition | None:
    if not isinstance(tab, dict) or len(tab) != 1 or not ({"factor", "blocks"} & set(tab)):
        ck.err("projection.partition: expected {factor = \"X\"} or {blocks = [[...], ...]}")
        return None
    try:
        if "factor" in tab:
            lab = ck.string("projection.partition.factor", tab["factor"], space.labels)
            return None if lab is None else SubspacePartition.from_factor(space, lab)
        blocks = tab["blocks"]
        if (not isinstance(blocks, list) or not blocks
                or not all(isinstance(b, list) and all(isinstance(i, int) and not isinstance(i, bool)
                                                       for i in b) for b in blocks)):
            ck.err("projection.partition.blocks: expected a list of lists of basis indices")
            return None
        return SubspacePartition.from_indices(space, blocks)
    except (ValueError, IndexError) as exc:
        ck.err(f"projection.partition: {exc}")
        return None


def _projection(ck: _Checker, tab, space) -> ZwanzigProjection | None:
    kinds = ("identity", "dephase", "block_dephase", "coarse_grain_equipartition",
             "product_of_marginals")
    kind = ck.string("projection.kind", tab.get("kind"), kinds)
    if kind is None or space is None:
        return None
    extra = {"identity": set(), "dephase": {"basis"}, "block_dephase": {"partition"},
             "coarse_grain_equipartition": {"partition"}, "product_of_marginals": {"split"}}[kind]
    ck.keys(f"projection ({kind})", tab, {"kind"} | extra)
    if kind == "identity":
        return ZwanzigProjection.identity(space)
    if kind == "dephase":
        basis = tab.get("basis", "computational")
        if basis == "computational":
            return ZwanzigProjection.dephasing(space)
        b = ck.complex_matrix("projection.basis", basis, space.total_dim)
        if b is None:
            return None
        try:
            return ZwanzigProjection.dephasing(space, b)
        except ValueError as exc:
            ck.err(f"projection.basis: {exc}")
            return None
    if kind in ("block_dephase", "coarse_grain_equipartition"):
        if "partition" not in tab:
            ck.err(f"projection: kind {kind!r} needs a 'partition'")
            return None
        part = _partition(ck, tab["partition"], space)
        if part is None:
            return None
        if kind == "block_dephase":
            return ZwanzigProjection.block_dephasing(part)
        return ZwanzigProjection.equipartition(part)
    split = ck.groups("projection.split", tab.get("split"), space, 2)
    return None if split is None else ZwanzigProjection.marginals(space, split)


def _initial(ck: _Checker, tab, space):
    kind = ck.string("initial.kind", tab.get("kind"), _INITIAL_KEYS)
    if kind is None or space is None:
        return None, None
    ck.keys(f"initial ({kind})", tab, {"kind"} | _INITIAL_KEYS[kind])
    d = space.total_dim
    try:
        if kind == "basis":
            i = ck.integer("initial.index", tab.get("index", 0), minimum=0)
            if i is None:
                return None, None
            if i >= d:
                ck.err(f"initial.index: {i} out of range for dimension {d}")
                return None, None
            psi = PureState.basis(space, i)
            return psi.density(), psi
        if kind == "diagonal":
            w = tab.get("weights")
            if (not isinstance(w, list) or len(w) != d
                    or any(isinstance(x, bool) or not isinstance(x, (int, float)) or x < 0 for x in w)):
                ck.err(f"initial.weights: expected {d} non-negative numbers")
                return None, None
            w = np.array(w, dtype=float)
            if abs(w.sum() - 1.0) > 1e-12:
                ck.err(f"initial.weights: must sum to 1, got {w.sum()!r}")
                return None, None
            return DensityOperator(space, np.diag(w)), None
        if kind == "pure":
            amp = ck.complex_vector("initial.amplitudes", tab.get("amplitudes"))
            if amp is None:
                return None, None
            if len(amp) != d:
                ck.err(f"initial.amplitudes: expected {d} entries, got {len(amp)}")
                return None, None
            psi = PureState.normalized(space, amp)
            return psi.density(), psi
        if kind == "product":
            states = tab.get("states")
            if not isinstance(states, dict) or set(states) != set(space.labels):
                ck.err(f"initial.states: expected one amplitude list per factor {list(space.labels)}")
                return None, None
            amp = np.ones(1, dtype=complex)
            for lab, dim in space.factors:
                v = ck.complex_vector(f"initial.states.{lab}", states[lab])
                if v is None:
                    return None, None
                if len(v) != dim:
                    ck.err(f"initial.states.{lab}: expected {dim} entries")
                    return None, None
                amp = np.kron(amp, v / np.linalg.norm(v))
            psi = PureState.normalized(space, amp)
            return psi.density(), psi
        if kind == "premeasured":
            sys_lab = ck.string("initial.system", tab.get("system"), space.labels)
            ptr_lab = ck.string("initial.pointer", tab.get("pointer"), space.labels)
            amp = ck.complex_vector("initial.amplitudes", tab.get("amplitudes"))
            if sys_lab is None or ptr_lab is None or amp is None:
                return None, None
            if space.labels != (sys_lab, ptr_lab):
                ck.err("initial: premeasured states need the space to be exactly [system, pointer]")
                return None, None
            sub = space.sub([sys_lab])
            if len(amp) != sub.total_dim:
                ck.err(f"initial.amplitudes: expected {sub.total_dim} entries")
                return None, None
            psi = premeasure(PureState.normalized(sub, amp), space.dim_of([ptr_lab]),
                             pointer_label=ptr_lab)
            return psi.density(), psi
        if kind == "random_pure":
            seed = ck.integer("initial.seed", tab.get("seed", 0), minimum=0)
            if seed is None:
                return None, None
            psi = random_pure(space, np.random.default_rng(seed))
            return psi.density(), psi
        if kind == "random_mixed":
            seed = ck.integer("initial.seed", tab.get("seed", 0), minimum=0)
            rank = ck.integer("initial.rank", tab.get("rank", d), minimum=1)
            if seed is None or rank is None:
                return None, None
            return random_density(space, np.random.default_rng(seed), rank), None
        amp = np.zeros(d, dtype=complex)
        amp[0] = amp[-1] = 1.0
        psi = PureState.normalized(space, amp)
        return psi.density(), psi
    except ValueError as exc:
        ck.err(f"initial: {exc}")
        return None, None


def _solver(ck: _Checker, tab, projection_kind) -> SolverSpec | None:
    kind = ck.string("solver.kind", tab.get("kind"), _SOLVERS)
    if kind is None:
        return None
    if projection_kind == "product_of_marginals" and kind in ("premaster", "markov"):
        ck.err(f"solver.kind {kind!r} needs a linear projection; {projection_kind} is nonlinear "
               "(use 'alternating' or 'exact')")
    rho_irr = ck.string("solver.rho_irr", tab.get("rho_irr", "zero"), ("zero", "consistent"))
    compare = ck.boolean("solver.compare_exact", tab.get("compare_exact", False))
    eps = ck.real("solver.epsilon", tab.get("epsilon", 1e-3), positive=True)
    if kind == "alternating":
        for k in ("dt", "steps"):
            if k in tab:
                ck.err(f"solver.{k}: not used by the alternating solver (give coarse_dt and T)")
        cdt = ck.real("solver.coarse_dt", tab.get("coarse_dt"), positive=True)
        T = ck.real("solver.T", tab.get("T"), positive=True)
        if cdt is None or T is None:
            return None
        try:
            TimeGrid.span(T, cdt)
        except ValueError as exc:
            ck.err(f"solver: {exc}")
            return None
        return SolverSpec(kind, TimeGrid.span(T, cdt), coarse_dt=cdt, T=T,
                          compare_exact=bool(compare))
    dt = ck.real("solver.dt", tab.get("dt"), positive=True)
    if ("steps" in tab) == ("T" in tab):
        ck.err("solver: give exactly one of 'steps' or 'T'")
        return None
    if dt is None:
        return None
    if "steps" in tab:
        steps = ck.integer("solver.steps", tab["steps"], minimum=1)
        if steps is None:
            return None
        grid = TimeGrid(0.0, dt, steps)
    else:
        T = ck.real("solver.T", tab["T"], positive=True)
        if T is None:
            return None
        try:
            grid = TimeGrid.span(T, dt)
        except ValueError as exc:
            ck.err(f"solver: {exc}")
            return None
    if eps is None or rho_irr is None or compare is None:
        return None
    return SolverSpec(kind, grid, epsilon=eps, rho_irr=rho_irr, compare_exact=compare)


def _measurement(ck: _Checker, tab, space, initial_pure) -> MeasurementSpec | None:
    bip = ck.groups("measurement.bipartition", tab.get("bipartition"), space, 2)
    samples = ck.integer("measurement.samples", tab.get("samples", 0), minimum=0)
    t = tab.get("time")
    if t is not None:
        t = ck.real("measurement.time", t)
        if t is not None and t < 0:
            ck.err("measurement.time: must be >= 0")
    nested = None
    if "nested" in tab:
        nested = ck.groups("measurement.nested", tab["nested"], space, 3)
    cols = ck.boolean("measurement.schmidt_columns", tab.get("schmidt_columns", False))
    interf = ck.boolean("measurement.interference", tab.get("interference", False))
    if initial_pure is None and space is not None:
        ck.err("measurement: requires a pure initial state (basis, pure, product, premeasured, "
               "random_pure or ghz)")
    if bip is None or samples is None or cols is None or interf is None:
        return None
    return MeasurementSpec(bip, samples, t, nested, cols, interf)


def validate_tree(tree: dict) -> ScenarioConfig:
    ck = _Checker()
    if not isinstance(tree, dict):
        raise ConfigError(["config root must be a table"])
    ck.keys("config", tree, _TOP_KEYS)
    name = ck.string("name", tree.get("name"))
    description = tree.get("description", "")
    if not isinstance(description, str):
        ck.err("description: expected a string")
    seed = ck.integer("seed", tree.get("seed", 0), minimum=0)
    tables = {}
    for sec in ("space", "hamiltonian", "projection", "initial", "solver", "measurement", "output"):
        tab = tree.get(sec)
        if tab is None:
            if sec not in ("measurement", "output"):
                ck.err(f"missing required table [{sec}]")
            tables[sec] = None
            continue
        if not isinstance(tab, dict):
            ck.err(f"[{sec}] must be a table")
            tables[sec] = None
            continue
        if sec in _SECTION_KEYS:
            ck.keys(sec, tab, _SECTION_KEYS[sec])
        tables[sec] = tab
    space = _space(ck, tables["space"]) if tables["space"] is not None else None
    ham = _hamiltonian(ck, tables["hamiltonian"], space) if tables["hamiltonian"] is not None else None
    proj = _projection(ck, tables["projection"], space) if tables["projection"] is not None else None
    init, init_pure = (_initial(ck, tables["initial"], space)
                       if tables["initial"] is not None else (None, None))
    proj_kind = (tables["projection"] or {}).get("kind")
    solver = _solver(ck, tables["solver"], proj_kind) if tables["solver"] is not None else None
    meas = None
    if tables["measurement"] is not None:
        meas = _measurement(ck, tables["measurement"], space, init_pure)
    out = tables["output"] or {}
    out_dir = ck.string("output.dir", out.get("dir", "runs"))
    prefix = ck.string("output.prefix", out.get("prefix", name or "run"))
    if ck.errors:
        raise ConfigError(ck.errors)
    return ScenarioConfig(name, description, seed, space, ham, proj, init, init_pure, solver, meas,
                          out_dir, prefix, tree)
