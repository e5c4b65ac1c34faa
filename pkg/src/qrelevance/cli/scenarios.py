"""Built-in scenarios, kept as TOML text so each one exercises the config parser."""
from __future__ import annotations

from .config import ScenarioConfig, validate_config

__all__ = ["BUILTINS", "list_scenarios", "builtin_config", "builtin_text"]

_DEPHASING = """
name = "dephasing-qubit-bath"
description = "Markov relaxation of a qubit exchanging with a bath qubit; entropy rises to the dephased limit"
seed = 7

[space]
factors = [["S", 2], ["B1", 2], ["B2", 2]]

[hamiltonian]
preset = "resonant-exchange"
coupling = 0.5

[projection]
kind = "dephase"

[initial]
kind = "diagonal"
weights = [0.0, 0.0, 0.0, 0.0, 0.7, 0.3, 0.0, 0.0]

[solver]
kind = "markov"
dt = 0.25
T = 100.0
epsilon = 1e-3
"""

_POINTER = """
name = "pointer-measurement"
description = "System premeasured by a pointer, then Born-sampled in the Schmidt basis"
seed = 7

[space]
factors = [["S", 2], ["P", 2]]

[hamiltonian]
preset = "random-local"
seed = 3

[projection]
kind = "identity"

[initial]
kind = "premeasured"
system = "S"
pointer = "P"
amplitudes = [[3.0, 0.0], [0.0, 4.0]]

[solver]
kind = "exact"
dt = 0.05
steps = 40

[measurement]
bipartition = [["S"], ["P"]]
samples = 2000
schmidt_columns = true
"""

_PREMASTER = """
name = "premaster-vs-exact"
description = "Memory-kernel solver against the projected exact evolution on a qubit plus two-qubit bath"
seed = 7

[space]
factors = [["S", 2], ["B1", 2], ["B2", 2]]

[hamiltonian]
preset = "qubit-bath"
coupling = 0.5
seed = 7

[projection]
kind = "dephase"

[initial]
kind = "diagonal"
weights = [0.3, 0.1, 0.05, 0.05, 0.2, 0.1, 0.15, 0.05]

[solver]
kind = "premaster"
dt = 0.01
T = 2.0
compare_exact = true
"""

_ALTERNATING = """
name = "alternating-coarse-grain"
description = "Unitary steps alternating with equipartition over the system qubit's levels"
seed = 7

[space]
factors = [["S", 2], ["B1", 2], ["B2", 2]]

[hamiltonian]
preset = "qubit-bath"
coupling = 0.5
seed = 7

[projection]
kind = "coarse_grain_equipartition"
partition = { factor = "S" }

[initial]
kind = "random_mixed"
seed = 3

[solver]
kind = "alternating"
coarse_dt = 0.1
T = 4.0
"""

_GHZ = """
name = "nested-ghz"
description = "Two-level branch tree of a three-qubit GHZ state under local fields"
seed = 7

[space]
factors = [["A", 2], ["B", 2], ["C", 2]]

[hamiltonian]
preset = "random-local"
seed = 5

[projection]
kind = "identity"

[initial]
kind = "ghz"

[solver]
kind = "exact"
dt = 0.1
steps = 10

[measurement]
bipartition = [["A"], ["B", "C"]]
nested = [["A"], ["B"], ["C"]]
samples = 1000
schmidt_columns = true
"""

_INTERFERENCE = """
name = "interference-revival"
description = "Overlap amplitude of two sibling branches of a coupled qubit pair"
seed = 7

[space]
factors = [["A", 2], ["B", 2]]

[hamiltonian]
preset = "coupled-pair"
coupling = 0.3
seed = 11

[projection]
kind = "identity"

[initial]
kind = "random_pure"
seed = 5

[solver]
kind = "exact"
dt = 0.05
steps = 400

[measurement]
bipartition = [["A"], ["B"]]
time = 0.0
interference = true
schmidt_columns = true
"""

BUILTINS: dict[str, str] = {
    "dephasing-qubit-bath": _DEPHASING,
    "pointer-measurement": _POINTER,
    "premaster-vs-exact": _PREMASTER,
    "alternating-coarse-grain": _ALTERNATING,
    "nested-ghz": _GHZ,
    "interference-revival": _INTERFERENCE,
}


def list_scenarios() -> list[tuple[str, str]]:
    """(name, description) for every built-in, in registry order."""
    out = []
    for name, text in BUILTINS.items():
        out.append((name, validate_config(text).description))
    return out


def builtin_text(name: str) -> str:
    try:
        return BUILTINS[name]
    except KeyError:
        raise KeyError(f"no built-in scenario {name!r}; known: {', '.join(BUILTINS)}") from None


def builtin_config(name: str) -> ScenarioConfig:
    return validate_config(builtin_text(name))
