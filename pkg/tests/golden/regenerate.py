"""Rebuild the golden files.  Run from the repo root: python tests/golden/regenerate.py"""
import json
from pathlib import Path

import numpy as np

from qrelevance import models
from qrelevance.dynamics import TimeGrid
from qrelevance.master import exact_projected_reference, markov_evolve
from qrelevance.relevance import ZwanzigProjection
from qrelevance.state import DensityOperator, trace_distance

HERE = Path(__file__).parent
WEIGHTS = [0.3, 0.1, 0.05, 0.05, 0.2, 0.1, 0.15, 0.05]
SWEEP = (0.4, 0.2, 0.1)


def initial(space):
    return DensityOperator(space, np.diag(WEIGHTS).astype(complex))


def reference_populations():
    h = models.qubit_bath(0.5)
    p = ZwanzigProjection.dephasing(h.space)
    traj = exact_projected_reference(initial(h.space), h, p, TimeGrid.span(5.0, 0.05))
    return {"coupling": 0.5, "seed": 7, "dt": 0.05, "T": 5.0, "weights": WEIGHTS,
            "populations": [np.diag(s.matrix).real.tolist() for s in traj.states]}


def markov_sweep(eps=1e-3, dt=0.05, T=20.0):
    out = {"eps": eps, "dt": dt, "T": T, "weights": WEIGHTS, "max_trace_distance": {}}
    for lam in SWEEP:
        h = models.qubit_bath(lam)
        p = ZwanzigProjection.dephasing(h.space)
        grid = TimeGrid.span(T, dt)
        m = markov_evolve(initial(h.space), h, p, eps, grid)
        e = exact_projected_reference(initial(h.space), h, p, grid)
        out["max_trace_distance"][str(lam)] = max(trace_distance(a, b) for a, b in zip(m.states, e.states))
    return out


if __name__ == "__main__":
    for name, data in (("qubit_bath_reference.json", reference_populations()),
                       ("markov_sweep.json", markov_sweep())):
        (HERE / name).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
        print("wrote", name)
