"""Numerical tolerances and size limits shared by every module."""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class NumericalPolicy:
    hermiticity: float = 1e-12
    trace: float = 1e-12
    positivity: float = -1e-10
    reconstruction: float = 1e-10
    idempotence: float = 1e-10
    normalization: float = 1e-12
    entropy_clamp: float = 1e-14
    schmidt_cutoff: float = 1e-12
    degeneracy: float = 1e-10
    solver_trace: float = 1e-8
    trace_drift_guard: float = 1e-4
    positivity_guard: float = -1e-6
    max_dim: int = 64
    max_superop_dim: int = 4096


_policy = NumericalPolicy()


def get_policy() -> NumericalPolicy:
    return _policy


def set_policy(**changes) -> NumericalPolicy:
    """Replace fields of the process-wide policy; returns the previous one."""
    global _policy
    old = _policy
    _policy = replace(_policy, **changes)
    return old


class DimensionError(ValueError):
    """Raised when a space or superoperator exceeds the configured cap."""
