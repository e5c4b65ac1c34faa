"""Pure numpy fallback for the memory-kernel stepper (same contract as ``_volterra.pyx``)."""
from __future__ import annotations

import numpy as np


def volterra_midpoint(A, kernel, forcing, y0, dt, steps):
    """Integrate y' = A y + f(t) - int_0^t K(tau) y(t - tau) dtau by explicit midpoint.

    ``kernel`` (shape ``(2*steps+1, r, r)``) and ``forcing`` (``(2*steps+1, r)``)
    are tabulated on the half-step grid ``k*dt/2``.  The history integral uses
    the trapezoidal rule on that grid; midpoint stages are kept as history.
    Returns the solution at the integer steps, shape ``(steps+1, r)``.
    """
    A = np.ascontiguousarray(A, dtype=complex)
    K = np.ascontiguousarray(kernel, dtype=complex)
    f = np.ascontiguousarray(forcing, dtype=complex)
    r = A.shape[0]
    M = 2 * steps
    if K.shape != (M + 1, r, r) or f.shape != (M + 1, r):
        raise ValueError("kernel/forcing must be tabulated on 2*steps+1 half-step points")
    s = 0.5 * dt
    # Kmat[i, k*r + j] = K[k, i, j]; hist row M - j holds y_j so that a
    # contiguous tail slice lists y_m, y_{m-1}, ..., y_0.
    Kmat = np.ascontiguousarray(K.transpose(1, 0, 2).reshape(r, (M + 1) * r))
    hist = np.zeros((M + 1, r), dtype=complex)
    out = np.empty((steps + 1, r), dtype=complex)
    hist[M] = y0
    out[0] = y0

    def rhs(m):
        y = hist[M - m]
        val = A @ y + f[m]
        if m > 0:
            conv = Kmat[:, : (m + 1) * r] @ hist[M - m:].reshape(-1)
            conv -= 0.5 * (K[0] @ y + K[m] @ hist[M])
            val -= s * conv
        return val

    for n in range(steps):
        m = 2 * n
        y = hist[M - m]
        hist[M - m - 1] = y + s * rhs(m)
        hist[M - m - 2] = y + dt * rhs(m + 1)
        out[n + 1] = hist[M - m - 2]
    return out
