"""NumPy fallback for the integration kernels.

For an LTI right-hand side the four RK4 stages collapse to constant step
matrices: ``x+ = E x + F1 u(t) + F2 u(t+h/2) + F3 u(t+h)`` with ``E`` the
degree-4 Taylor polynomial of ``exp(h A)``. This is the classical RK4
update, just regrouped, so it matches the compiled stage-by-stage loop to
rounding. The input contribution for all steps is precomputed in one
matmul; only the sequential ``E x + g`` recursion remains in Python.
"""

import numpy as np


def _rk4_step_matrices(a: np.ndarray, b: np.ndarray, h: float):
    n = a.shape[0]
    ha = h * a
    ha2 = ha @ ha
    e = np.eye(n) + ha + ha2 / 2.0 + ha2 @ ha / 6.0 + ha2 @ ha2 / 24.0
    ab = a @ b
    a2b = a @ ab
    a3b = a @ a2b
    f1 = (h / 6.0) * b + (h * h / 6.0) * ab + (h ** 3 / 12.0) * a2b + (h ** 4 / 24.0) * a3b
    f2 = (2.0 * h / 3.0) * b + (h * h / 3.0) * ab + (h ** 3 / 12.0) * a2b
    f3 = (h / 6.0) * b
    return e, f1, f2, f3


def rk4_lti(a, b, x0, u_start, u_mid, u_end, h):
    """Fixed-step RK4 for ``x' = A x + B u`` over a uniform grid.

    ``u_start``, ``u_mid``, ``u_end`` hold the input at the step starts,
    midpoints and ends, shape (steps, m). Returns states at all grid
    points, shape (steps + 1, n).
    """
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    e, f1, f2, f3 = _rk4_step_matrices(a, b, float(h))
    g = u_start @ f1.T + u_mid @ f2.T + u_end @ f3.T
    return affine_scan(e, g, x0)


def affine_scan(e, g, x0):
    """Run the recursion ``x[k+1] = E x[k] + g[k]``; returns (len(g)+1, n)."""
    e = np.ascontiguousarray(e, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    steps = g.shape[0]
    n = e.shape[0]
    out = np.empty((steps + 1, n))
    x = np.array(x0, dtype=float)
    out[0] = x
    for k in range(steps):
        x = e @ x + g[k]
        out[k + 1] = x
    return out
