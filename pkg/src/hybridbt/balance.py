"""Balanced truncation of hybrid systems and its error bound.

Balancing finds per-mode coordinates in which a reachability family and an
observability family both become the same diagonal matrix diag(sigma_q).
Truncation keeps the leading coordinates of each mode and cuts every reset
matrix down to its kept block. The output error of the reduced system is
bounded by twice the sum of all discarded sigma values times the input
energy, and the diagonal families certify stability of both the balanced
and the reduced system, which this module re-verifies numerically instead
of taking on faith.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gramian import DEFAULT_SLACK, GramianError, GramianFamily, check_gramians, solve_gramians
from .linalg import LinalgError, cholesky, inverse, sym_eig, symmetrize
from .model import LinearHybridSystem, ResetMap, Subsystem
from .simulate import HybridTrajectory

__all__ = [
    "BalancedRealization",
    "ReducedModel",
    "VDiagnostic",
    "BalancingError",
    "IllConditionedBalancing",
    "balance",
    "truncate",
    "error_bound",
    "reduce",
    "v_diagnostic",
]


class BalancingError(RuntimeError):
    """A balancing identity or preservation check failed numerically."""


class IllConditionedBalancing(BalancingError):
    """A balanced singular value is vanishingly small; transform unusable."""


@dataclass
class BalancedRealization:
    """Balanced form of a system: transformed model plus the transforms.

    ``sigma[q]`` holds the mode's balanced singular values in descending
    order; ``diag(sigma[q])`` is simultaneously a reachability and an
    observability Gramian of ``system``.
    """

    system: LinearHybridSystem
    source: LinearHybridSystem
    transforms: dict[str, np.ndarray]
    inverse_transforms: dict[str, np.ndarray]
    sigma: dict[str, np.ndarray]

    def gramian_family(self, kind: str) -> GramianFamily:
        eps = min(float(s[-1]) for s in self.sigma.values()) * (1.0 - 1e-12)
        return GramianFamily(
            kind=kind, matrices={q: np.diag(s) for q, s in self.sigma.items()}, epsilon=eps
        )


@dataclass
class ReducedModel:
    """Reduced system with full provenance of how it was obtained."""

    system: LinearHybridSystem
    orders: dict[str, int]
    sigma: dict[str, np.ndarray]          # full balanced values per mode
    sigma_dropped: dict[str, np.ndarray]  # the discarded tails
    bound: float
    provenance: dict = field(default_factory=dict)

    def gramian_family(self, kind: str) -> GramianFamily:
        kept = {q: s[: self.orders[q]] for q, s in self.sigma.items()}
        eps = min(float(s[-1]) for s in kept.values()) * (1.0 - 1e-12)
        return GramianFamily(
            kind=kind, matrices={q: np.diag(s) for q, s in kept.items()}, epsilon=eps
        )


def _check_family(model, family, expected_kind, strict_margin, slack):
    if family.kind != expected_kind:
        raise GramianError(f"expected a {expected_kind} family, got {family.kind!r}")
    rep = check_gramians(model, family, strict_margin=strict_margin, slack=slack)
    if not rep.ok:
        raise GramianError(f"{expected_kind} family failed verification:\n{rep}")


def balance(
    model: LinearHybridSystem,
    reach: GramianFamily,
    obs: GramianFamily,
    strict_margin: float | None = None,
    slack: float = DEFAULT_SLACK,
    verify: bool = True,
) -> BalancedRealization:
    """Construct the balancing transformation from a Gramian pair.

    Per mode: factor the reachability Gramian as ``P = U U^T``, take the
    eigendecomposition ``U^T Q U = V diag(sigma^2) V^T`` with descending
    eigenvalues, and set ``S = diag(sigma)^{1/2} V^T U^{-1}``. The
    congruences ``S^T diag(sigma) S = Q`` and ``S^{-1} diag(sigma) S^{-T}
    = P`` are verified to 1e-7 relative, and the diagonal family is
    re-checked as both Gramian kinds of the transformed system.

    Parameters
    ----------
    verify : bool
        When true (default) both input families are checked first with
        ``strict_margin``/``slack``; pass the tolerances your certificate
        was produced under (e.g. a looser slack for rounded matrices).
    """
    if verify:
        _check_family(model, reach, "reachability", strict_margin, slack)
        _check_family(model, obs, "observability", strict_margin, slack)

    transforms, inverses, sigma = {}, {}, {}
    for q, sub in model.modes.items():
        u = cholesky(reach.matrices[q])
        eig = sym_eig(symmetrize(u.T @ obs.matrices[q] @ u))
        if eig.values[-1] <= 0.0:
            raise IllConditionedBalancing(f"mode {q!r}: nonpositive balanced eigenvalue")
        s_vals = np.sqrt(eig.values)
        if s_vals[-1] < 1e-10 * s_vals[0]:
            raise IllConditionedBalancing(
                f"mode {q!r}: sigma_min/sigma_max = {s_vals[-1] / s_vals[0]:.2e}"
            )
        u_inv = inverse(u)
        s = np.diag(np.sqrt(s_vals)) @ eig.vectors.T @ u_inv
        s_inv = u @ eig.vectors @ np.diag(1.0 / np.sqrt(s_vals))
        transforms[q], inverses[q], sigma[q] = s, s_inv, s_vals

        lam = np.diag(s_vals)
        q_err = np.linalg.norm(s.T @ lam @ s - obs.matrices[q]) / np.linalg.norm(obs.matrices[q])
        p_err = np.linalg.norm(s_inv @ lam @ s_inv.T - reach.matrices[q]) / np.linalg.norm(
            reach.matrices[q]
        )
        if q_err > 1e-7 or p_err > 1e-7:
            raise BalancingError(
                f"mode {q!r}: balancing congruence failed (errors {q_err:.2e}, {p_err:.2e})"
            )

    modes = {
        q: Subsystem(
            A=transforms[q] @ sub.A @ inverses[q],
            B=transforms[q] @ sub.B,
            C=sub.C @ inverses[q],
        )
        for q, sub in model.modes.items()
    }
    resets = {
        (src, ev): ResetMap(
            source=src, event=ev, target=tgt,
            matrix=transforms[tgt] @ m @ inverses[src],
        )
        for src, ev, tgt, m in model.transitions()
    }
    balanced = LinearHybridSystem(
        modes=modes,
        events=model.events,
        outputs=model.outputs,
        delta=dict(model.delta),
        readout=dict(model.readout),
        resets=resets,
        initial_mode=model.initial_mode,
        initial_state=transforms[model.initial_mode] @ model.initial_state,
        metadata={**model.metadata, "balanced": True},
    )
    bal = BalancedRealization(
        system=balanced, source=model, transforms=transforms,
        inverse_transforms=inverses, sigma=sigma,
    )

    # the diagonal family must certify the balanced system both ways
    for kind in ("reachability", "observability"):
        rep = check_gramians(
            balanced, bal.gramian_family(kind), strict_margin=1e-10, slack=max(slack, 1e-8)
        )
        if not rep.ok:
            raise BalancingError(f"balanced diagonal failed as {kind} family:\n{rep}")
    return bal


def _normalize_orders(bal: BalancedRealization, orders) -> dict[str, int]:
    out = {}
    for q, s in bal.sigma.items():
        r = int(orders.get(q, len(s)))
        if not 0 < r <= len(s):
            raise ValueError(f"order for mode {q!r} must be in 1..{len(s)}, got {r}")
        out[q] = r
    unknown = set(orders) - set(bal.sigma)
    if unknown:
        raise ValueError(f"orders given for unknown modes: {sorted(unknown)}")
    return out


def truncate(bal: BalancedRealization, orders) -> ReducedModel:
    """Keep the leading ``orders[q]`` balanced coordinates of each mode.

    Reset matrices are cut to their kept row/column block, which covers
    all four partition cases (source and/or target reduced or not). The
    truncated diagonal family is re-verified as both Gramian kinds of the
    reduced system.
    """
    orders = _normalize_orders(bal, orders)
    for q, s in bal.sigma.items():
        r = orders[q]
        if r < len(s) and s[r - 1] - s[r] <= 1e-8 * s[0]:
            warnings.warn(
                f"mode {q!r}: truncating inside a cluster of equal singular values "
                f"(sigma_{r} ~ sigma_{r + 1}); the bound still holds",
                stacklevel=2,
            )

    src_sys = bal.system
    modes = {
        q: Subsystem(
            A=sub.A[: orders[q], : orders[q]],
            B=sub.B[: orders[q], :],
            C=sub.C[:, : orders[q]],
        )
        for q, sub in src_sys.modes.items()
    }
    resets = {
        (src, ev): ResetMap(
            source=src, event=ev, target=tgt,
            matrix=m[: orders[tgt], : orders[src]],
        )
        for src, ev, tgt, m in src_sys.transitions()
    }
    reduced_system = LinearHybridSystem(
        modes=modes,
        events=src_sys.events,
        outputs=src_sys.outputs,
        delta=dict(src_sys.delta),
        readout=dict(src_sys.readout),
        resets=resets,
        initial_mode=src_sys.initial_mode,
        initial_state=np.zeros(orders[src_sys.initial_mode]),
        metadata={**bal.source.metadata, "reduced_orders": dict(orders)},
    )
    reduced = ReducedModel(
        system=reduced_system,
        orders=orders,
        sigma={q: s.copy() for q, s in bal.sigma.items()},
        sigma_dropped={q: s[orders[q]:].copy() for q, s in bal.sigma.items()},
        bound=error_bound(bal, orders),
        provenance={
            "orders": {q: int(r) for q, r in orders.items()},
            "sigma": {q: s.tolist() for q, s in bal.sigma.items()},
        },
    )
    reduced.provenance["bound"] = reduced.bound

    for kind in ("reachability", "observability"):
        rep = check_gramians(
            reduced_system, reduced.gramian_family(kind), strict_margin=1e-10, slack=1e-8
        )
        if not rep.ok:
            raise BalancingError(f"reduced diagonal failed as {kind} family:\n{rep}")
    return reduced


def error_bound(bal: BalancedRealization, orders) -> float:
    """Output-error bound factor: twice the sum of all discarded sigmas.

    The reduced system's output satisfies
    ``||y - y_hat||_L2 <= error_bound(...) * ||u||_L2``
    for every input and event schedule when the initial state is zero.
    """
    orders = _normalize_orders(bal, orders)
    return 2.0 * float(sum(bal.sigma[q][orders[q]:].sum() for q in bal.sigma))


def reduce(
    model: LinearHybridSystem,
    orders,
    reach: GramianFamily | None = None,
    obs: GramianFamily | None = None,
    epsilon: float = 1e-6,
    strict_margin: float | None = None,
    slack: float = DEFAULT_SLACK,
) -> tuple[ReducedModel, float]:
    """End-to-end reduction: solve (or accept) Gramians, balance, truncate.

    Returns the reduced model and its error-bound factor. Solver failures
    (``Infeasible``) propagate unchanged.
    """
    if reach is None:
        reach = solve_gramians(model, "reachability", epsilon=epsilon)
    if obs is None:
        obs = solve_gramians(model, "observability", epsilon=epsilon)
    bal = balance(model, reach, obs, strict_margin=strict_margin, slack=slack)
    reduced = truncate(bal, orders)
    reduced.provenance["gramian_epsilon"] = epsilon
    reduced.provenance["gramian_margins"] = {
        "reachability": float(check_gramians(model, reach, strict_margin=strict_margin, slack=slack).worst().lambda_max),
        "observability": float(check_gramians(model, obs, strict_margin=strict_margin, slack=slack).worst().lambda_max),
    }
    return reduced, reduced.bound


@dataclass
class VDiagnostic:
    """Energy-style diagnostic along a pair of trajectories.

    ``V(t) = x_o^T diag(sigma) x_o + beta^2 x_c^T diag(sigma)^{-1} x_c``
    where ``x_o``/``x_c`` are the padded difference/sum of the balanced
    and reduced states. For single-step truncations V must not rise
    across events and obeys ``dV/dt <= 4 beta^2 ||u||^2 - ||y - y_hat||^2``
    between them; the recorded drops and interval slacks let tests verify
    both within discretization error.
    """

    beta: float
    segments: list  # (times, V values, mode)
    event_drops: list  # (time, V_before, V_after)
    interval_checks: list  # (mode, delta_V, rhs_integral)

    def max_event_rise(self) -> float:
        """Largest V increase across an event (<= 0 when all drop)."""
        if not self.event_drops:
            return -np.inf
        return max(after - before for _, before, after in self.event_drops)

    def max_interval_violation(self, scale_tol: float = 0.0) -> float:
        """Largest ``delta_V - integral`` slack; <= tol means the bound held."""
        if not self.interval_checks:
            return -np.inf
        return max(dv - rhs - scale_tol * (1.0 + abs(rhs)) for _, dv, rhs in self.interval_checks)


def v_diagnostic(
    bal: BalancedRealization,
    reduced: ReducedModel,
    traj: HybridTrajectory,
    traj_hat: HybridTrajectory,
) -> VDiagnostic:
    """Evaluate the one-step error functional along simulated trajectories.

    ``traj`` must come from ``bal.system`` and ``traj_hat`` from
    ``reduced.system``, simulated with the same input, schedule and step.
    Requires single-step geometry: every mode truncated by at most one
    state. Zero-dwell event chains are checked as one composed drop.
    """
    for q, r in reduced.orders.items():
        n = len(bal.sigma[q])
        if n - r > 1:
            raise ValueError(
                f"single-step geometry required: mode {q!r} truncated by {n - r} > 1"
            )
    truncated = [q for q, r in reduced.orders.items() if r < len(bal.sigma[q])]
    candidates = truncated if truncated else list(bal.sigma)
    beta = min(float(bal.sigma[q][-1]) for q in candidates)

    if len(traj.segments) != len(traj_hat.segments):
        raise ValueError("trajectories have different segmentations")

    seg_vs = []
    interval_checks = []
    for sa, sb in zip(traj.segments, traj_hat.segments):
        if len(sa.times) != len(sb.times) or np.max(np.abs(sa.times - sb.times)) > 1e-9:
            raise ValueError("trajectory grids do not match")
        q = sa.mode
        sig = bal.sigma[q]
        r = reduced.orders[q]
        xb, xh = sa.states, sb.states
        if r == len(sig):
            xo = xb - xh
            xc = xb + xh
        else:
            xo = np.hstack([xb[:, :r] - xh, xb[:, r:]])
            xc = np.hstack([xb[:, :r] + xh, xb[:, r:]])
        v = (xo * xo) @ sig + beta * beta * ((xc * xc) @ (1.0 / sig))
        seg_vs.append((sa.times, v, q))

        ydiff = sa.outputs - sb.outputs
        integrand = (
            4.0 * beta * beta * np.einsum("ij,ij->i", sa.inputs, sa.inputs)
            - np.einsum("ij,ij->i", ydiff, ydiff)
        )
        rhs = float(np.trapezoid(integrand, sa.times))
        interval_checks.append((q, float(v[-1] - v[0]), rhs))

    event_drops = []
    for k in range(len(seg_vs) - 1):
        t_event = float(seg_vs[k + 1][0][0])
        event_drops.append((t_event, float(seg_vs[k][1][-1]), float(seg_vs[k + 1][1][0])))

    return VDiagnostic(
        beta=beta, segments=seg_vs, event_drops=event_drops, interval_checks=interval_checks
    )
