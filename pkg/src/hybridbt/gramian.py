"""Generalized Gramian families: verification, conversion and solving.

A family attaches one symmetric positive definite matrix to every mode.
Validity is a set of coupled LMIs: a per-mode Lyapunov inequality (strict)
plus one non-strict jump inequality per transition, contracting the
quadratic form through each reset matrix. ``check_gramians`` assembles
every residual explicitly and classifies it by eigenvalues, so a report
documents exactly which inequality failed and by how much.

``solve_gramians`` is a projection heuristic, not a certified SDP method:
an ``Infeasible`` outcome means "no certificate found", and externally
computed families can always be brought in through ``import_gramians``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DefinitenessVerdict,
    LinalgError,
    definiteness,
    inverse,
    solve_sylvester_pair,
    sym_eig,
    symmetrize,
)
from .model import LinearHybridSystem

__all__ = [
    "GramianFamily",
    "LmiResidual",
    "LmiResidualReport",
    "SolveOptions",
    "GramianError",
    "Infeasible",
    "NonConvergent",
    "GramianFileError",
    "check_gramians",
    "schur_jump_equivalence",
    "gramians_from_stability",
    "solve_gramians",
    "import_gramians",
    "export_gramians",
]

KINDS = ("observability", "reachability", "stability")
DEFAULT_SLACK = 1e-8  # absolute tolerance for the non-strict ("<= 0") side


class GramianError(RuntimeError):
    """Base class for Gramian computation failures."""


class Infeasible(GramianError):
    """The solver found no certificate (iterations exhausted or diverged)."""

    def __init__(self, message: str, report: "LmiResidualReport | None" = None):
        super().__init__(message)
        self.report = report


class NonConvergent(GramianError):
    """The iteration broke down numerically before reaching a verdict."""


class GramianFileError(ValueError):
    """Gramian JSON file is malformed."""


@dataclass
class GramianFamily:
    """Per-mode SPD matrices of one kind, with the margin they certify.

    ``kind`` is ``"observability"``, ``"reachability"`` or ``"stability"``;
    ``epsilon`` is the positivity/strictness margin the family is meant to
    satisfy (``lambda_min >= epsilon`` for each matrix).
    """

    kind: str
    matrices: dict[str, np.ndarray]
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.matrices = {str(q): symmetrize(m) for q, m in self.matrices.items()}

    def __getitem__(self, mode: str) -> np.ndarray:
        return self.matrices[mode]


@dataclass(frozen=True)
class LmiResidual:
    """One assembled LMI residual with its eigenvalue verdict."""

    label: str
    kind: str  # "lyapunov" | "jump" | "positivity"
    requirement: str  # "ND" | "NSD"
    lambda_max: float
    ok: bool
    matrix: np.ndarray


@dataclass
class LmiResidualReport:
    """All residuals of a family on a model, and the margins used."""

    family_kind: str
    strict_margin: float
    slack: float
    residuals: list[LmiResidual] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.residuals)

    def worst(self) -> LmiResidual:
        """The residual closest to (or furthest past) its bound."""
        return max(self.residuals, key=lambda r: r.lambda_max)

    def __str__(self) -> str:
        head = "OK" if self.ok else "FAILED"
        lines = [
            f"{self.family_kind} family: {head} "
            f"(strict margin {self.strict_margin:.2e}, slack {self.slack:.2e})"
        ]
        for r in self.residuals:
            mark = "ok " if r.ok else "BAD"
            lines.append(f"  [{mark}] {r.label:<28} {r.requirement}  lambda_max = {r.lambda_max:+.6e}")
        return "\n".join(lines)


def _default_strict_margin(model: LinearHybridSystem, family: GramianFamily) -> float:
    scale = max(
        [np.linalg.norm(m) for m in family.matrices.values()]
        + [np.linalg.norm(s.A) for s in model.modes.values()]
    )
    return 1e-6 * (1.0 + scale)


def _family_dims_ok(model: LinearHybridSystem, family: GramianFamily) -> None:
    for q, sub in model.modes.items():
        m = family.matrices.get(q)
        if m is None:
            raise GramianError(f"family has no matrix for mode {q!r}")
        if m.shape != (sub.n, sub.n):
            raise GramianError(
                f"family matrix for mode {q!r} has shape {m.shape}, expected {(sub.n, sub.n)}"
            )


def _lyapunov_residual(kind: str, sub, x: np.ndarray) -> np.ndarray:
    if kind == "observability":
        return sub.A.T @ x + x @ sub.A + sub.C.T @ sub.C
    if kind == "reachability":
        return sub.A @ x + x @ sub.A.T + sub.B @ sub.B.T
    return sub.A.T @ x + x @ sub.A


def _jump_residual(kind: str, m: np.ndarray, x_src: np.ndarray, x_tgt: np.ndarray) -> np.ndarray:
    if kind == "reachability":
        return m @ x_src @ m.T - x_tgt
    return m.T @ x_tgt @ m - x_src


def check_gramians(
    model: LinearHybridSystem,
    family: GramianFamily,
    strict_margin: float | None = None,
    slack: float = DEFAULT_SLACK,
) -> LmiResidualReport:
    """Assemble and classify every LMI residual of ``family`` on ``model``.

    The verdict is OK iff every matrix is positive definite with margin
    ``family.epsilon``, every Lyapunov residual is negative definite with
    ``strict_margin`` and every jump residual is below ``slack``.

    Parameters
    ----------
    strict_margin : float, optional
        Strictness for the "< 0" side; defaults to
        ``1e-6 * (1 + scale of the involved matrices)``.
    slack : float
        Absolute tolerance for the non-strict jump side.
    """
    _family_dims_ok(model, family)
    if strict_margin is None:
        strict_margin = _default_strict_margin(model, family)
    rep = LmiResidualReport(
        family_kind=family.kind, strict_margin=float(strict_margin), slack=float(slack)
    )

    for q, sub in model.modes.items():
        x = family.matrices[q]
        eig = sym_eig(x)
        lam_min = float(eig.values[-1])
        rep.residuals.append(
            LmiResidual(
                label=f"positive[{q}]",
                kind="positivity",
                requirement="ND",
                lambda_max=float(family.epsilon - lam_min),
                ok=lam_min >= family.epsilon * (1.0 - 1e-9) - 1e-14,
                matrix=family.epsilon * np.eye(sub.n) - x,
            )
        )
        r = symmetrize(_lyapunov_residual(family.kind, sub, x))
        verdict = definiteness(r, margin=strict_margin, slack=slack)
        rep.residuals.append(
            LmiResidual(
                label=f"lyapunov[{q}]",
                kind="lyapunov",
                requirement="ND",
                lambda_max=verdict.max_eigenvalue,
                ok=verdict.is_negative_definite,
                matrix=r,
            )
        )

    # jump inequalities apply to all three kinds
    for src, ev, tgt, m in model.transitions():
        r = symmetrize(_jump_residual(family.kind, m, family.matrices[src], family.matrices[tgt]))
        verdict = definiteness(r, margin=strict_margin, slack=slack)
        rep.residuals.append(
            LmiResidual(
                label=f"jump[{src} --{ev}--> {tgt}]",
                kind="jump",
                requirement="NSD",
                lambda_max=verdict.max_eigenvalue,
                ok=verdict.is_negative_semidefinite,
                matrix=r,
            )
        )
    return rep


def schur_jump_equivalence(
    m, p_src, p_tgt, slack: float = DEFAULT_SLACK
) -> tuple[DefinitenessVerdict, DefinitenessVerdict]:
    """Evaluate both equivalent forms of the reachability jump inequality.

    Primal: ``M P_src M^T - P_tgt <= 0``. Dual (through the Schur
    complement of the block form): ``-P_src^{-1} + M^T P_tgt^{-1} M <= 0``.
    The two NSD verdicts must agree away from the margin band; callers use
    this as a cross-check rather than trusting either side blindly near
    zero.
    """
    m = np.asarray(m, dtype=float)
    p_src = symmetrize(p_src)
    p_tgt = symmetrize(p_tgt)
    primal = definiteness(m @ p_src @ m.T - p_tgt, slack=slack)
    dual = definiteness(m.T @ inverse(p_tgt) @ m - inverse(p_src), slack=slack)
    return primal, dual


def gramians_from_stability(
    model: LinearHybridSystem,
    stability: GramianFamily,
    shrink: float = 1e-3,
) -> tuple[GramianFamily, GramianFamily]:
    """Constructively convert a quadratic-stability certificate.

    Given SPD ``P_q`` with ``A_q^T P_q + P_q A_q`` negative definite and
    non-expanding jumps, returns observability Gramians ``P_q / mu_o`` and
    reachability Gramians ``P_q^{-1} / mu_r`` where each ``mu`` is the
    largest uniform weight that keeps the Lyapunov side strictly negative;
    ``shrink`` backs off the boundary value ``min_q gamma_q / mu_q`` by
    ``(1 - shrink)`` so the result is strict with a quantifiable margin.

    Raises
    ------
    GramianError
        If ``stability`` is not a valid certificate for ``model``.
    """
    if stability.kind != "stability":
        raise GramianError(f"expected a stability family, got {stability.kind!r}")
    rep = check_gramians(model, stability)
    if not rep.ok:
        raise GramianError(f"input family is not a stability certificate:\n{rep}")

    gamma = {}
    mu_obs_terms = []
    mu_reach_terms = []
    for q, sub in model.modes.items():
        p = stability.matrices[q]
        gamma[q] = -float(sym_eig(sub.A.T @ p + p @ sub.A).values[0])
        mu_q = float(sym_eig(sub.C.T @ sub.C).values[0])
        if mu_q > 1e-14:
            mu_obs_terms.append(gamma[q] / mu_q)
        mu_qr = float(sym_eig(p @ sub.B @ sub.B.T @ p).values[0])
        if mu_qr > 1e-14:
            mu_reach_terms.append(gamma[q] / mu_qr)

    mu_obs = (1.0 - shrink) * min(mu_obs_terms) if mu_obs_terms else 1.0
    mu_reach = (1.0 - shrink) * min(mu_reach_terms) if mu_reach_terms else 1.0

    obs_mats = {q: stability.matrices[q] / mu_obs for q in model.modes}
    reach_mats = {q: inverse(stability.matrices[q]) / mu_reach for q in model.modes}
    # positivity margins are whatever the construction actually achieved
    obs = GramianFamily(
        kind="observability",
        matrices=obs_mats,
        epsilon=min(float(sym_eig(m).values[-1]) for m in obs_mats.values()) * (1 - 1e-12),
    )
    reach = GramianFamily(
        kind="reachability",
        matrices=reach_mats,
        epsilon=min(float(sym_eig(m).values[-1]) for m in reach_mats.values()) * (1 - 1e-12),
    )

    for fam in (obs, reach):
        post = check_gramians(model, fam, strict_margin=1e-12)
        if not post.ok:
            raise NonConvergent(
                f"constructed {fam.kind} family failed verification:\n{post}"
            )
    return obs, reach


@dataclass(frozen=True)
class SolveOptions:
    """Iteration controls for :func:`solve_gramians`."""

    max_iters: int = 5000
    over_projection: float = 1.1  # clip past the target margin to avoid boundary stalls
    jump_cap: float = 1e-10  # corrected jump residuals aim at this far below zero
    divergence_factor: float = 1e9  # growth vs. the initial iterate that means "diverged"


def _obs_form(model: LinearHybridSystem, kind: str):
    """Map both Gramian kinds onto the observability-shaped problem.

    Reachability LMIs for (A, B, M) are observability LMIs for the
    transposed data on the reversed transition graph.
    """
    if kind == "observability":
        a = {q: s.A for q, s in model.modes.items()}
        c = {q: s.C for q, s in model.modes.items()}
        trans = [(src, tgt, m) for src, _, tgt, m in model.transitions()]
    else:
        a = {q: s.A.T for q, s in model.modes.items()}
        c = {q: s.B.T for q, s in model.modes.items()}
        trans = [(tgt, src, m.T) for src, _, tgt, m in model.transitions()]
    return a, c, trans


def solve_gramians(
    model: LinearHybridSystem,
    kind: str,
    epsilon: float = 1e-6,
    options: SolveOptions = SolveOptions(),
) -> GramianFamily:
    """Search for a Gramian family by alternating projections.

    The stacked per-mode variable is repeatedly projected towards
    feasibility: (a) each matrix onto the SPD cone at margin ``epsilon``
    by eigenvalue clipping, (b) each violated Lyapunov residual clipped to
    its cap and pulled back through the (linear) residual map with a
    Sylvester solve, (c) each violated jump residual removed by adding its
    positive part to the source-side matrix. Starts from the per-mode
    Lyapunov-equation solutions. Deterministic: fixed iteration order over
    modes and transitions.

    Returns a family that passes :func:`check_gramians` at margin
    ``epsilon``; raises :class:`Infeasible` when iterations are exhausted
    or the iterates diverge, carrying the final residual report.
    """
    if kind not in ("observability", "reachability"):
        raise ValueError("kind must be 'observability' or 'reachability'")
    a_map, c_map, trans = _obs_form(model, kind)
    modes = list(model.modes)
    n = {q: a_map[q].shape[0] for q in modes}
    eye = {q: np.eye(n[q]) for q in modes}

    def to_family(x) -> GramianFamily:
        # the dual mapping keeps the variable equal to the Gramian itself
        return GramianFamily(kind=kind, matrices=dict(x), epsilon=epsilon)

    # init: per-mode Lyapunov equality solution, identity on failure
    x: dict[str, np.ndarray] = {}
    for q in modes:
        rhs = -(c_map[q].T @ c_map[q] + epsilon * eye[q])
        try:
            sol = solve_sylvester_pair(a_map[q].T, a_map[q], rhs)
        except LinalgError:
            sol = eye[q].copy()
        if not np.all(np.isfinite(sol)):
            sol = eye[q].copy()
        x[q] = symmetrize(sol)
    scale0 = max(np.linalg.norm(x[q]) for q in modes) + 1.0

    def residual_ok() -> bool:
        for q in modes:
            if sym_eig(x[q]).values[-1] < epsilon * (1.0 - 1e-9):
                return False
            r = symmetrize(a_map[q].T @ x[q] + x[q] @ a_map[q] + c_map[q].T @ c_map[q])
            if sym_eig(r).values[0] > -epsilon:
                return False
        for src, tgt, m in trans:
            r = symmetrize(m.T @ x[tgt] @ m - x[src])
            if sym_eig(r).values[0] > DEFAULT_SLACK:
                return False
        return True

    last_finite = {q: x[q].copy() for q in modes}
    iters = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for iters in range(options.max_iters):
            if all(np.all(np.isfinite(x[q])) for q in modes):
                if max(np.linalg.norm(x[q]) for q in modes) <= options.divergence_factor * scale0:
                    last_finite = {q: x[q].copy() for q in modes}
                    if residual_ok():
                        fam = to_family(x)
                        post = check_gramians(model, fam, strict_margin=epsilon)
                        if post.ok:
                            return fam
                else:
                    break
            else:
                break

            # (a) SPD projection at margin epsilon
            for q in modes:
                eig = sym_eig(symmetrize(x[q]))
                if eig.values[-1] < epsilon:
                    clipped = np.maximum(eig.values, epsilon)
                    x[q] = eig.vectors @ np.diag(clipped) @ eig.vectors.T
            # (b) Lyapunov corrections through the Sylvester pullback
            cap = -options.over_projection * epsilon
            for q in modes:
                r = symmetrize(a_map[q].T @ x[q] + x[q] @ a_map[q] + c_map[q].T @ c_map[q])
                eig = sym_eig(r)
                if eig.values[0] > cap:
                    r_star = eig.vectors @ np.diag(np.minimum(eig.values, cap)) @ eig.vectors.T
                    delta = solve_sylvester_pair(a_map[q].T, a_map[q], r_star - r)
                    x[q] = x[q] + symmetrize(delta)
            # (c) jump corrections: absorb the positive part into the source matrix
            for src, tgt, m in trans:
                r = symmetrize(m.T @ x[tgt] @ m - x[src])
                eig = sym_eig(r)
                if eig.values[0] > -options.jump_cap:
                    pos = np.maximum(eig.values + options.jump_cap, 0.0)
                    x[src] = x[src] + eig.vectors @ np.diag(pos) @ eig.vectors.T

    report = check_gramians(model, to_family(last_finite), strict_margin=epsilon)
    worst = report.worst()
    raise Infeasible(
        f"no {kind} certificate found after {iters + 1} iteration(s); "
        f"worst residual {worst.label} lambda_max = {worst.lambda_max:+.3e}",
        report=report,
    )


# ---------------------------------------------------------------------------
# Gramian JSON files: {"kind": ..., "epsilon": ..., "matrices": {mode: [[...]]}}
# Floats are written in shortest round-trip decimal form (<= 17 significant
# digits), so files re-read bit-identically.


def export_gramians(family: GramianFamily, path) -> None:
    doc = {
        "kind": family.kind,
        "epsilon": family.epsilon,
        "matrices": {q: m.tolist() for q, m in family.matrices.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def import_gramians(path) -> GramianFamily:
    """Read a Gramian family; matrices are symmetrized on load.

    The caller is responsible for running :func:`check_gramians` — a file
    that parses is not automatically a valid certificate.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise GramianFileError(f"not valid JSON: {exc}") from exc
    try:
        kind = doc["kind"]
        eps = float(doc.get("epsilon", 1e-6))
        raw = doc["matrices"]
    except (KeyError, TypeError) as exc:
        raise GramianFileError(f"missing required field: {exc}") from exc
    mats = {}
    for q, rows in raw.items():
        m = np.asarray(rows, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GramianFileError(f"matrix for mode {q!r} is not square: shape {m.shape}")
        mats[q] = symmetrize(m)
    try:
        return GramianFamily(kind=kind, matrices=mats, epsilon=eps)
    except ValueError as exc:
        raise GramianFileError(str(exc)) from exc
