"""Piecewise-LTI simulation of hybrid systems and L2 functionals.

Between events the active subsystem is integrated with fixed-step
classical RK4 on a uniform grid (step <= ``max_step``), so every event
time lands exactly on the grid; no event detection is needed because
events are external. The grid is additionally split at declared input
discontinuities, which keeps RK4 at full order for zero-order-hold
inputs. At an event the reset matrix is applied to the left limit of the
state; zero-dwell events compose resets without integration.

``simulate_exact`` is the independent cross-check: it propagates with the
matrix exponential of the augmented (A, B) block and is exact for inputs
that are constant on each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linalg import mat_exp
from .model import LinearHybridSystem, TimedEventSequence
from .signals import InputSignal

__all__ = [
    "SimConfig",
    "Segment",
    "EventRecord",
    "HybridTrajectory",
    "L2Report",
    "DivergedError",
    "simulate",
    "simulate_exact",
    "l2_norm",
    "l2_norm_samples",
    "l2_norm_signal",
    "output_difference",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_comparison_csv",
]


class DivergedError(RuntimeError):
    """State norm exceeded the overflow guard during integration."""

    def __init__(self, time: float, norm: float):
        super().__init__(f"state diverged at t={time:.6g} (|x| ~ {norm:.3e})")
        self.time = time


@dataclass(frozen=True)
class SimConfig:
    """Integration settings: maximum step and the blow-up guard."""

    max_step: float = 1e-3
    overflow_norm: float = 1e12

    def __post_init__(self):
        if self.max_step <= 0.0:
            raise ValueError("max_step must be positive")


@dataclass
class Segment:
    """Samples of one inter-event interval [T_i, T_{i+1}].

    The final sample is the left limit at the interval's right endpoint;
    the post-reset value at that time opens the next segment.
    """

    mode: str
    output: str
    times: np.ndarray
    states: np.ndarray   # (len(times), n_mode)
    outputs: np.ndarray  # (len(times), p)
    inputs: np.ndarray   # (len(times), m)


@dataclass(frozen=True)
class EventRecord:
    """One applied discrete event: reset of the state at time ``time``."""

    time: float
    event: str
    source: str
    target: str
    x_before: np.ndarray
    x_after: np.ndarray


@dataclass
class HybridTrajectory:
    """Simulation result: per-interval sample blocks plus event records."""

    segments: list[Segment]
    events: list[EventRecord]
    horizon: float
    max_dim: int = field(init=False)

    def __post_init__(self):
        self.max_dim = max((s.states.shape[1] for s in self.segments), default=0)

    # Flattened right-continuous view: one row per grid time, events keep
    # only their post-reset sample (left limits live in segments/events).
    def _flat_parts(self):
        for i, seg in enumerate(self.segments):
            last = i == len(self.segments) - 1
            yield seg, slice(None) if last else slice(None, -1)

    def grid_times(self) -> np.ndarray:
        return np.concatenate([seg.times[sl] for seg, sl in self._flat_parts()])

    def grid_modes(self) -> list[str]:
        out = []
        for seg, sl in self._flat_parts():
            out.extend([seg.mode] * len(seg.times[sl]))
        return out

    def grid_discrete_outputs(self) -> list[str]:
        out = []
        for seg, sl in self._flat_parts():
            out.extend([seg.output] * len(seg.times[sl]))
        return out

    def grid_outputs(self) -> np.ndarray:
        return np.vstack([seg.outputs[sl] for seg, sl in self._flat_parts()])

    def grid_states_padded(self) -> np.ndarray:
        blocks = []
        for seg, sl in self._flat_parts():
            x = seg.states[sl]
            pad = np.full((x.shape[0], self.max_dim - x.shape[1]), np.nan)
            blocks.append(np.hstack([x, pad]))
        return np.vstack(blocks)

    def final_state(self) -> np.ndarray:
        return self.segments[-1].states[-1]

    def segment_boundaries(self) -> np.ndarray:
        """Times separating segments (the applied event instants)."""
        return np.array([s.times[0] for s in self.segments[1:]])


def _resolve_schedule(model, schedule: TimedEventSequence):
    """Turn dwell times into (arrival, event) pairs inside the horizon."""
    arrivals = []
    t = 0.0
    for event, dwell in schedule.entries:
        t += dwell
        if t >= schedule.horizon:
            break
        arrivals.append((t, event))
    return arrivals


def _interval_pieces(a: float, b: float, breakpoints) -> list[tuple[float, float]]:
    """Split [a, b] at declared input discontinuities strictly inside it."""
    cuts = [t for t in breakpoints if a + 1e-12 < t < b - 1e-12]
    pts = [a] + sorted(cuts) + [b]
    return list(zip(pts[:-1], pts[1:]))


def _piece_grid(p0: float, p1: float, max_step: float):
    nsteps = max(1, int(np.ceil((p1 - p0) / max_step - 1e-9)))
    h = (p1 - p0) / nsteps
    k = np.arange(nsteps)
    starts = p0 + h * k
    mids = p0 + h * (k + 0.5)
    ends = p0 + h * (k + 1)
    ends[-1] = p1  # exactness at the right endpoint (left limits there)
    times = np.empty(nsteps + 1)
    times[:-1] = starts
    times[-1] = p1
    return times, starts, mids, ends, h


def _check_overflow(states: np.ndarray, times: np.ndarray, guard: float):
    norms = np.max(np.abs(states), axis=1)
    bad = ~np.isfinite(norms) | (norms > guard)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise DivergedError(float(times[k]), float(norms[k]))


def _run(model, u, schedule, cfg, x0, propagate):
    """Shared driver: ``propagate`` integrates one uniform piece."""
    if u.m != model.m:
        raise ValueError(f"input has {u.m} channel(s), model expects {model.m}")
    mode = model.initial_mode
    x = np.atleast_1d(np.array(model.initial_state if x0 is None else x0, dtype=float))
    if x.shape != (model.dim(mode),):
        raise ValueError(f"initial state length {x.shape} does not match mode {mode!r}")

    arrivals = _resolve_schedule(model, schedule)
    boundaries = [t for t, _ in arrivals] + [schedule.horizon]
    segments: list[Segment] = []
    events: list[EventRecord] = []
    t_cur = 0.0
    idx = 0
    cache: dict = {}

    while True:
        t_end = boundaries[idx] if idx < len(boundaries) else schedule.horizon
        if t_end > t_cur:
            sub = model.subsystem(mode)
            times_list, states_list = [], []
            for (p0, p1) in _interval_pieces(t_cur, t_end, u.breakpoints):
                times, starts, mids, ends, h = _piece_grid(p0, p1, cfg.max_step)
                with np.errstate(over="ignore", invalid="ignore"):
                    states = propagate(sub, mode, x, starts, mids, ends, h, u, cache)
                _check_overflow(states, times, cfg.overflow_norm)
                if times_list:
                    times, states = times[1:], states[1:]
                times_list.append(times)
                states_list.append(states)
                x = states[-1].copy()
            times = np.concatenate(times_list)
            states = np.vstack(states_list)
            u_samples = u.evaluate(times)
            u_samples[-1] = u.evaluate_left(times[-1:])[0]
            segments.append(
                Segment(
                    mode=mode,
                    output=model.readout[mode],
                    times=times,
                    states=states,
                    outputs=states @ sub.C.T,
                    inputs=u_samples,
                )
            )
        if idx >= len(arrivals):
            break
        t_event, event = arrivals[idx]
        target, reset = model.delta[(mode, event)], model.resets[(mode, event)].matrix
        x_after = reset @ x
        events.append(
            EventRecord(
                time=t_event, event=event, source=mode, target=target,
                x_before=x.copy(), x_after=x_after.copy(),
            )
        )
        mode, x, t_cur = target, x_after, t_event
        idx += 1

    return HybridTrajectory(segments=segments, events=events, horizon=schedule.horizon)


def simulate(
    model: LinearHybridSystem,
    u: InputSignal,
    schedule: TimedEventSequence,
    cfg: SimConfig = SimConfig(),
    x0=None,
) -> HybridTrajectory:
    """Integrate the hybrid system with fixed-step RK4.

    Parameters
    ----------
    model : LinearHybridSystem
        Validated system.
    u : InputSignal
        Continuous input; must have ``model.m`` channels.
    schedule : TimedEventSequence
        Event schedule; events at or past the horizon are ignored.
    cfg : SimConfig
        Step bound and overflow guard.
    x0 : array_like, optional
        Overrides the model's initial continuous state.

    Raises
    ------
    DivergedError
        If the state norm exceeds ``cfg.overflow_norm``.
    """

    def propagate(sub, mode, x, starts, mids, ends, h, u_sig, cache):
        u1 = u_sig.evaluate(starts)
        u2 = u_sig.evaluate(mids)
        u3 = u_sig.evaluate_left(ends)
        return _kernels.rk4_lti(sub.A, sub.B, x, u1, u2, u3, h)

    return _run(model, u, schedule, cfg, x0, propagate)


def simulate_exact(
    model: LinearHybridSystem,
    u: InputSignal,
    schedule: TimedEventSequence,
    cfg: SimConfig = SimConfig(),
    x0=None,
) -> HybridTrajectory:
    """Exact propagation for inputs that are constant on every step.

    Uses ``exp([[A, B], [0, 0]] h)`` to advance state and input
    contribution in closed form; serves as the brute-force oracle for
    :func:`simulate`. Raises ``ValueError`` if the input is not piecewise
    constant on the integration grid.
    """

    def propagate(sub, mode, x, starts, mids, ends, h, u_sig, cache):
        u1 = u_sig.evaluate(starts)
        u3 = u_sig.evaluate_left(ends)
        if not np.array_equal(u1, u3):
            raise ValueError("simulate_exact requires an input that is constant on each step")
        key = (mode, float(h))
        if key not in cache:
            n, m = sub.n, sub.m
            aug = np.zeros((n + m, n + m))
            aug[:n, :n] = sub.A
            aug[:n, n:] = sub.B
            phi = mat_exp(aug, h)
            cache[key] = (np.ascontiguousarray(phi[:n, :n]), np.ascontiguousarray(phi[:n, n:]))
        e, gmat = cache[key]
        return _kernels.affine_scan(e, u1 @ gmat.T, x)

    return _run(model, u, schedule, cfg, x0, propagate)


@dataclass(frozen=True)
class L2Report:
    """L2 norm of a sampled signal with a grid-halving error estimate."""

    value: float
    rule: str
    error_estimate: float


def _trapz_blocks(blocks) -> tuple[float, float]:
    """Integral of ||v||^2 over sample blocks, plus a halved-grid estimate."""
    total = 0.0
    est = 0.0
    for times, values in blocks:
        if len(times) < 2:
            continue
        sq = np.einsum("ij,ij->i", values, values)
        fine = np.trapezoid(sq, times)
        total += fine
        k = len(times) - 1  # steps
        if k >= 2:
            even = k - (k % 2)
            coarse = np.trapezoid(sq[: even + 1 : 2], times[: even + 1 : 2])
            fine_part = np.trapezoid(sq[: even + 1], times[: even + 1])
            est += abs(coarse - fine_part) / 3.0
    return total, est


def l2_norm_samples(times, values, breakpoints=()) -> L2Report:
    """Trapezoid L2 norm of samples, never integrating across a breakpoint."""
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] != len(times):
        values = values.T
    cuts = sorted(t for t in set(breakpoints) if times[0] < t < times[-1])
    blocks = []
    lo = 0
    for c in cuts:
        hi = int(np.searchsorted(times, c, side="left"))
        blocks.append((times[lo : hi + 1], values[lo : hi + 1]))
        lo = hi
    blocks.append((times[lo:], values[lo:]))
    total, est = _trapz_blocks(blocks)
    value = float(np.sqrt(max(total, 0.0)))
    err = est / (2.0 * value) if value > 0.0 else np.sqrt(est)
    return L2Report(value=value, rule="trapezoid", error_estimate=float(err))


def l2_norm(traj: HybridTrajectory, which: str = "y") -> L2Report:
    """L2 norm of a trajectory field over [0, horizon].

    ``which`` is one of ``"y"`` (continuous output), ``"x"`` (state) or
    ``"u"`` (input samples carried by the trajectory). Integration is
    per segment, so jumps at event times are never smoothed over.
    """
    pick = {"y": lambda s: s.outputs, "x": lambda s: s.states, "u": lambda s: s.inputs}
    if which not in pick:
        raise ValueError(f"unknown field {which!r}")
    blocks = [(s.times, pick[which](s)) for s in traj.segments]
    total, est = _trapz_blocks(blocks)
    value = float(np.sqrt(max(total, 0.0)))
    err = est / (2.0 * value) if value > 0.0 else np.sqrt(est)
    return L2Report(value=value, rule="trapezoid", error_estimate=float(err))


def l2_norm_signal(u: InputSignal, horizon: float, max_step: float = 1e-3) -> L2Report:
    """L2 norm of an input signal on [0, horizon] by dense sampling."""
    pieces = _interval_pieces(0.0, float(horizon), u.breakpoints)
    blocks = []
    for (p0, p1) in pieces:
        times, _, _, _, _ = _piece_grid(p0, p1, max_step)
        values = u.evaluate(times)
        values[-1] = u.evaluate_left(times[-1:])[0]
        blocks.append((times, values))
    total, est = _trapz_blocks(blocks)
    value = float(np.sqrt(max(total, 0.0)))
    err = est / (2.0 * value) if value > 0.0 else np.sqrt(est)
    return L2Report(value=value, rule="trapezoid", error_estimate=float(err))


def output_difference(a: HybridTrajectory, b: HybridTrajectory):
    """Per-segment (times, y_a - y_b) blocks; grids must match exactly."""
    if len(a.segments) != len(b.segments):
        raise ValueError("trajectories have different segmentations")
    blocks = []
    for sa, sb in zip(a.segments, b.segments):
        if len(sa.times) != len(sb.times) or np.max(np.abs(sa.times - sb.times)) > 1e-9:
            raise ValueError("trajectory grids do not match")
        blocks.append((sa.times, sa.outputs - sb.outputs))
    return blocks


def l2_output_difference(a: HybridTrajectory, b: HybridTrajectory) -> L2Report:
    """L2 norm of y_a - y_b on the shared grid."""
    total, est = _trapz_blocks(output_difference(a, b))
    value = float(np.sqrt(max(total, 0.0)))
    err = est / (2.0 * value) if value > 0.0 else np.sqrt(est)
    return L2Report(value=value, rule="trapezoid", error_estimate=float(err))


# ---------------------------------------------------------------------------
# CSV input/output


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: HybridTrajectory, path) -> None:
    """Write the flattened trajectory: time, mode, o, states (padded), outputs."""
    times = traj.grid_times()
    modes = traj.grid_modes()
    outs = traj.grid_discrete_outputs()
    states = traj.grid_states_padded()
    ys = traj.grid_outputs()
    n, p = states.shape[1], ys.shape[1]
    header = ["time", "mode", "o"] + [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(p)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(times)):
            row = [_fmt(times[k]), modes[k], outs[k]]
            row += [_fmt(v) if np.isfinite(v) else "" for v in states[k]]
            row += [_fmt(v) for v in ys[k]]
            fh.write(",".join(row) + "\n")


def read_trajectory_csv(path) -> dict:
    """Read a trajectory CSV back into arrays (NaN for padded state cells)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    nx = sum(1 for h in header if h.startswith("x"))
    ny = sum(1 for h in header if h.startswith("y"))
    times = np.array([float(r[0]) for r in rows])
    modes = [r[1] for r in rows]
    outs = [r[2] for r in rows]
    states = np.array(
        [[float(v) if v else np.nan for v in r[3 : 3 + nx]] for r in rows]
    )
    ys = np.array([[float(v) for v in r[3 + nx : 3 + nx + ny]] for r in rows])
    return {"time": times, "mode": modes, "o": outs, "x": states, "y": ys}


def write_comparison_csv(times, y, y_hat, path) -> None:
    """Write time, y, y_hat and their difference, one block per column set."""
    y = np.atleast_2d(y)
    y_hat = np.atleast_2d(y_hat)
    p = y.shape[1]
    header = (
        ["time"]
        + [f"y{i}" for i in range(p)]
        + [f"yhat{i}" for i in range(p)]
        + [f"err{i}" for i in range(p)]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(times)):
            row = [_fmt(times[k])]
            row += [_fmt(v) for v in y[k]]
            row += [_fmt(v) for v in y_hat[k]]
            row += [_fmt(a - b) for a, b in zip(y[k], y_hat[k])]
            fh.write(",".join(row) + "\n")


def read_comparison_csv(path) -> dict:
    """Inverse of :func:`write_comparison_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    p = sum(1 for h in header if h.startswith("y") and not h.startswith("yhat"))
    data = np.array([[float(v) for v in r] for r in rows])
    return {
        "time": data[:, 0],
        "y": data[:, 1 : 1 + p],
        "y_hat": data[:, 1 + p : 1 + 2 * p],
        "err": data[:, 1 + 2 * p : 1 + 3 * p],
    }
