"""Data model for externally switched linear hybrid systems.

A system couples a finite Moore automaton with one LTI subsystem per
discrete mode. Discrete events arrive from outside; each transition
applies a linear reset matrix to the continuous state. Instances are
immutable after construction (arrays are marked read-only), so they are
safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Subsystem",
    "ResetMap",
    "LinearHybridSystem",
    "TimedEventSequence",
    "ModeInterval",
    "ValidationReport",
    "UnknownIdError",
    "validate",
    "step_mode",
    "discrete_trajectory",
]


class UnknownIdError(KeyError):
    """A mode or event identifier does not resolve to a declared element."""


def _ro(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Subsystem:
    """One mode's LTI dynamics ``x' = A x + B u``, ``y = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _ro(np.atleast_2d(self.A)))
        object.__setattr__(self, "B", _ro(np.atleast_2d(self.B)))
        object.__setattr__(self, "C", _ro(np.atleast_2d(self.C)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class ResetMap:
    """Linear state reset applied on the transition (source, event) -> target."""

    source: str
    event: str
    target: str
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _ro(np.atleast_2d(self.matrix)))


@dataclass(frozen=True)
class TimedEventSequence:
    """Finite prefix of an event schedule plus a simulation horizon.

    ``entries`` are (event id, dwell time) pairs: the i-th event arrives
    ``dwell_i`` seconds after the previous one (after t=0 for the first).
    Zero dwell is allowed and means the event arrives instantly. The mode
    reached by the last entry persists until ``horizon``.
    """

    entries: tuple[tuple[str, float], ...]
    horizon: float

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((str(e), float(t)) for e, t in self.entries)
        )
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        for e, t in self.entries:
            if t < 0.0:
                raise ValueError(f"negative dwell time {t} for event {e!r}")

    def arrival_times(self) -> np.ndarray:
        """Cumulative arrival time of each entry."""
        return np.cumsum([t for _, t in self.entries]) if self.entries else np.empty(0)


@dataclass(frozen=True)
class LinearHybridSystem:
    """Moore automaton + per-mode LTI subsystems + linear reset maps.

    Fields mirror the mathematical tuple: ``modes`` maps mode id to its
    subsystem, ``delta`` is the (total) transition map on mode x event,
    ``readout`` assigns each mode its discrete output, and ``resets``
    holds one reset matrix per (source mode, event) pair. Iteration order
    of ``modes``/``events``/``outputs`` is declaration order and is used
    everywhere deterministic ordering matters.
    """

    modes: dict[str, Subsystem]
    events: tuple[str, ...]
    outputs: tuple[str, ...]
    delta: dict[tuple[str, str], str]
    readout: dict[str, str]
    resets: dict[tuple[str, str], ResetMap]
    initial_mode: str
    initial_state: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "modes", dict(self.modes))
        object.__setattr__(self, "events", tuple(str(e) for e in self.events))
        object.__setattr__(self, "outputs", tuple(str(o) for o in self.outputs))
        object.__setattr__(self, "initial_state", _ro(np.atleast_1d(self.initial_state)))

    @property
    def mode_ids(self) -> tuple[str, ...]:
        return tuple(self.modes)

    def dim(self, mode: str) -> int:
        try:
            return self.modes[mode].n
        except KeyError as exc:
            raise UnknownIdError(f"unknown mode {mode!r}") from exc

    @property
    def m(self) -> int:
        return next(iter(self.modes.values())).m

    @property
    def p(self) -> int:
        return next(iter(self.modes.values())).p

    def subsystem(self, mode: str) -> Subsystem:
        try:
            return self.modes[mode]
        except KeyError as exc:
            raise UnknownIdError(f"unknown mode {mode!r}") from exc

    def transitions(self):
        """Yield (source, event, target, reset matrix) in declaration order."""
        for (source, event), reset in self.resets.items():
            yield source, event, self.delta[(source, event)], reset.matrix


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`: every violation, not just the first."""

    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        lines = ["OK" if self.ok else f"{len(self.errors)} violation(s)"]
        lines += [f"  error: {e}" for e in self.errors]
        lines += [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def validate(model: LinearHybridSystem) -> ValidationReport:
    """Check every structural invariant of a hybrid system.

    Violations are collected into the report (with a path to the offending
    field) rather than raised, so a single pass documents everything wrong
    with a model file.
    """
    rep = ValidationReport()
    err = rep.errors.append

    if not model.modes:
        err("modes: empty")
    if not model.events:
        err("events: empty")
    if not model.outputs:
        err("outputs: empty")
    if not model.modes or not model.events:
        return rep

    dims_mp = set()
    for q, sub in model.modes.items():
        if sub.A.shape[0] != sub.A.shape[1]:
            err(f"modes[{q}].A: not square, shape {sub.A.shape}")
        if sub.B.shape[0] != sub.n:
            err(f"modes[{q}].B: dimension mismatch, {sub.B.shape[0]} rows for n={sub.n}")
        if sub.C.shape[1] != sub.n:
            err(f"modes[{q}].C: dimension mismatch, {sub.C.shape[1]} cols for n={sub.n}")
        dims_mp.add((sub.m, sub.p))
    if len(dims_mp) > 1:
        err(f"modes: input/output dimensions differ across modes: {sorted(dims_mp)}")

    for q in model.modes:
        for ev in model.events:
            tgt = model.delta.get((q, ev))
            if tgt is None:
                err(f"delta[{q},{ev}]: missing (transition map must be total)")
            elif tgt not in model.modes:
                err(f"delta[{q},{ev}]: target {tgt!r} is not a declared mode")
            reset = model.resets.get((q, ev))
            if reset is None:
                err(f"resets[{q},{ev}]: reset map absent")
            elif tgt in model.modes:
                if reset.target != tgt:
                    err(
                        f"resets[{q},{ev}]: declared target {reset.target!r} "
                        f"disagrees with delta ({tgt!r})"
                    )
                want = (model.modes[tgt].n, model.modes[q].n)
                if reset.matrix.shape != want:
                    err(
                        f"resets[{q},{ev}]: dimension mismatch, shape "
                        f"{reset.matrix.shape} but target/source dims are {want}"
                    )
        out = model.readout.get(q)
        if out is None:
            err(f"lambda[{q}]: missing (readout map must be total)")
        elif out not in model.outputs:
            err(f"lambda[{q}]: output {out!r} is not declared")

    for (q, ev) in model.delta:
        if q not in model.modes:
            err(f"delta[{q},{ev}]: unknown source mode {q!r}")
        if ev not in model.events:
            err(f"delta[{q},{ev}]: unknown event {ev!r}")
    for (q, ev) in model.resets:
        if (q, ev) not in model.delta:
            err(f"resets[{q},{ev}]: no matching transition")

    if model.initial_mode not in model.modes:
        err(f"initial.mode: unknown mode {model.initial_mode!r}")
    else:
        n0 = model.modes[model.initial_mode].n
        if model.initial_state.shape != (n0,):
            err(
                f"initial.x0: length {model.initial_state.shape} does not match "
                f"n={n0} of mode {model.initial_mode!r}"
            )
        elif np.any(model.initial_state != 0.0):
            rep.warnings.append(
                "initial.x0: nonzero; model reduction and its error bound assume x0 = 0"
            )
    return rep


def step_mode(model: LinearHybridSystem, mode: str, event: str):
    """Apply one discrete event: returns (next mode, reset matrix)."""
    if mode not in model.modes:
        raise UnknownIdError(f"unknown mode {mode!r}")
    if event not in model.events:
        raise UnknownIdError(f"unknown event {event!r}")
    target = model.delta[(mode, event)]
    return target, model.resets[(mode, event)].matrix


@dataclass(frozen=True)
class ModeInterval:
    """One piece of the discrete trajectory: mode and output on [start, end)."""

    start: float
    end: float
    mode: str
    output: str
    event: str | None = None  # event that entered this interval (None for the first)


def discrete_trajectory(
    model: LinearHybridSystem, schedule: TimedEventSequence
) -> list[ModeInterval]:
    """Mode/output intervals that partition [0, horizon).

    Zero-dwell entries yield empty intervals but still advance the mode,
    so downstream consumers see every reset. Events scheduled at or past
    the horizon are dropped.
    """
    intervals = []
    mode = model.initial_mode
    t = 0.0
    entering = None
    for event, dwell in schedule.entries:
        t_next = t + dwell
        if t_next >= schedule.horizon:
            break
        intervals.append(ModeInterval(t, t_next, mode, model.readout[mode], event=entering))
        mode, _ = step_mode(model, mode, event)
        t = t_next
        entering = event
    intervals.append(
        ModeInterval(t, schedule.horizon, mode, model.readout[mode], event=entering)
    )
    return intervals
