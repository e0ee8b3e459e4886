"""Seeded generators for randomized testing and experimentation.

Random systems are built to be quadratically stable by construction: each
drift matrix is shifted until its symmetric part is safely negative and
reset matrices are rescaled to a small spectral norm, so the Gramian LMIs
are feasible and the solver is expected to succeed on them.
"""

from __future__ import annotations

import numpy as np

from .model import LinearHybridSystem, ResetMap, Subsystem, TimedEventSequence
from .signals import ExpressionSignal, InputSignal, ZohSignal

__all__ = [
    "random_system",
    "random_schedule",
    "random_smooth_input",
    "random_zoh_input",
]


def random_system(
    rng: np.random.Generator,
    n_modes: int = 3,
    max_dim: int = 4,
    m: int = 1,
    p: int = 1,
    n_events: int = 2,
    reset_scale: float = 0.3,
    decay_range: tuple[float, float] = (0.5, 2.0),
) -> LinearHybridSystem:
    """Draw a stable hybrid system with contractive-ish resets.

    ``reset_scale`` bounds the spectral norm of every reset matrix; values
    around 0.3 leave the coupled LMIs comfortably feasible.
    """
    mode_ids = [f"q{i + 1}" for i in range(n_modes)]
    events = tuple(str(i) for i in range(n_events))
    dims = {q: int(rng.integers(1, max_dim + 1)) for q in mode_ids}

    modes = {}
    for q in mode_ids:
        n = dims[q]
        raw = 0.4 * rng.normal(size=(n, n))
        sym_top = np.linalg.eigvalsh(0.5 * (raw + raw.T))[-1]
        shift = sym_top + rng.uniform(*decay_range)
        modes[q] = Subsystem(
            A=raw - shift * np.eye(n),
            B=rng.normal(size=(n, m)),
            C=rng.normal(size=(p, n)),
        )

    delta = {}
    resets = {}
    for q in mode_ids:
        for ev in events:
            tgt = mode_ids[int(rng.integers(0, n_modes))]
            mat = rng.normal(size=(dims[tgt], dims[q]))
            top = np.linalg.svd(mat, compute_uv=False)[0]
            mat *= reset_scale * rng.uniform(0.3, 1.0) / max(top, 1e-12)
            delta[(q, ev)] = tgt
            resets[(q, ev)] = ResetMap(source=q, event=ev, target=tgt, matrix=mat)

    q0 = mode_ids[int(rng.integers(0, n_modes))]
    return LinearHybridSystem(
        modes=modes,
        events=events,
        outputs=tuple(f"o{i + 1}" for i in range(n_modes)),
        delta=delta,
        readout={q: f"o{i + 1}" for i, q in enumerate(mode_ids)},
        resets=resets,
        initial_mode=q0,
        initial_state=np.zeros(dims[q0]),
        metadata={"name": "random", "reset_scale": reset_scale},
    )


def random_schedule(
    rng: np.random.Generator,
    model: LinearHybridSystem,
    horizon: float = 4.0,
    n_entries: int = 5,
    zero_dwell_prob: float = 0.0,
) -> TimedEventSequence:
    """Random event schedule; dwells roughly fill the horizon."""
    entries = []
    budget = horizon * rng.uniform(0.5, 0.9)
    for _ in range(n_entries):
        ev = model.events[int(rng.integers(0, len(model.events)))]
        dwell = 0.0 if rng.random() < zero_dwell_prob else budget / n_entries * rng.uniform(0.4, 1.6)
        entries.append((ev, float(dwell)))
    return TimedEventSequence(entries=tuple(entries), horizon=horizon)


def random_smooth_input(
    rng: np.random.Generator, m: int = 1, n_terms: int = 3, amplitude: float = 1.0
) -> InputSignal:
    """Random sum of sinusoids per channel (bounded, smooth)."""
    amps = rng.uniform(-amplitude, amplitude, size=(m, n_terms)) / n_terms
    freqs = rng.uniform(0.3, 6.0, size=(m, n_terms))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(m, n_terms))

    def fn(t):
        arg = freqs[None, :, :] * t[:, None, None] + phases[None, :, :]
        return (amps[None, :, :] * np.sin(arg)).sum(axis=2)

    return ExpressionSignal(
        fn, m, "sine_mix",
        {"amps": amps.tolist(), "freqs": freqs.tolist(), "phases": phases.tolist()},
    )


def random_zoh_input(
    rng: np.random.Generator,
    m: int,
    horizon: float,
    piece: float = 0.25,
    amplitude: float = 1.0,
) -> ZohSignal:
    """Random staircase with pieces of length ``piece`` (aligned to the grid
    whenever ``piece`` is a multiple of the integration step)."""
    n_pieces = max(1, int(np.ceil(horizon / piece)))
    times = np.arange(n_pieces) * piece
    values = rng.uniform(-amplitude, amplitude, size=(n_pieces, m))
    return ZohSignal(times, values)
