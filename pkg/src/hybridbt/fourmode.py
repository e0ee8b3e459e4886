"""Bundled four-mode demonstration system and its reference fixtures.

A compact hybrid system with four modes (state dimensions 3, 2, 3, 2),
two events and one reset matrix per transition, all scaled by ``1/tau``.
With ``tau = 3`` both generalized Gramian LMI families are feasible; with
``tau = 1`` they are not (a reset cycle is expansive), which exercises the
solver's infeasibility reporting.

``reference_*`` functions return externally computed certificate fixtures
for this model, rounded to five significant digits: an observability
family, a reachability family, and the balanced singular values they
produce. They are verification baselines, not solver output.

The stored mode-4 drift matrix is ``diag(-1, -1/2)``: with the sign
flipped positive the mode-4 Lyapunov inequality has no positive definite
solution, so only the stable variant can carry the certificates above
(``stable_mode4=False`` gives the unstable variant for experiments).
"""

from __future__ import annotations

import numpy as np

from .gramian import GramianFamily
from .model import LinearHybridSystem, ResetMap, Subsystem, TimedEventSequence
from .signals import InputSignal, make_signal

__all__ = [
    "four_mode_system",
    "reference_schedule",
    "reference_input",
    "reference_observability",
    "reference_reachability",
    "reference_sigma",
    "REFERENCE_ORDERS",
]

# reduction order choices exercised by the demonstration harness
REFERENCE_ORDERS = {
    "first": {"q1": 2, "q2": 2, "q3": 2, "q4": 2},
    "second": {"q1": 2, "q2": 1, "q3": 2, "q4": 1},
    "full": {"q1": 3, "q2": 2, "q3": 3, "q4": 2},
}


def four_mode_system(tau: float = 3.0, stable_mode4: bool = True) -> LinearHybridSystem:
    """Build the four-mode system; resets are scaled by ``1/tau``."""
    a4 = np.diag([-1.0, -0.5]) if stable_mode4 else np.diag([1.0, 0.5])
    modes = {
        "q1": Subsystem(
            A=np.diag([-1.0, -3.0, -4.0]),
            B=np.array([[1.0], [-1.0], [1.0]]),
            C=np.array([[1.0, -1.0, 1.0]]),
        ),
        "q2": Subsystem(
            A=np.diag([-2.0, -1.0]),
            B=np.array([[1.0], [1.0]]),
            C=np.array([[1.0, 1.5]]),
        ),
        "q3": Subsystem(
            A=np.diag([-3.0, -1.0, -2.0]),
            B=np.array([[1.0], [1.0], [3.0]]),
            C=np.array([[1.0, 1.0, 1.0]]),
        ),
        "q4": Subsystem(
            A=a4,
            B=np.array([[2.0], [-1.0]]),
            C=np.array([[2.0, 1.0]]),
        ),
    }
    delta = {
        ("q1", "0"): "q4", ("q1", "1"): "q2",
        ("q2", "0"): "q3", ("q2", "1"): "q4",
        ("q3", "0"): "q4", ("q3", "1"): "q1",
        ("q4", "0"): "q2", ("q4", "1"): "q3",
    }
    raw_resets = {
        ("q1", "0"): [[0.0, 0.0, -1.0], [0.0, 0.5, 0.0]],
        ("q1", "1"): [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
        ("q2", "0"): [[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]],
        ("q2", "1"): [[-1.0, 1.0], [0.0, 1.0]],
        ("q3", "0"): [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]],
        ("q3", "1"): [[1.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
        ("q4", "0"): [[-1.0, 0.0], [0.0, -0.5]],
        ("q4", "1"): [[-1.0, 0.0], [1.0, 0.0], [0.0, 0.5]],
    }
    resets = {
        key: ResetMap(
            source=key[0], event=key[1], target=delta[key],
            matrix=np.asarray(m, dtype=float) / tau,
        )
        for key, m in raw_resets.items()
    }
    return LinearHybridSystem(
        modes=modes,
        events=("0", "1"),
        outputs=("o1", "o2", "o3", "o4"),
        delta=delta,
        readout={"q1": "o1", "q2": "o2", "q3": "o3", "q4": "o4"},
        resets=resets,
        initial_mode="q2",
        initial_state=np.zeros(2),
        metadata={
            "name": "four-mode",
            "tau": tau,
            "mode4_stable": stable_mode4,
            "notes": (
                "dwell times in the companion schedule are uniform placeholders; "
                "the reduction error bound holds for every schedule"
            ),
        },
    )


def reference_schedule(horizon: float = 15.0) -> TimedEventSequence:
    """Companion event schedule: eleven events, uniform 1.25 s dwell.

    Starting from q2 the mode sequence runs q2, q3, q1, q4, q3, q4, q3,
    q4, q3, q1, q4, q3 over [0, 15] s.
    """
    events = ["0", "1", "0", "1", "0", "1", "0", "1", "1", "0", "1"]
    return TimedEventSequence(
        entries=tuple((e, 1.25) for e in events), horizon=horizon
    )


def reference_input() -> InputSignal:
    """The demonstration input: 5 sin(20 t) e^{-t/5} + 0.5 e^{-t/2}."""
    return make_signal(
        {"kind": "damped_sine", "params": {"a1": 5.0, "w": 20.0, "tau1": 5.0, "a2": 0.5, "tau2": 2.0}}
    )


def reference_observability() -> GramianFamily:
    """Externally computed observability certificate (5 significant digits)."""
    mats = {
        "q1": [
            [3.2662, -0.1118, 0.0733],
            [-0.1118, 1.7564, -0.0693],
            [0.0733, -0.0693, 1.4755],
        ],
        "q2": [[2.4546, -0.0023], [-0.0023, 4.0827]],
        "q3": [
            [1.7873, -0.0041, 0.0752],
            [-0.0041, 3.4766, 0.1468],
            [0.0752, 0.1468, 2.4182],
        ],
        "q4": [[3.9745, 0.6789], [0.6789, 4.6925]],
    }
    return GramianFamily(
        kind="observability",
        matrices={q: np.asarray(m) for q, m in mats.items()},
        epsilon=1e-6,
    )


def reference_reachability() -> GramianFamily:
    """Externally computed reachability certificate (5 significant digits)."""
    mats = {
        "q1": [
            [5.3173, -0.1332, 0.3859],
            [-0.1332, 2.3055, -0.0914],
            [0.3859, -0.0914, 1.9288],
        ],
        "q2": [[3.8471, 0.1453], [0.1453, 5.3503]],
        "q3": [
            [3.1234, -0.0344, 0.3250],
            [-0.0344, 5.2759, 0.5661],
            [0.3250, 0.5661, 4.5523],
        ],
        "q4": [[6.2062, -0.3344], [-0.3344, 7.4608]],
    }
    return GramianFamily(
        kind="reachability",
        matrices={q: np.asarray(m) for q, m in mats.items()},
        epsilon=1e-6,
    )


def reference_sigma() -> dict[str, np.ndarray]:
    """Balanced singular values produced by the reference certificates."""
    return {
        "q1": np.array([4.1894, 2.0184, 1.6542]),
        "q2": np.array([4.6754, 3.0703]),
        "q3": np.array([4.3741, 3.2543, 2.3291]),
        "q4": np.array([5.9718, 4.8538]),
    }
