"""Continuous input signals for simulation.

Two flavours: closed-form expressions built from a small registry (so a
signal can be named in a JSON experiment file), and sampled signals with
zero-order hold. ZOH signals are right-continuous; ``evaluate_left``
exists so integrators can take the left limit at a hold boundary.
"""

from __future__ import annotations

import numpy as np

__all__ = ["InputSignal", "ExpressionSignal", "ZohSignal", "make_signal", "register_signal"]


class InputSignal:
    """Time -> R^m map on [0, horizon]; subclasses implement ``evaluate``."""

    m: int = 1
    #: times where the signal may jump; integrators align steps to these
    breakpoints: tuple[float, ...] = ()

    def evaluate(self, t) -> np.ndarray:
        """Values at times ``t`` (scalar or 1-D array), shape (len(t), m)."""
        raise NotImplementedError

    def evaluate_left(self, t) -> np.ndarray:
        """Left limits at ``t``; differs from ``evaluate`` only at jumps."""
        return self.evaluate(t)

    def describe(self) -> dict:
        """JSON-ready description that :func:`make_signal` can rebuild."""
        raise NotImplementedError


class ExpressionSignal(InputSignal):
    """Closed-form signal ``fn(t) -> (len(t), m)`` registered under a name."""

    def __init__(self, fn, m: int, kind: str, params: dict | None = None):
        self._fn = fn
        self.m = int(m)
        self.kind = kind
        self.params = dict(params or {})

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.asarray(self._fn(t), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        return out

    def describe(self) -> dict:
        return {"kind": self.kind, "params": self.params}


class ZohSignal(InputSignal):
    """Sampled signal held constant on [t_k, t_{k+1}) (right-continuous)."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or len(times) != len(values):
            raise ValueError("times and values must have matching leading length")
        if len(times) == 0:
            raise ValueError("empty sample set")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        self.times = times
        self.values = values
        self.m = values.shape[1]
        self.breakpoints = tuple(float(t) for t in times[1:])

    def _piece(self, t, side: str) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self.times, t, side=side) - 1
        idx = np.clip(idx, 0, len(self.times) - 1)
        return self.values[idx]

    def evaluate(self, t) -> np.ndarray:
        return self._piece(t, "right")

    def evaluate_left(self, t) -> np.ndarray:
        return self._piece(t, "left")

    def describe(self) -> dict:
        return {
            "kind": "zoh",
            "times": self.times.tolist(),
            "values": self.values.tolist(),
        }


def _zero(params):
    m = int(params.get("m", 1))
    return ExpressionSignal(lambda t: np.zeros((len(t), m)), m, "zero", {"m": m})


def _constant(params):
    value = np.atleast_1d(np.asarray(params["value"], dtype=float))
    return ExpressionSignal(
        lambda t: np.tile(value, (len(t), 1)), len(value), "constant",
        {"value": value.tolist()},
    )


def _damped_sine(params):
    """a1*sin(w t)*exp(-t/tau1) + a2*exp(-t/tau2), scalar."""
    a1 = float(params.get("a1", 1.0))
    w = float(params.get("w", 1.0))
    tau1 = float(params.get("tau1", 1.0))
    a2 = float(params.get("a2", 0.0))
    tau2 = float(params.get("tau2", 1.0))

    def fn(t):
        return a1 * np.sin(w * t) * np.exp(-t / tau1) + a2 * np.exp(-t / tau2)

    return ExpressionSignal(fn, 1, "damped_sine",
                            {"a1": a1, "w": w, "tau1": tau1, "a2": a2, "tau2": tau2})


def _sine_mix(params):
    """Sum of sinusoids per channel: amps[i][j]*sin(freqs[i][j] t + phases[i][j])."""
    amps = np.atleast_2d(np.asarray(params["amps"], dtype=float))
    freqs = np.atleast_2d(np.asarray(params["freqs"], dtype=float))
    phases = np.atleast_2d(np.asarray(params.get("phases", np.zeros_like(amps)), dtype=float))

    def fn(t):
        # (N, channels, terms) -> sum over terms
        arg = freqs[None, :, :] * t[:, None, None] + phases[None, :, :]
        return (amps[None, :, :] * np.sin(arg)).sum(axis=2)

    return ExpressionSignal(fn, amps.shape[0], "sine_mix",
                            {"amps": amps.tolist(), "freqs": freqs.tolist(),
                             "phases": phases.tolist()})


_REGISTRY = {
    "zero": _zero,
    "constant": _constant,
    "damped_sine": _damped_sine,
    "sine_mix": _sine_mix,
}


def register_signal(kind: str, factory) -> None:
    """Register ``factory(params) -> InputSignal`` under ``kind``."""
    _REGISTRY[kind] = factory


def make_signal(spec: dict) -> InputSignal:
    """Build a signal from its JSON description.

    ``{"kind": "zoh", "times": [...], "values": [...]}`` or
    ``{"kind": <registered name>, "params": {...}}``.
    """
    kind = spec.get("kind")
    if kind == "zoh":
        return ZohSignal(spec["times"], spec["values"])
    if kind not in _REGISTRY:
        raise ValueError(f"unknown signal kind {kind!r}")
    return _REGISTRY[kind](spec.get("params", {}))
