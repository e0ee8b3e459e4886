"""JSON serialization of hybrid-system models and event schedules.

Model schema (matrices are row-major nested arrays; floats are written in
shortest round-trip decimal form, so files re-read bit-identically):

    {
      "modes":   {"q1": {"A": [[...]], "B": [[...]], "C": [[...]]}, ...},
      "events":  ["0", "1"],
      "outputs": ["o1", ...],
      "delta":   {"q1,0": "q4", ...},
      "lambda":  {"q1": "o1", ...},
      "resets":  {"q4,0,q1": [[...]], ...},      # "target,event,source"
      "initial": {"mode": "q2", "x0": [0, 0]},
      "metadata": {...}                           # optional, free-form
    }

Schedule schema: {"events": [["0", 1.25], ...], "horizon": 15.0}.
"""

from __future__ import annotations

import json

import numpy as np

from .model import LinearHybridSystem, ResetMap, Subsystem, TimedEventSequence

__all__ = [
    "ModelFileError",
    "load_model",
    "save_model",
    "load_schedule",
    "save_schedule",
]


class ModelFileError(ValueError):
    """Model or schedule JSON file is malformed."""


def _matrix(doc, path: str) -> np.ndarray:
    try:
        m = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: not a numeric matrix") from exc
    if m.ndim == 1:
        m = m[:, None] if path.endswith(".B") else m[None, :]
    if m.ndim != 2:
        raise ModelFileError(f"{path}: expected a 2-D matrix, got ndim={m.ndim}")
    return m


def load_model(path) -> LinearHybridSystem:
    """Read a model file. Structural invariants are NOT enforced here; run
    :func:`hybridbt.model.validate` on the result."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"not valid JSON: {exc}") from exc

    try:
        modes = {
            str(q): Subsystem(
                A=_matrix(spec["A"], f"modes[{q}].A"),
                B=_matrix(spec["B"], f"modes[{q}].B"),
                C=_matrix(spec["C"], f"modes[{q}].C"),
            )
            for q, spec in doc["modes"].items()
        }
        events = tuple(str(e) for e in doc["events"])
        outputs = tuple(str(o) for o in doc["outputs"])
        delta = {}
        for key, tgt in doc["delta"].items():
            parts = key.split(",")
            if len(parts) != 2:
                raise ModelFileError(f"delta key {key!r} is not 'mode,event'")
            delta[(parts[0], parts[1])] = str(tgt)
        resets = {}
        for key, mat in doc["resets"].items():
            parts = key.split(",")
            if len(parts) != 3:
                raise ModelFileError(f"resets key {key!r} is not 'target,event,source'")
            tgt, ev, src = parts
            resets[(src, ev)] = ResetMap(
                source=src, event=ev, target=tgt, matrix=_matrix(mat, f"resets[{key}]")
            )
        initial = doc["initial"]
        return LinearHybridSystem(
            modes=modes,
            events=events,
            outputs=outputs,
            delta=delta,
            readout={str(q): str(o) for q, o in doc["lambda"].items()},
            resets=resets,
            initial_mode=str(initial["mode"]),
            initial_state=np.asarray(initial["x0"], dtype=float),
            metadata=dict(doc.get("metadata", {})),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelFileError(f"missing or malformed field: {exc!r}") from exc


def model_to_dict(model: LinearHybridSystem) -> dict:
    doc = {
        "modes": {
            q: {"A": sub.A.tolist(), "B": sub.B.tolist(), "C": sub.C.tolist()}
            for q, sub in model.modes.items()
        },
        "events": list(model.events),
        "outputs": list(model.outputs),
        "delta": {f"{q},{ev}": tgt for (q, ev), tgt in model.delta.items()},
        "lambda": dict(model.readout),
        "resets": {
            f"{r.target},{r.event},{r.source}": r.matrix.tolist()
            for r in model.resets.values()
        },
        "initial": {"mode": model.initial_mode, "x0": model.initial_state.tolist()},
    }
    if model.metadata:
        doc["metadata"] = model.metadata
    return doc


def save_model(model: LinearHybridSystem, path, extra: dict | None = None) -> None:
    """Write a model file; ``extra`` top-level blocks (e.g. provenance) are merged in."""
    doc = model_to_dict(model)
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_schedule(path) -> TimedEventSequence:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return schedule_from_dict(doc)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"not valid JSON: {exc}") from exc


def schedule_from_dict(doc: dict) -> TimedEventSequence:
    try:
        entries = tuple((str(e), float(t)) for e, t in doc["events"])
        return TimedEventSequence(entries=entries, horizon=float(doc["horizon"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed schedule: {exc!r}") from exc


def save_schedule(schedule: TimedEventSequence, path) -> None:
    doc = {
        "events": [[e, t] for e, t in schedule.entries],
        "horizon": schedule.horizon,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
