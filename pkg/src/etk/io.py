"""JSON file formats for matrices, states and channels.

Matrix: ``{"rows": n, "cols": n, "data": [[re, im], ...]}`` in row-major order.
States add ``"dims": [dA, dB]``; channels add ``"d_in"``, ``"d_out"`` and
``"normalization": "trace-one"``.
"""

import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from .quantum import BipartiteState, ChannelRep


class FormatError(ValueError):
    """Malformed input file; message carries a location where known."""


def matrix_to_dict(M) -> Dict[str, Any]:
    M = np.asarray(M, dtype=complex)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in M.ravel()],
    }


def matrix_from_dict(d: Dict[str, Any]) -> np.ndarray:
    try:
        rows, cols, data = int(d["rows"]), int(d["cols"]), d["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"matrix object needs integer 'rows', 'cols' and a 'data' list ({exc})") from None
    if len(data) != rows * cols:
        raise FormatError(f"matrix data has {len(data)} entries, expected {rows} x {cols} = {rows * cols}")
    vals = np.empty(rows * cols, dtype=complex)
    for n, entry in enumerate(data):
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise FormatError(f"data entry {n} must be a [re, im] pair, got {entry!r}")
        vals[n] = complex(float(entry[0]), float(entry[1]))
    if not np.all(np.isfinite(vals)):
        raise FormatError("matrix data contains non-finite values")
    return vals.reshape(rows, cols)


def state_to_dict(state: BipartiteState) -> Dict[str, Any]:
    d = matrix_to_dict(state.operator)
    d["dims"] = list(state.dims)
    return d


def state_from_dict(d: Dict[str, Any]) -> BipartiteState:
    M = matrix_from_dict(d)
    if "dims" not in d:
        raise FormatError("state object needs 'dims': [dA, dB]")
    dims = tuple(int(x) for x in d["dims"])
    try:
        return BipartiteState(M, dims)
    except ValueError as exc:
        raise FormatError(f"invalid state: {exc}") from None


def channel_from_dict(d: Dict[str, Any]) -> ChannelRep:
    M = matrix_from_dict(d)
    try:
        return ChannelRep(M, int(d["d_in"]), int(d["d_out"]), d.get("normalization", "trace-one"))
    except KeyError as exc:
        raise FormatError(f"channel object missing {exc}") from None
    except ValueError as exc:
        raise FormatError(f"invalid channel: {exc}") from None


def _load(path) -> Dict[str, Any]:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_matrix(path) -> np.ndarray:
    return matrix_from_dict(_load(path))


def load_state(path) -> BipartiteState:
    try:
        return state_from_dict(_load(path))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def load_channel(path) -> ChannelRep:
    try:
        return channel_from_dict(_load(path))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def dump(obj: Dict[str, Any], path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
