"""On-disk formats: the JSON subspace container and the CSV reports.

A subspace file stores a list of orthonormal bases of a common C^n, each an
n x m complex matrix written row-major with explicit {re, im} entries.
Writing and re-reading is bit-exact for finite doubles because floats are
serialized through repr.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .exceptions import InvalidInputError
from .grassmann import StiefelBasis

FORMAT_VERSION = "1"
KEEP_RAW_TOL = 1e-10
POLISH_TOL = 1e-8


class SubspaceFileError(InvalidInputError):
    """Malformed or inconsistent subspace file."""


def _entry(value: complex) -> dict:
    return {"re": float(value.real), "im": float(value.imag)}


def write_subspace_file(path, bases) -> None:
    """Write orthonormal bases to ``path`` in the versioned JSON layout."""
    mats = [b.matrix if isinstance(b, StiefelBasis) else np.asarray(b, dtype=complex)
            for b in bases]
    if not mats:
        raise InvalidInputError("need at least one basis to write")
    n, m = mats[0].shape
    for mat in mats:
        if mat.shape != (n, m):
            raise InvalidInputError("all bases must share one shape")
    payload = {
        "version": FORMAT_VERSION,
        "n": n,
        "m": m,
        "count": len(mats),
        "bases": [[[_entry(value) for value in row] for row in mat] for mat in mats],
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _require_int(payload: dict, key: str) -> int:
    if key not in payload:
        raise SubspaceFileError(f"missing field {key!r}")
    value = payload[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SubspaceFileError(f"field {key!r} must be an integer, got {value!r}")
    return value

def _read_entry(raw, where: str) -> complex:
    if not isinstance(raw, dict):
        raise SubspaceFileError(f"{where} must be an object with 're' and 'im'")
    for part in ("re", "im"):
        if part not in raw:
            raise SubspaceFileError(f"{where}.{part} is missing")
        if isinstance(raw[part], bool) or not isinstance(raw[part], (int, float)):
            raise SubspaceFileError(f"{where}.{part} must be a number, got {raw[part]!r}")
    return complex(raw["re"], raw["im"])


def _polar_orthonormalize(mat: np.ndarray) -> np.ndarray:
    left, _, right_h = np.linalg.svd(mat, full_matrices=False)
    return left @ right_h


def read_subspace_file(path, repair: bool = False) -> list:
    """Read a subspace file back into a list of StiefelBasis objects.

    Bases whose orthonormality defect exceeds KEEP_RAW_TOL but stays within
    POLISH_TOL are silently replaced by their polar factor; beyond that the
    file is rejected unless ``repair`` is set, in which case the polar factor
    is used as well.
    """
    with open(path) as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as err:
            raise SubspaceFileError(
                f"not valid JSON (line {err.lineno}, column {err.colno}): {err.msg}"
            ) from err
    if not isinstance(payload, dict):
        raise SubspaceFileError("top-level value must be an object")
    version = payload.get("version")
    if version != FORMAT_VERSION:
        raise SubspaceFileError(f"unsupported version {version!r}")
    n = _require_int(payload, "n")
    m = _require_int(payload, "m")
    count = _require_int(payload, "count")
    if not (1 <= m <= n):
        raise SubspaceFileError(f"need 1 <= m <= n, got n={n}, m={m}")
    if count < 1:
        raise SubspaceFileError("count must be positive")
    raw_bases = payload.get("bases")
    if not isinstance(raw_bases, list):
        raise SubspaceFileError("field 'bases' must be a list")
    if len(raw_bases) != count:
        raise SubspaceFileError(f"count says {count} bases, found {len(raw_bases)}")
    out = []
    for b, raw_mat in enumerate(raw_bases):
        if not isinstance(raw_mat, list) or len(raw_mat) != n:
            raise SubspaceFileError(f"bases[{b}] must be a list of {n} rows")
        mat = np.empty((n, m), dtype=complex)
        for r, raw_row in enumerate(raw_mat):
            if not isinstance(raw_row, list) or len(raw_row) != m:
                raise SubspaceFileError(f"bases[{b}][{r}] must be a list of {m} entries")
            for c, raw in enumerate(raw_row):
                mat[r, c] = _read_entry(raw, f"bases[{b}][{r}][{c}]")
        if not np.all(np.isfinite(mat)):
            raise SubspaceFileError(f"bases[{b}] contains non-finite entries")
        defect = np.linalg.norm(mat.conj().T @ mat - np.eye(m))
        if defect > KEEP_RAW_TOL:
            if defect > POLISH_TOL and not repair:
                raise SubspaceFileError(
                    f"bases[{b}] is not orthonormal (defect {defect:.3g}); "
                    "pass repair to re-orthonormalize")
            if np.linalg.matrix_rank(mat) < m:
                raise SubspaceFileError(f"bases[{b}] is rank deficient; cannot repair")
            mat = _polar_orthonormalize(mat)
        out.append(StiefelBasis(mat))
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path, rows) -> None:
    """Write benchmark trial rows (see blindid.TrialResult) as CSV."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["trial", "sweep_param", "sweep_value",
                         "amari_karcher", "amari_euclid", "status"])
        for row in rows:
            writer.writerow([row.trial, row.sweep_param, _cell(row.sweep_value),
                             _cell(row.amari_karcher), _cell(row.amari_euclid),
                             row.status])


def write_trace_csv(path, trace) -> None:
    """Write a solver trace (karcher.CGTrace) as CSV."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "cost", "gradnorm", "stepsize"])
        for item in trace.iterates:
            writer.writerow([item.iteration, _cell(item.cost),
                             _cell(item.grad_norm), _cell(item.step_size)])
