"""Text formats for measures and solver results.

Measure files are comma-separated tables with a `# srw-measure v1 d=<d>`
header line; each row is a weight followed by d coordinates. Result files
are JSON documents that round-trip every float exactly.
"""

import json
import re
from pathlib import Path

import numpy as np

from .exceptions import InvalidInput
from .otcore import DiscreteMeasure
from .solver import SrwResult

__all__ = [
    "read_measure",
    "write_measure",
    "read_result",
    "write_result",
    "result_document",
    "verify_result",
]

_HEADER_RE = re.compile(r"^#\s*srw-measure\s+v1\s+d=(\d+)\s*$")
RESULT_FORMAT = "srw-result v1"


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any float64 exactly.
    return format(float(x), ".17g")


def write_measure(measure: DiscreteMeasure, path) -> None:
    """Write a measure file; weights and coordinates keep full precision."""
    lines = [f"# srw-measure v1 d={measure.d}"]
    for w, row in zip(measure.weights, measure.points):
        lines.append(",".join([_fmt(w)] + [_fmt(c) for c in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_measure(path) -> DiscreteMeasure:
    """Parse a measure file; weights are normalized to sum to 1 on load.

    Rejects missing/malformed headers, negative weights, non-finite values
    and rows whose column count disagrees with the header dimension.
    """
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput(f"{path}: empty measure file")
    m = _HEADER_RE.match(lines[0].strip())
    if m is None:
        raise InvalidInput(f"{path}: first line must be '# srw-measure v1 d=<d>'")
    d = int(m.group(1))
    if d < 1:
        raise InvalidInput(f"{path}: dimension must be positive")
    rows = []
    for ln_no, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != d + 1:
            raise InvalidInput(f"{path}: line {ln_no}: expected {d + 1} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise InvalidInput(f"{path}: line {ln_no}: {exc}") from exc
    if not rows:
        raise InvalidInput(f"{path}: no atoms")
    table = np.array(rows)
    if not np.isfinite(table).all():
        raise InvalidInput(f"{path}: non-finite value")
    w = table[:, 0]
    if (w < 0).any():
        raise InvalidInput(f"{path}: negative weight")
    total = w.sum()
    if not total > 0:
        raise InvalidInput(f"{path}: weights sum to zero")
    return DiscreteMeasure(table[:, 1:], w / total)


def result_document(
    result: SrwResult,
    d: int,
    algorithm: str,
    gamma: float,
    epsilon: float,
    seed: int | None = None,
    emit_plan: bool = False,
    dense_plan: bool = False,
) -> dict:
    """Serializable dict form of a solver result.

    Plans are emitted sparsely as (i, j, mass) triples for entries above
    1e-12; ``dense_plan`` switches to the full row-major matrix.
    """
    doc = {
        "format": RESULT_FORMAT,
        "value": result.value,
        "value_squared": result.value_squared,
        "k": result.omega.k,
        "d": d,
        "algorithm": algorithm,
        "gamma": gamma,
        "epsilon": epsilon,
        "iterations": result.iterations,
        "relative_gap": result.gap,
        "converged": result.converged,
        "seed": seed,
        "omega": [float(v) for v in result.omega.matrix.ravel()],
    }
    if emit_plan:
        pi = result.plan.matrix
        if dense_plan:
            doc["plan_dense"] = [float(v) for v in pi.ravel()]
            doc["plan_shape"] = list(pi.shape)
        else:
            ii, jj = np.nonzero(pi > 1e-12)
            doc["plan"] = [[int(i), int(j), float(pi[i, j])] for i, j in zip(ii, jj)]
            doc["plan_shape"] = list(pi.shape)
    return doc


def write_result(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="ascii")


def read_result(path) -> dict:
    """Load a result file and check its structure."""
    try:
        doc = json.loads(Path(path).read_text(encoding="ascii"))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not a valid result file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != RESULT_FORMAT:
        raise InvalidInput(f"{path}: missing '{RESULT_FORMAT}' format marker")
    required = ("value", "value_squared", "k", "d", "omega")
    for key in required:
        if key not in doc:
            raise InvalidInput(f"{path}: missing field {key!r}")
    if len(doc["omega"]) != doc["d"] ** 2:
        raise InvalidInput(f"{path}: omega must hold d^2 entries")
    return doc


def verify_result(doc: dict, mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-6) -> None:
    """Check value_squared against <Omega | V_plan> recomputed from the file.

    Only possible when the document carries a plan; raises InvalidInput on
    disagreement beyond tol (relative).
    """
    d = doc["d"]
    omega = np.array(doc["omega"], dtype=float).reshape(d, d)
    if "plan_dense" in doc:
        pi = np.array(doc["plan_dense"], dtype=float).reshape(doc["plan_shape"])
    elif "plan" in doc:
        pi = np.zeros(tuple(doc["plan_shape"]))
        for i, j, p in doc["plan"]:
            pi[int(i), int(j)] = p
    else:
        raise InvalidInput("result document has no plan to verify against")
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    v = np.einsum("ij,ijk,ijl->kl", pi, diff, diff, optimize=True)
    recomputed = float(np.vdot(omega, v))
    if abs(recomputed - doc["value_squared"]) > tol * (1.0 + abs(doc["value_squared"])):
        raise InvalidInput(
            f"value_squared {doc['value_squared']} inconsistent with plan/omega ({recomputed})"
        )
