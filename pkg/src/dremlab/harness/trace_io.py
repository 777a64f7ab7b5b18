"""CSV persistence for traces.

The CSV carries the fixed column schema; a YAML sidecar next to it
(`<name>.meta.yaml`) keeps the run configuration so a trace can be checked
without re-running it.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from pydantic import ValidationError

from dremlab.errors import TraceIOError
from dremlab.harness.simulation import TraceLog, TraceRecord
from dremlab.models import Law, RunConfig

logger = logging.getLogger(__name__)

SCALAR_COLUMNS = [
    "t",
    "z",
    "omega",
    "gamma",
    "rank",
    "tilde_z_grad",
    "tilde_z_drem",
    "tilde_z_dremr",
]
VECTOR_BLOCKS = ["phibar", "lambda", "thetahat_dremr", "tilde_theta_dremr", "tilde_Theta", "d"]
MASK_BLOCK = "identifiable"

_TILDE_Z_LAW = {
    "tilde_z_grad": Law.GRADIENT,
    "tilde_z_drem": Law.DREM,
    "tilde_z_dremr": Law.DREM_REGULARIZED,
}


def header(n: int) -> list[str]:
    """Column names for dimension n: 8 scalars, 6 n-blocks, n mask digits."""
    columns = list(SCALAR_COLUMNS)
    for block in VECTOR_BLOCKS + [MASK_BLOCK]:
        columns.extend(f"{block}_{i}" for i in range(1, n + 1))
    return columns


def metadata_path(path: Path | str) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.yaml")


def _fmt(x: float) -> str:
    return "%.17g" % x


def _row(trace: TraceLog, r: TraceRecord) -> list[str]:
    theta = trace.theta
    nan_block = [math.nan] * trace.n
    dremr = r.theta_hat.get(Law.DREM_REGULARIZED)
    thetahat = list(dremr) if dremr is not None else nan_block
    tilde_theta = list(dremr - theta) if dremr is not None else nan_block
    tilde_Theta = list(dremr - r.Theta) if dremr is not None else nan_block

    row = [_fmt(r.t), _fmt(r.z), _fmt(r.omega), _fmt(r.gamma), str(r.rank)]
    row += [_fmt(r.tilde_z.get(law, math.nan)) for law in _TILDE_Z_LAW.values()]
    for block in (r.phibar, r.eigenvalues, thetahat, tilde_theta, tilde_Theta, r.d):
        row += [_fmt(float(x)) for x in block]
    row += ["1" if i in r.identifiable else "0" for i in range(trace.n)]
    return row


def emit_csv(trace: TraceLog, destination: Path | str) -> Path:
    """Write the trace as CSV plus its metadata sidecar.

    Raises:
        TraceIOError: If either file cannot be written
    """
    path = Path(destination)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header(trace.n))
            for r in trace.records:
                writer.writerow(_row(trace, r))
        with open(metadata_path(path), "w") as f:
            yaml.safe_dump(_metadata(trace), f, sort_keys=False)
    except OSError as e:
        raise TraceIOError(f"cannot write trace to {path}: {e}") from e
    logger.info("wrote %d records to %s", len(trace.records), path)
    return path


def _metadata(trace: TraceLog) -> dict[str, Any]:
    return {
        "config": trace.config.model_dump(mode="json"),
        "phibar_max": trace.phibar_max,
        "guard_hits": dict(trace.guard_hits),
        "records": len(trace.records),
    }


def load_csv(source: Path | str) -> TraceLog:
    """Rebuild a TraceLog from a CSV trace and its sidecar.

    Only the regularized law's estimate is recoverable; the other laws keep
    their tilde_z columns.

    Raises:
        TraceIOError: If a file is missing or malformed
    """
    path = Path(source)
    meta_file = metadata_path(path)
    try:
        with open(meta_file) as f:
            meta = yaml.safe_load(f)
        config = RunConfig.model_validate(meta["config"])
    except (OSError, yaml.YAMLError, KeyError, TypeError, ValidationError) as e:
        raise TraceIOError(f"cannot read trace metadata {meta_file}: {e}") from e

    n = config.scenario.n
    theta = np.array(config.scenario.theta_true, dtype=np.float64)
    expected = header(n)
    records = []
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            columns = next(reader, None)
            if columns != expected:
                raise TraceIOError(f"{path}: unexpected header")
            for values in reader:
                records.append(_parse_row(dict(zip(columns, values)), n, theta))
    except (OSError, ValueError) as e:
        raise TraceIOError(f"cannot read trace {path}: {e}") from e

    return TraceLog(
        config=config,
        records=records,
        phibar_max=float(meta.get("phibar_max", 0.0)),
        guard_hits=dict(meta.get("guard_hits") or {}),
        in_memory=False,
    )


def _parse_row(row: dict[str, str], n: int, theta: np.ndarray) -> TraceRecord:
    def block(name: str) -> np.ndarray:
        return np.array([float(row[f"{name}_{i}"]) for i in range(1, n + 1)])

    d = block("d")
    thetahat = block("thetahat_dremr")
    theta_hat = {} if np.all(np.isnan(thetahat)) else {Law.DREM_REGULARIZED: thetahat}
    tilde_z = {
        law: float(row[col]) for col, law in _TILDE_Z_LAW.items() if not math.isnan(float(row[col]))
    }
    return TraceRecord(
        t=float(row["t"]),
        phibar=block("phibar"),
        z=float(row["z"]),
        eigenvalues=block("lambda"),
        rank=int(row["rank"]),
        omega=float(row["omega"]),
        gamma=float(row["gamma"]),
        theta_hat=theta_hat,
        tilde_z=tilde_z,
        d=d,
        Theta=theta - d,
        identifiable=tuple(i for i in range(n) if row[f"identifiable_{i + 1}"] == "1"),
    )
