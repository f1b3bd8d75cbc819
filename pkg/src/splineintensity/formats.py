"""CSV formats for chain dumps and summaries.

Every output file starts with ``#`` comment lines carrying the package
version, the seed and the full configuration as JSON.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .prior import SplineState
from .sampler import MOVES, ChainDraw

DUMP_COLUMNS = ["iter", "j", "grid_indices", "theta", "log_post", "move", "accepted"]


def header(config: dict) -> str:
    return (
        f"# splineintensity {__version__}\n"
        f"# seed: {config.get('seed')}\n"
        f"# dump-config: {json.dumps(config, sort_keys=True)}\n"
    )


def read_header(path) -> dict:
    """The ``dump-config`` JSON of a file written by this package ({} if absent)."""
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# dump-config:"):
                return json.loads(line.split(":", 1)[1])
    return {}


def _join(values) -> str:
    return ";".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(int(v)) for v in values)


def write_chain(path, draws, config: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header(config))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DUMP_COLUMNS)
        for d in draws:
            s = d.state
            w.writerow(
                [d.iteration, s.dim, _join(s.grid_idx), _join(s.theta), repr(float(d.log_post)), d.move, int(d.accepted)]
            )


class ChainFormatError(ValueError):
    pass


def read_chain(path):
    """Parse a chain dump; returns ``(draws, config)``."""
    config = read_header(path)
    try:
        order, period = int(config["order"]), float(config["period"])
    except KeyError as e:
        raise ChainFormatError(f"{path}: missing {e.args[0]!r} in dump-config header") from None
    draws = []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        head = next(rows, None)
        if head != DUMP_COLUMNS:
            raise ChainFormatError(f"{path}: expected columns {','.join(DUMP_COLUMNS)}")
        for no, row in enumerate(rows, start=2):
            try:
                it, j, idx, theta, lp, move, acc = row
                idx = [int(v) for v in idx.split(";")] if idx else []
                theta = [float(v) for v in theta.split(";")]
                state = SplineState(order, period, idx, theta)
                if state.dim != int(j) or move not in MOVES:
                    raise ValueError
                state.validate()
            except ValueError:
                raise ChainFormatError(f"{path}: corrupt record {no}") from None
            draws.append(ChainDraw(int(it), state, move, acc == "1", float(lp)))
    if not draws:
        raise ChainFormatError(f"{path}: chain dump holds no draws")
    return draws, config


def write_rows(path, columns, rows, config: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header(config))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def suffixed(path, i: int) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_chain{i}{p.suffix}")
