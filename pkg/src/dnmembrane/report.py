"""Experiment reports: per-case records, assertion bookkeeping, file output."""
from __future__ import annotations

import csv
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _kernels

__all__ = [
    "CaseRecord",
    "ExperimentReport",
    "environment_stamp",
    "atomic_write_text",
    "write_table_csv",
]


def _plain(v):
    """Convert numpy scalars/arrays to JSON-friendly values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    return v


class _Assertions:
    def _init_assertions(self):
        self.assertions: dict[str, bool] = {}
        self.details: dict[str, dict] = {}

    def check(self, name: str, passed, **detail) -> bool:
        """Record one named assertion; each name may be recorded only once."""
        if name in self.assertions:
            raise ValueError(f"assertion {name!r} recorded twice")
        self.assertions[name] = bool(passed)
        if detail:
            self.details[name] = _plain(detail)
        return bool(passed)


class CaseRecord(_Assertions):
    def __init__(self, name: str, inputs: dict | None = None):
        self.name = name
        self.inputs = dict(inputs or {})
        self.scalars: dict = {}
        self._init_assertions()

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def to_dict(self) -> dict:
        return _plain(
            {
                "name": self.name,
                "inputs": self.inputs,
                "scalars": self.scalars,
                "assertions": self.assertions,
                "details": self.details,
            }
        )


def environment_stamp() -> dict:
    from . import __version__

    return {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "backend": _kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


@dataclass
class ExperimentReport(_Assertions):
    kind: str
    config: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    environment: dict = field(default_factory=environment_stamp)

    def __post_init__(self):
        self._init_assertions()

    def add_case(self, case: CaseRecord) -> CaseRecord:
        if any(c.name == case.name for c in self.cases):
            raise ValueError(f"duplicate case {case.name!r}")
        self.cases.append(case)
        return case

    def add_error(self, kind: str, message: str, **extra) -> None:
        self.errors.append(_plain({"kind": kind, "message": message, **extra}))

    @property
    def verdict(self) -> bool:
        return not self.errors and all(self.assertions.values()) and all(c.passed for c in self.cases)

    def all_assertions(self) -> dict[str, bool]:
        """Flattened ``case/name -> bool`` map, report-level names unprefixed."""
        out = dict(self.assertions)
        for c in self.cases:
            out.update({f"{c.name}/{k}": v for k, v in c.assertions.items()})
        return out

    def to_dict(self) -> dict:
        return _plain(
            {
                "kind": self.kind,
                "verdict": "pass" if self.verdict else "fail",
                "config": self.config,
                "environment": self.environment,
                "assertions": self.assertions,
                "details": self.details,
                "cases": [c.to_dict() for c in self.cases],
                "errors": self.errors,
            }
        )

    def write_json(self, path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table_csv(path, schema: str, header, rows) -> None:
    """CSV with a ``# <schema>`` first line; floats written with repr."""
    buf = io.StringIO()
    buf.write(f"# {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    atomic_write_text(path, buf.getvalue())
