"""Experiment reports with deterministic JSON and CSV serialization."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import __version__


def _clean(x: Any) -> Any:
    """Convert numpy scalars, complex numbers and tuples into JSON-friendly values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, complex):
        return {"re": _clean(x.real), "im": _clean(x.imag)}
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        try:
            return _clean(x.item())
        except (ValueError, TypeError):
            return _clean(x.tolist())
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return x
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, (int, bool)):
        return f"{x.numerator}/{x.denominator}"
    return x


def config_hash(config: dict) -> str:
    text = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class ExperimentReport:
    """Series of (N, value, error_bar) rows plus fitted constants and flags.

    ``fitted_constants`` maps a name to ``{"value": ..., "range": [lo, hi]}``.
    """

    name: str
    config: dict = field(default_factory=dict)
    series: list[tuple] = field(default_factory=list)
    columns: Sequence[str] = ("N", "value", "error_bar")
    fitted_constants: dict[str, dict] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.series = sorted(self.series, key=lambda r: r[0])

    def fit(self, name: str, value: float, lo=None, hi=None) -> None:
        if lo is None and self.series:
            lo, hi = self.series[0][0], self.series[-1][0]
        self.fitted_constants[name] = {"value": value, "range": [lo, hi]}

    @property
    def metadata(self) -> dict:
        return {"config_hash": config_hash(self.config), "seed": self.config.get("seed"),
                "version": __version__}

    def to_dict(self) -> dict:
        return _clean({
            "name": self.name,
            "metadata": self.metadata,
            "config": self.config,
            "columns": list(self.columns),
            "series": [list(r) for r in self.series],
            "fitted_constants": self.fitted_constants,
            "flags": self.flags,
            "extra": self.extra,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        return rows_to_csv(list(self.columns), [list(r) for r in self.series])


def rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v: Any) -> Any:
    v = _clean(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return v
