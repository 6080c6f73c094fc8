"""CSV emission: comma separated, header row, LF line endings, 17 significant digits."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

from .thermodynamics import ThermoPoint, WeakGibbsCertificate

THERMO_COLUMNS = ("L", "sites", "value", "bound")


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.write_text(to_csv(header, rows), encoding="utf-8", newline="")
    return path


def read_csv(path: Path | str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def thermo_rows(points: Sequence[ThermoPoint], quantity: str, bound: float | Sequence[float]) -> list[tuple]:
    """``(L, sites, value, bound)`` rows for one ThermoPoint field."""
    bounds = [bound] * len(points) if isinstance(bound, (int, float)) else list(bound)
    return [(p.L, p.sites, float(getattr(p, quantity)), float(b)) for p, b in zip(points, bounds)]


def certificate_rows(cert: WeakGibbsCertificate) -> list[tuple]:
    """``(L, sites, c per site, 2||W|| per site)`` rows."""
    return [(r.L, r.sites, r.c_per_site, r.hiai_petz_bound / r.sites) for r in cert.records]


CERTIFICATE_DETAIL_COLUMNS = ("L", "sites", "c", "d_low", "d_high", "D", "hiai_petz_bound", "min_log_ratio")


def certificate_detail_rows(cert: WeakGibbsCertificate) -> list[tuple]:
    return [(r.L, r.sites, r.c, r.d_low, r.d_high, r.D, r.hiai_petz_bound, r.min_log_ratio) for r in cert.records]
