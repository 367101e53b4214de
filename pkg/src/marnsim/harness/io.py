"""CSV and JSON serialization of sweep results."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .engine import PointRecord, SweepResult, SweepSpec, wilson_interval

CSV_COLUMNS = ("snr_db", "trials", "discarded", "bits", "bit_errors", "ber", "ber_ci_low", "ber_ci_high", "source_id")


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_rows(result: SweepResult):
    for p in result.points:
        J = len(p.bits)
        for sid in list(range(J)) + [None]:
            bits = sum(p.bits) if sid is None else p.bits[sid]
            errs = sum(p.bit_errors) if sid is None else p.bit_errors[sid]
            lo, hi = wilson_interval(errs, bits)
            yield {
                "snr_db": _fmt(p.snr_db),
                "trials": p.trials,
                "discarded": p.discarded,
                "bits": bits,
                "bit_errors": errs,
                "ber": _fmt(p.ber(sid)),
                "ber_ci_low": _fmt(lo),
                "ber_ci_high": _fmt(hi),
                "source_id": "all" if sid is None else str(sid + 1),
            }


def to_csv(result: SweepResult, plot_cols=None) -> str:
    """CSV text; `plot_cols` keeps two columns of the aggregate rows only."""
    buf = io.StringIO()
    rows = list(csv_rows(result))
    if plot_cols:
        x, y = plot_cols
        for col in (x, y):
            if col not in CSV_COLUMNS:
                raise ValueError(f"unknown column {col!r}")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([x, y])
        w.writerows([r[x], r[y]] for r in rows if r["source_id"] == "all")
    else:
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    doc = {
        "metadata": result.metadata,
        "spec": result.spec.to_dict(),
        "points": [
            {"snr_db": p.snr_db, "trials": p.trials, "discarded": p.discarded, "bits": p.bits, "bit_errors": p.bit_errors}
            for p in result.points
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> SweepResult:
    doc = json.loads(text)
    points = [PointRecord(**p) for p in doc["points"]]
    return SweepResult(spec=SweepSpec.from_dict(doc["spec"]), points=points, metadata=doc["metadata"])


def _write(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit(result: SweepResult, fmt: str = "csv", path=None, plot_cols=None):
    """Serialize `result`; writes to `path` when given and returns the text."""
    if fmt == "csv":
        text = to_csv(result, plot_cols)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        _write(path, text)
    return text


def load_result(path) -> SweepResult:
    path = Path(path)
    try:
        return from_json(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
