"""Sweep tables (CSV/JSON) and SVG line plots."""
import csv
import json
import logging
import math
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from jinja2 import Environment, FileSystemLoader

from ..optics.errors import TableSchemaError
from .schemas import MICRON, MILLIMETRE, DepthStatistics, SweepRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

COLLAPSED_COLUMNS = ("f_number", "c_max_px", "pixel_um", "sigma_max_px", "mae_max")
FULL_COLUMNS = ("d_f_m", "f_number", "c_max_px", "pixel_um", "focal_mm", "sigma_max_px", "mae_max")
STATS_COLUMNS = (
    "d_f_m", "count", "pixel_um_min", "pixel_um_max",
    "focal_mm_min", "focal_mm_max", "f_number_min", "f_number_max",
)
SCHEMAS = {"collapsed": COLLAPSED_COLUMNS, "full": FULL_COLUMNS}

FORMATS = ("csv", "json")

PLOT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _grid(value: float) -> str:
    # grid inputs are short decimals; %g keeps them as typed
    return f"{round(value, 9):g}"


def _fixed(value: Optional[float]) -> str:
    return "nan" if value is None else f"{value:.4f}"


def _micron(metres: float) -> float:
    return round(metres / MICRON, 9)


def _millimetre(metres: Optional[float]) -> Optional[float]:
    return None if metres is None else metres / MILLIMETRE


def schema_of(records: Sequence[SweepRecord]) -> str:
    """'collapsed' when no record carries a focused depth, else 'full'."""
    return "full" if any(r.focus_distance is not None for r in records) else "collapsed"


def _csv_row(record: SweepRecord, schema: str) -> List[str]:
    row = [
        _grid(record.f_number),
        _grid(record.c_max),
        _grid(_micron(record.pixel_pitch)),
        _fixed(record.sigma_max),
        _fixed(record.mae_max),
    ]
    if schema == "full":
        row = [_grid(record.focus_distance)] + row[:3] + [_fixed(_millimetre(record.focal_length))] + row[3:]
    return row


def _json_row(record: SweepRecord, schema: str) -> Dict:
    row = {
        "f_number": record.f_number,
        "c_max_px": record.c_max,
        "pixel_um": _micron(record.pixel_pitch),
        "sigma_max_px": record.sigma_max,
        "mae_max": record.mae_max,
    }
    if schema == "full":
        row = {"d_f_m": record.focus_distance, **row, "focal_mm": _millimetre(record.focal_length)}
        row = {column: row[column] for column in FULL_COLUMNS}
    if record.error is not None:
        row["error"] = record.error
    return row


def _prepare(destination: PathLike) -> Path:
    path = Path(destination)
    os.makedirs(path.parent, exist_ok=True)
    return path


def emit_table(
    records: Sequence[SweepRecord],
    fmt: str,
    destination: PathLike,
    schema: Optional[str] = None,
) -> Path:
    """Write records in the collapsed or full schema (detected unless given)."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    schema = schema or schema_of(records)
    columns = SCHEMAS[schema]
    path = _prepare(destination)
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(_csv_row(r, schema) for r in records)
    else:
        document = {
            "schema": schema,
            "columns": list(columns),
            "records": [_json_row(r, schema) for r in records],
        }
        with open(path, "w") as f:
            json.dump(document, f, indent=2)
            f.write("\n")
    logger.info("[Tables] Wrote %d %s records to %s", len(records), schema, path)
    return path


def emit_statistics(stats: Sequence[DepthStatistics], destination: PathLike) -> Path:
    """Write per-depth statistics as CSV."""
    path = _prepare(destination)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(STATS_COLUMNS)
        for s in stats:
            writer.writerow([
                _grid(s.focus_distance),
                str(s.count),
                _grid(_micron(s.pixel_min)),
                _grid(_micron(s.pixel_max)),
                f"{_millimetre(s.focal_min):.2f}",
                f"{_millimetre(s.focal_max):.2f}",
                _grid(s.f_number_min),
                _grid(s.f_number_max),
            ])
    return path


def _detect_schema(columns: Sequence[str]) -> str:
    known = set(FULL_COLUMNS)
    for column in columns:
        if column not in known:
            raise TableSchemaError(f"Unknown column {column!r}", column=column)
    schema = "full" if {"d_f_m", "focal_mm"} & set(columns) else "collapsed"
    for column in SCHEMAS[schema]:
        if column not in columns:
            raise TableSchemaError(f"Missing column {column!r} for the {schema} table", column=column)
    return schema


def _number(value, column: str) -> Optional[float]:
    if value is None:
        return None
    try:
        number = float(value)
    except (TypeError, ValueError) as e:
        raise TableSchemaError(f"Column {column!r} holds a non-number: {value!r}", column=column) from e
    return None if math.isnan(number) else number


def _record_from_row(row: Dict, schema: str) -> SweepRecord:
    sigma = _number(row["sigma_max_px"], "sigma_max_px")
    mae = _number(row["mae_max"], "mae_max")
    focal = _number(row["focal_mm"], "focal_mm") if schema == "full" else None
    error = row.get("error")
    if error is None and (sigma is None or mae is None):
        error = "not evaluated"
    return SweepRecord(
        focus_distance=_number(row["d_f_m"], "d_f_m") if schema == "full" else None,
        f_number=_number(row["f_number"], "f_number"),
        c_max=_number(row["c_max_px"], "c_max_px"),
        pixel_pitch=_number(row["pixel_um"], "pixel_um") * MICRON,
        focal_length=None if focal is None else focal * MILLIMETRE,
        sigma_max=sigma,
        mae_max=mae,
        error=error,
    )


def read_table(source: PathLike) -> List[SweepRecord]:
    """Read a collapsed or full sweep table; the schema comes from the header or field names."""
    path = Path(source)
    if path.suffix.lower() == ".json":
        with open(path) as f:
            try:
                document = json.load(f)
            except json.JSONDecodeError as e:
                raise TableSchemaError(f"{path}: not a JSON table ({e})") from e
        if not isinstance(document, dict) or "records" not in document:
            raise TableSchemaError(f"{path}: JSON table needs a 'records' list", column="records")
        rows = document["records"]
        columns = document.get("columns") or (list(rows[0]) if rows else list(COLLAPSED_COLUMNS))
        schema = _detect_schema([c for c in columns if c != "error"])
    else:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if not reader.fieldnames:
                raise TableSchemaError(f"{path}: empty table")
            schema = _detect_schema(reader.fieldnames)
            rows = list(reader)
    return [_record_from_row(row, schema) for row in rows]


def read_plot_data(source: PathLike) -> Tuple[List[str], np.ndarray]:
    """Header and numeric body of a CSV; malformed or empty tables raise TableSchemaError."""
    with open(source, newline="") as f:
        rows = [row for row in csv.reader(f) if row]
    if not rows:
        raise TableSchemaError(f"{source}: no header")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise TableSchemaError(f"{source}: a plot needs at least two columns")
    if not body:
        raise TableSchemaError(f"{source}: no data rows")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise TableSchemaError(f"{source}: row {i + 1} has {len(row)} fields, expected {len(header)}")
        for j, value in enumerate(row):
            number = _number(value, header[j])
            data[i, j] = np.nan if number is None else number
    return header, data


def _ticks(lo: float, hi: float, origin: float, extent: float, flip: bool, count: int = 5):
    ticks = []
    for value in np.linspace(lo, hi, count):
        frac = 0.0 if hi == lo else (value - lo) / (hi - lo)
        pos = origin + (extent * (1.0 - frac) if flip else extent * frac)
        ticks.append({"pos": round(pos, 2), "label": f"{value:.3g}"})
    return ticks


class FileGenerator:
    """Renders SVG line plots from the jinja2 templates directory."""

    width = 640
    height = 420
    margins = (70, 40, 30, 50)  # left, top, right, bottom

    def __init__(self):
        template_dir = os.path.join(os.path.dirname(__file__), "..", "templates")
        self.env = Environment(
            loader=FileSystemLoader(template_dir),
            trim_blocks=True,
            lstrip_blocks=True,
            autoescape=True,
        )

    def generate_file(self, template_name: str, output_path: PathLike, context: Dict) -> Path:
        """Render a template to output_path, creating parent directories."""
        template = self.env.get_template(template_name)
        path = _prepare(output_path)
        with open(path, "w") as f:
            f.write(template.render(**context))
        return path

    def line_plot_context(
        self,
        x: np.ndarray,
        series: Dict[str, np.ndarray],
        x_label: str,
        y_label: str,
        title: str = "",
    ) -> Dict:
        left, top, right, bottom = self.margins
        plot_w = self.width - left - right
        plot_h = self.height - top - bottom
        stacked = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
        finite = stacked[np.isfinite(stacked)]
        x_lo, x_hi = float(np.nanmin(x)), float(np.nanmax(x))
        y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)

        def scale(values, lo, hi, origin, extent, flip):
            frac = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
            return origin + (extent * (1.0 - frac) if flip else extent * frac)

        series_list = []
        px = scale(np.asarray(x, dtype=float), x_lo, x_hi, left, plot_w, False)
        for k, (name, values) in enumerate(series.items()):
            py = scale(np.asarray(values, dtype=float), y_lo, y_hi, top, plot_h, True)
            ok = np.isfinite(px) & np.isfinite(py)
            points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px[ok], py[ok]))
            series_list.append({"name": name, "color": PLOT_COLORS[k % len(PLOT_COLORS)], "points": points})

        return {
            "width": self.width,
            "height": self.height,
            "left": left,
            "top": top,
            "plot_width": plot_w,
            "plot_height": plot_h,
            "x_ticks": _ticks(x_lo, x_hi, left, plot_w, False),
            "y_ticks": _ticks(y_lo, y_hi, top, plot_h, True),
            "x_label": x_label,
            "y_label": y_label,
            "title": title,
            "series_list": series_list,
        }

    def render_csv_plot(
        self,
        source: PathLike,
        output_path: PathLike,
        x_column: Optional[str] = None,
        y_columns: Optional[Sequence[str]] = None,
        x_label: Optional[str] = None,
        y_label: str = "",
        title: str = "",
    ) -> Path:
        """One polyline per selected column against the first (or named) column."""
        header, data = read_plot_data(source)
        x_column = x_column or header[0]
        y_columns = list(y_columns) if y_columns else [c for c in header if c != x_column]
        for column in [x_column, *y_columns]:
            if column not in header:
                raise TableSchemaError(f"{source}: no column {column!r}", column=column)
        x = data[:, header.index(x_column)]
        series = {c: data[:, header.index(c)] for c in y_columns}
        context = self.line_plot_context(x, series, x_label or x_column, y_label, title)
        path = self.generate_file("line_plot.svg.j2", output_path, context)
        logger.info("[Plot] Wrote %d series to %s", len(series), path)
        return path
