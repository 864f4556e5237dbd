"""CSV and JSON output formats shared by the CLI and the acceptance suite."""

import csv
import io
import json
import math

__all__ = [
    "format_value", "csv_text", "json_text", "sample_rows", "SAMPLE_HEADER",
    "DENSITY_HEADER", "STIELTJES_HEADER", "STIELTJES_Z_HEADER", "KERNEL_HEADER",
    "EDGES_HEADER", "SAMPLE_STATS_SCHEMA",
]

EDGES_HEADER = ("M", "y", "x_minus", "x_plus")
DENSITY_HEADER = ("x", "rho", "theta", "admissible")
STIELTJES_HEADER = ("x", "density", "residual")
STIELTJES_Z_HEADER = ("z_real", "z_imag", "G_real", "G_imag", "residual")
KERNEL_HEADER = ("x", "y", "kernel", "abs_error")
SAMPLE_HEADER = ("trial", "index", "value", "log_value")

SAMPLE_STATS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["N", "nu", "M", "y", "trials", "seed", "pooled_count", "ks",
                 "moments", "resamples"],
    "additionalProperties": False,
    "properties": {
        "N": {"type": "integer", "minimum": 1},
        "nu": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "M": {"type": "integer", "minimum": 1},
        "y": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "pooled_count": {"type": "integer", "minimum": 1},
        "ks": {"type": "number", "minimum": 0, "maximum": 1},
        "resamples": {"type": "integer", "minimum": 0},
        "moments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["k", "sample", "theory", "stderr", "z"],
                "additionalProperties": False,
                "properties": {
                    "k": {"type": "integer", "minimum": 1, "maximum": 4},
                    "sample": {"type": "number"},
                    "theory": {"type": "number"},
                    "stderr": {"type": ["number", "null"]},
                    "z": {"type": ["number", "null"]},
                },
            },
        },
    },
}


def format_value(v):
    """Render one CSV cell: 17 significant digits, lowercase booleans."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _clean(obj):
    # JSON has no NaN; report non-finite numbers as null
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def json_text(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def sample_rows(results):
    for r in results:
        for i, (v, lv) in enumerate(zip(r.values, r.log_values)):
            yield (r.trial, i, float(v), float(lv))
