"""Deterministic CSV/JSON report writers.

CSV: '.' decimal, '\n' terminators, floats at 17 significant digits, so a
repeated run of the same configuration reproduces every report byte for
byte.  The manifest echoes every numeric input actually used plus library
versions; its wall_time_s field is the one value that varies between runs.
"""

import json
import time

import numpy as np


def fmt_float(x):
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def fmt_cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return fmt_float(x)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_cell(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    return obj


def write_json(path, obj):
    text = json.dumps(_canonical(obj), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def write_rows(path_base, fmt, header, rows):
    """Write a tabular report as CSV or as a JSON array of row objects."""
    rows = list(rows)
    if fmt == "json":
        path = path_base.with_suffix(".json")
        write_json(path, [dict(zip(header, r)) for r in rows])
    else:
        path = path_base.with_suffix(".csv")
        write_csv(path, header, rows)
    return path


class Manifest:
    """Collects resolved inputs and diagnostics for the run manifest."""

    def __init__(self, task):
        self.task = task
        self.inputs = {}
        self.diagnostics = {}
        self.outputs = []
        self._t0 = time.monotonic()

    def record(self, **kwargs):
        self.inputs.update(kwargs)

    def diagnose(self, **kwargs):
        self.diagnostics.update(kwargs)

    def add_output(self, path):
        self.outputs.append(path.name)

    def write(self, outdir):
        import matplotlib
        import scipy

        from . import __version__

        payload = {
            "task": self.task,
            "inputs": self.inputs,
            "diagnostics": self.diagnostics,
            "outputs": sorted(self.outputs),
            "versions": {
                "twistband": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "matplotlib": matplotlib.__version__,
            },
            "wall_time_s": round(time.monotonic() - self._t0, 3),
        }
        write_json(outdir / "manifest.json", payload)
