"""Artifact writers and readers: PDP/series CSV, JSON reports, chip files.

Every writer goes through a temp file in the target directory and
``os.replace``, so a reader never sees a half-written artifact.  Floats are
written with ``repr``, the shortest text that parses back to the identical
double, which keeps outputs byte-stable across runs.
"""

import json
import math
import os
import tempfile

import numpy as np


def _atomic_write(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(path) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".part")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}", path) from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}", path) from None


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def emit_series_csv(header, columns, path):
    rows = [",".join(header)]
    for vals in zip(*columns):
        rows.append(",".join(_num(v) for v in vals))
    _atomic_write(path, "\n".join(rows) + "\n")


def emit_pdp_csv(pdp, path, dilated=False):
    """``time_s,power_linear,power_db`` rows.

    Times follow the PDP's own axis; pass ``dilated=True`` to write the
    observed (dilated) axis of an undilated PDP instead.
    """
    step = pdp.time_step_s
    if dilated and not pdp.dilated:
        step *= pdp.gamma
    elif not dilated and pdp.dilated:
        step /= pdp.gamma
    p = np.asarray(pdp.powers, dtype=float)
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(p)
    emit_series_csv(("time_s", "power_linear", "power_db"),
                    (np.arange(p.size) * step, p, db), path)


def read_csv(path):
    """Header tuple and a float array per column."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = tuple(lines[0].split(","))
    data = [[float(v) for v in ln.split(",")] for ln in lines[1:] if ln]
    cols = np.array(data, dtype=float).reshape(len(data), len(header)).T
    return header, [c for c in cols]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def report_text(results, experiment="", config_echo=None, derived=None):
    doc = {
        "experiment": experiment,
        "config_echo": config_echo or {},
        "results": list(results),
        "derived": derived or {},
    }
    return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"


def emit_report_json(results, path, experiment="", config_echo=None, derived=None):
    """Report with keys ``experiment``, ``config_echo``, ``results``, ``derived``.

    Non-finite numbers become ``null``.
    """
    _atomic_write(path, report_text(results, experiment, config_echo, derived))


def read_report_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def emit_chips(chips, path):
    _atomic_write(path, "".join(f"{int(c)}\n" for c in chips))


def read_xpd_csv(path):
    """``distance_m,pl_vv_db,pl_vh_db`` rows as a list of tuples."""
    header, cols = read_csv(path)
    want = ("distance_m", "pl_vv_db", "pl_vh_db")
    if header != want:
        raise ValueError(f"{path}: expected header {','.join(want)}")
    return list(zip(*(c.tolist() for c in cols)))
