"""Matrix, report and abundance-map file formats.

Matrices travel as delimited text (default comma), full 17-significant-
digit decimals so float64 values round-trip exactly.  Lines starting
with '#' are comments.  Run reports are flat ``key = value`` files with
dotted key namespaces and bracketed arrays; abundance maps are ASCII
PGM (P2, 16-bit) so they can be inspected without imaging libraries.
"""

import dataclasses
import os

import numpy as np

from .model import as_matrix

__all__ = [
    "load_matrix",
    "save_matrix",
    "write_report",
    "read_report",
    "write_pgm",
    "report_values",
    "save_results",
    "REPORT_SCHEMA_VERSION",
]

_LAYOUTS = ("bands-by-pixels", "pixels-by-bands")

REPORT_SCHEMA_VERSION = 1

PGM_MAXVAL = 65535


def load_matrix(path, layout="bands-by-pixels", delimiter=",", header=False):
    """Parse a delimited numeric text file into a bands-by-pixels matrix.

    Parameters
    ----------
    path : path-like
        File to read.  '#' lines and blank lines are skipped.
    layout : {"bands-by-pixels", "pixels-by-bands"}
        Orientation of the rows on disk; the returned matrix is always
        bands-by-pixels (pixels-by-bands input is transposed).
    delimiter : str
        Field separator.
    header : bool
        Skip the first non-comment line.

    Raises
    ------
    ValueError
        Ragged rows (with the offending line number), non-numeric or
        non-finite tokens (with line and column), empty files, or an
        unknown layout.
    """
    if layout not in _LAYOUTS:
        raise ValueError("layout must be one of %s, got %r" % (_LAYOUTS, layout))
    name = str(path)
    rows = []
    width = None
    skipped_header = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header and not skipped_header:
                skipped_header = True
                continue
            values = []
            for col, token in enumerate(line.split(delimiter), start=1):
                token = token.strip()
                try:
                    value = float(token)
                except ValueError:
                    raise ValueError(
                        "%s: non-numeric value %r at line %d, column %d"
                        % (name, token, lineno, col)) from None
                if not np.isfinite(value):
                    raise ValueError(
                        "%s: non-finite value %r at line %d, column %d"
                        % (name, token, lineno, col))
                values.append(value)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ValueError(
                    "%s: ragged row at line %d: expected %d values, got %d"
                    % (name, lineno, width, len(values)))
            rows.append(values)
    if not rows:
        raise ValueError("%s: no numeric data" % name)
    matrix = np.asarray(rows, dtype=np.float64)
    if layout == "pixels-by-bands":
        matrix = matrix.T
    return np.ascontiguousarray(matrix)


def save_matrix(path, matrix, delimiter=",", comments=()):
    """Write a matrix as delimited text with %.17g precision.

    Optional ``comments`` lines are emitted first, prefixed with '# '.
    An empty matrix (zero rows or columns) produces a comment-only file
    recording the shape.
    """
    matrix = as_matrix(np.asarray(matrix, dtype=np.float64), "matrix")
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write("# %s\n" % line)
        if matrix.size == 0:
            fh.write("# empty matrix: %d rows x %d columns\n" % matrix.shape)
            return
        for row in matrix:
            fh.write(delimiter.join("%.17g" % v for v in row))
            fh.write("\n")


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return "%d" % value
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return '"%s"' % value.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[%s]" % ", ".join(_format_value(v) for v in value)
    raise TypeError("cannot serialize %r of type %s" % (value, type(value).__name__))


def _split_items(body):
    # Split a bracketed list body on top-level commas, honoring quotes.
    items = []
    depth = 0
    quoted = False
    escaped = False
    current = []
    for ch in body:
        if quoted:
            current.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                quoted = False
            continue
        if ch == '"':
            quoted = True
            current.append(ch)
        elif ch == "[":
            depth += 1
            current.append(ch)
        elif ch == "]":
            depth -= 1
            current.append(ch)
        elif ch == "," and depth == 0:
            items.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    tail = "".join(current).strip()
    if tail or items:
        items.append(tail)
    return items


def _parse_value(text, where):
    text = text.strip()
    if text == "none":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise ValueError("%s: unterminated string %r" % (where, text))
        out = []
        escaped = False
        for ch in text[1:-1]:
            if escaped:
                out.append(ch)
                escaped = False
            elif ch == "\\":
                escaped = True
            else:
                out.append(ch)
        return "".join(out)
    if text.startswith("["):
        if not text.endswith("]"):
            raise ValueError("%s: unterminated list %r" % (where, text))
        body = text[1:-1].strip()
        if not body:
            return []
        return [_parse_value(item, where) for item in _split_items(body)]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ValueError("%s: cannot parse value %r" % (where, text)) from None


def write_report(path, values):
    """Write a flat ``key = value`` report file.

    ``values`` is a mapping; keys are written in iteration order after a
    leading ``schema_version`` line (added if absent).  Floats use
    shortest round-trip representation, so read_report returns values
    identical to the ones written.
    """
    with open(path, "w", encoding="utf-8") as fh:
        if "schema_version" not in values:
            fh.write("schema_version = %d\n" % REPORT_SCHEMA_VERSION)
        for key, value in values.items():
            fh.write("%s = %s\n" % (key, _format_value(value)))


def read_report(path):
    """Parse a report file back into an ordered dict of typed values."""
    name = str(path)
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError("%s: line %d is not 'key = value': %r"
                                 % (name, lineno, line))
            key = key.strip()
            if not key:
                raise ValueError("%s: empty key at line %d" % (name, lineno))
            out[key] = _parse_value(value, "%s: line %d" % (name, lineno))
    return out


def write_pgm(path, image):
    """Write a 2-D array as a min-max scaled 16-bit ASCII PGM (P2).

    Returns the (min, max) of the raw data, recorded by callers so the
    scaling can be undone.  A constant image maps to mid-gray.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("image must be a non-empty 2-D array, got shape %s"
                         % (image.shape,))
    if not np.isfinite(image).all():
        raise ValueError("image contains non-finite values")
    lo = float(image.min())
    hi = float(image.max())
    if hi > lo:
        scaled = np.rint((image - lo) / (hi - lo) * PGM_MAXVAL).astype(np.int64)
    else:
        scaled = np.full(image.shape, (PGM_MAXVAL - 1) // 2, dtype=np.int64)
    height, width = image.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("P2\n%d %d\n%d\n" % (width, height, PGM_MAXVAL))
        for row in scaled:
            fh.write(" ".join("%d" % v for v in row))
            fh.write("\n")
    return lo, hi


def report_values(report):
    """Flatten a solver report (or pass a dict through) into report keys."""
    if isinstance(report, dict):
        return dict(report)
    if dataclasses.is_dataclass(report):
        config = report.config
        values = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config.r": config.r,
            "config.delta": config.delta,
            "config.lambda1": config.lambda1,
            "config.eta": config.eta,
            "config.max_iter": config.max_iter,
            "config.tol_rel_cost": config.tol_rel_cost,
            "config.prune_tol": config.prune_tol,
            "config.beta_init": config.beta_init,
            "config.shrink": config.shrink,
            "config.max_backtracks": config.max_backtracks,
            "config.seed": config.seed,
            "result.iterations": report.iterations,
            "result.initial_cost": report.initial_cost,
            "result.final_cost": report.final_cost,
            "result.final_effective_rank": report.final_effective_rank,
            "result.surviving_columns": report.surviving_columns,
            "result.converged": report.converged,
            "result.rank_degenerate": report.rank_degenerate,
            "trace.cost": report.cost_trace,
            "trace.effective_rank": report.effective_rank_trace,
            "trace.beta_w": report.beta_w_trace,
            "trace.beta_phi": report.beta_phi_trace,
            "timing.wall_time_s": report.wall_time,
        }
        return values
    raise TypeError("report must be a dict or a solver report dataclass")


def save_results(phi, w, report, out_dir, height=None, width=None):
    """Write a solve's outputs: endmembers.csv, abundances.csv, report.txt.

    When ``height`` and ``width`` are given (pixels = height * width),
    one ``map_<i>.pgm`` abundance image per surviving column is written
    as well, with each map's raw min/max recorded in the report under
    ``maps.map_<i>``.  Returns a dict of the written paths.
    """
    phi = as_matrix(np.asarray(phi, dtype=np.float64), "phi")
    w = as_matrix(np.asarray(w, dtype=np.float64), "w")
    if phi.shape[1] != w.shape[1]:
        raise ValueError("phi and w disagree on the number of columns")
    os.makedirs(out_dir, exist_ok=True)
    values = report_values(report)
    paths = {
        "endmembers": os.path.join(out_dir, "endmembers.csv"),
        "abundances": os.path.join(out_dir, "abundances.csv"),
        "report": os.path.join(out_dir, "report.txt"),
        "maps": [],
    }
    save_matrix(paths["endmembers"], phi)
    save_matrix(paths["abundances"], w)
    if height is not None or width is not None:
        if height is None or width is None:
            raise ValueError("height and width must be given together")
        height = int(height)
        width = int(width)
        if height * width != w.shape[0]:
            raise ValueError(
                "height * width = %d does not match %d pixels"
                % (height * width, w.shape[0]))
        values["maps.count"] = phi.shape[1]
        values["maps.height"] = height
        values["maps.width"] = width
        for i in range(w.shape[1]):
            map_path = os.path.join(out_dir, "map_%d.pgm" % i)
            lo, hi = write_pgm(map_path, w[:, i].reshape(height, width))
            values["maps.map_%d.min" % i] = lo
            values["maps.map_%d.max" % i] = hi
            paths["maps"].append(map_path)
    write_report(paths["report"], values)
    return paths
