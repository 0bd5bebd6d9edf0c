"""Reading and writing problem instances (a TSPLIB subset and CSV matrices).

Supported TSPLIB files have ``TYPE: TSP`` (or ``ATSP`` for full matrices) and
either ``EDGE_WEIGHT_TYPE: EUC_2D`` or ``EDGE_WEIGHT_TYPE: EXPLICIT`` with
``EDGE_WEIGHT_FORMAT`` of ``FULL_MATRIX`` or ``UPPER_ROW``. A non-standard
``BEST_KNOWN`` header entry, when present, records the best known tour length.
"""

import csv
import enum
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .tsp import DistanceMatrix


class InstanceFormat(str, enum.Enum):
    TSPLIB_FULL_MATRIX = "tsplib_explicit_full_matrix"
    TSPLIB_UPPER_ROW = "tsplib_explicit_upper_row"
    TSPLIB_EUC_2D = "tsplib_euc2d"
    CSV_MATRIX = "csv_matrix"


class InstanceFormatError(ValueError):
    """Raised for malformed or unsupported instance files."""


@dataclass(frozen=True)
class InstanceFile:
    name: str
    format: InstanceFormat
    payload: DistanceMatrix
    best_known: float | None = None
    coordinates: np.ndarray | None = None

    @property
    def n_locations(self):
        return self.payload.n_locations


def parse_instance(path, format="auto"):
    """Load an instance from ``path``; ``format`` is 'auto', 'tsplib' or 'csv'."""
    path = Path(path)
    text = path.read_text()
    if format == "auto":
        format = "csv" if path.suffix.lower() == ".csv" else "tsplib"
    if format == "csv":
        return parse_csv(text, name=path.stem)
    if format == "tsplib":
        return parse_tsplib(text, default_name=path.stem)
    raise ValueError(f"unknown format hint {format!r}")


def parse_csv(text, name="", best_known=None):
    rows = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            rows.append([float(v) for v in row if v.strip() != ""])
        except ValueError as exc:
            raise InstanceFormatError(f"non-numeric CSV entry: {exc}") from None
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise InstanceFormatError(f"CSV matrix is not square ({n} rows, lengths {sorted({len(r) for r in rows})})")
    return InstanceFile(name, InstanceFormat.CSV_MATRIX, _matrix(np.array(rows)), best_known)


def _matrix(arr, name=""):
    if np.any(arr < 0):
        raise InstanceFormatError("negative edge weight")
    try:
        return DistanceMatrix(arr, name=name)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def parse_tsplib(text, default_name=""):
    header = {}
    sections = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        key = line.rstrip(":").strip().upper()
        if key in ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION", "DISPLAY_DATA_SECTION"):
            current = key
            sections[current] = []
            continue
        if current is None or (":" in line and line.split(":")[0].strip().isupper()):
            if ":" not in line:
                raise InstanceFormatError(f"malformed header line {line!r}")
            k, v = line.split(":", 1)
            header[k.strip().upper()] = v.strip()
            current = None
            continue
        sections[current].extend(line.split())

    try:
        n = int(header["DIMENSION"])
    except (KeyError, ValueError):
        raise InstanceFormatError("missing or invalid DIMENSION") from None
    kind = header.get("TYPE", "TSP").split()[0].upper()
    if kind not in ("TSP", "ATSP"):
        raise InstanceFormatError(f"unsupported TYPE {kind!r}")
    name = header.get("NAME", default_name)
    best_known = float(header["BEST_KNOWN"]) if "BEST_KNOWN" in header else None
    weight_type = header.get("EDGE_WEIGHT_TYPE", "").upper()

    if weight_type == "EUC_2D":
        tokens = sections.get("NODE_COORD_SECTION")
        if tokens is None or len(tokens) != 3 * n:
            raise InstanceFormatError(f"NODE_COORD_SECTION must list {n} nodes as 'id x y'")
        coords = np.array(tokens, dtype=float).reshape(n, 3)[:, 1:]
        dm = DistanceMatrix.from_coordinates(coords, name=name)
        return InstanceFile(name, InstanceFormat.TSPLIB_EUC_2D, dm, best_known, coords)

    if weight_type != "EXPLICIT":
        raise InstanceFormatError(f"unsupported EDGE_WEIGHT_TYPE {weight_type!r}")
    fmt = header.get("EDGE_WEIGHT_FORMAT", "").upper()
    try:
        values = np.array(sections.get("EDGE_WEIGHT_SECTION", []), dtype=float)
    except ValueError:
        raise InstanceFormatError("non-numeric edge weight") from None
    if fmt == "FULL_MATRIX":
        if values.size != n * n:
            raise InstanceFormatError(f"FULL_MATRIX needs {n * n} weights, got {values.size}")
        arr = values.reshape(n, n)
        return InstanceFile(name, InstanceFormat.TSPLIB_FULL_MATRIX, _matrix(arr, name), best_known)
    if fmt == "UPPER_ROW":
        expected = n * (n - 1) // 2
        if values.size != expected:
            raise InstanceFormatError(f"UPPER_ROW needs {expected} weights, got {values.size}")
        arr = np.zeros((n, n))
        arr[np.triu_indices(n, k=1)] = values
        arr = arr + arr.T
        return InstanceFile(name, InstanceFormat.TSPLIB_UPPER_ROW, _matrix(arr, name), best_known)
    raise InstanceFormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt!r}")


def _fmt(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def to_tsplib(instance, format=None, comment=None):
    """Serialize an :class:`InstanceFile` as TSPLIB text."""
    fmt = InstanceFormat(format or instance.format)
    if fmt is InstanceFormat.CSV_MATRIX:
        fmt = InstanceFormat.TSPLIB_FULL_MATRIX
    d = instance.payload.d
    n = d.shape[0]
    kind = "TSP" if instance.payload.symmetric else "ATSP"
    lines = [f"NAME : {instance.name}", f"TYPE : {kind}"]
    if comment:
        lines.append(f"COMMENT : {comment}")
    lines.append(f"DIMENSION : {n}")
    if instance.best_known is not None:
        lines.append(f"BEST_KNOWN : {_fmt(instance.best_known)}")
    if fmt is InstanceFormat.TSPLIB_EUC_2D:
        if instance.coordinates is None:
            raise ValueError("EUC_2D output needs node coordinates")
        lines += ["EDGE_WEIGHT_TYPE : EUC_2D", "NODE_COORD_SECTION"]
        lines += [f"{i + 1} {_fmt(x)} {_fmt(y)}" for i, (x, y) in enumerate(instance.coordinates)]
    elif fmt is InstanceFormat.TSPLIB_UPPER_ROW:
        if not instance.payload.symmetric:
            raise ValueError("UPPER_ROW output needs a symmetric matrix")
        lines += ["EDGE_WEIGHT_TYPE : EXPLICIT", "EDGE_WEIGHT_FORMAT : UPPER_ROW", "EDGE_WEIGHT_SECTION"]
        lines += [" ".join(_fmt(v) for v in d[i, i + 1 :]) for i in range(n - 1)]
    else:
        lines += ["EDGE_WEIGHT_TYPE : EXPLICIT", "EDGE_WEIGHT_FORMAT : FULL_MATRIX", "EDGE_WEIGHT_SECTION"]
        lines += [" ".join(_fmt(v) for v in row) for row in d]
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def to_csv(instance):
    return "\n".join(",".join(_fmt(v) for v in row) for row in instance.payload.d) + "\n"


def write_instance(instance, path, format=None):
    path = Path(path)
    text = to_csv(instance) if path.suffix.lower() == ".csv" else to_tsplib(instance, format)
    path.write_text(text)


BUNDLED = {
    4: "unit4.tsp",
    5: "rand5.tsp",
    15: "rand15.tsp",
    26: "rand26.tsp",
    42: "rand42.tsp",
    48: "rand48.tsp",
}


def bundled_path(n_locations):
    try:
        fname = BUNDLED[n_locations]
    except KeyError:
        raise ValueError(f"no bundled instance with {n_locations} locations; have {sorted(BUNDLED)}") from None
    return resources.files("bosontsp") / "data" / fname


def load_bundled(n_locations):
    """One of the shipped instances, by number of locations."""
    ref = bundled_path(n_locations)
    return parse_tsplib(ref.read_text(), default_name=Path(str(ref)).stem)

