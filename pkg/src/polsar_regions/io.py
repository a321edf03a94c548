"""On-disk formats.

Covariance raster
    One JSON header line ``{"magic": "polsar-cov", "version": 1, "width": W,
    "height": H, "q": Q, "looks": L, ...}`` then ``H*W*Q*Q`` complex values,
    row-major pixels and row-major matrices, each stored as two little-endian
    float64 (re, im).
Label raster
    Same header style with ``"magic": "labels"`` followed by ``H*W``
    little-endian int32; ``-1`` is masked.
Prototype set
    JSON document, matrices as ``Q x Q`` arrays of ``[re, im]`` pairs.
Assignment table
    CSV ``segment_id,class,statistic,p_value,log10_p,kind,reason`` preceded by
    a ``#`` provenance comment line.
Maps
    Binary PPM (P6) for class maps and PGM (P5) for p-value maps.

Every writer goes through a temp file and ``os.replace`` so readers never
see a partial file.
"""

import csv
import hashlib
import io as _io
import json
import math
import os
import tempfile

import numpy as np

from . import __version__, config
from .distances import GaussianEstimate
from .errors import FormatError
from .scenes import PrototypeEntry, PrototypeSet
from .wishart import CovarianceEstimate

COV_MAGIC = "polsar-cov"
LABEL_MAGIC = "labels"
PROTOTYPE_FORMAT = "polsar-prototypes"
ASSIGNMENT_COLUMNS = ["segment_id", "class", "statistic", "p_value", "log10_p", "kind", "reason"]

_COMPLEX = np.dtype("<c16")
_INT32 = np.dtype("<i4")


def provenance(command, settings, seed=None):
    """Reproducibility stamp: tool version, hash of the settings, seed."""
    canonical = json.dumps(settings, sort_keys=True, default=str, separators=(",", ":"))
    return {
        "tool": "polsar-regions",
        "version": __version__,
        "command": command,
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest()[:16],
        "seed": seed,
    }


def atomic_write(path, data):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header_bytes(header):
    return (json.dumps(header, separators=(",", ":")) + "\n").encode("utf-8")


def _split_header(blob, magic, path):
    end = blob.find(b"\n")
    if end < 0:
        raise FormatError(f"{path}: line 1: missing header terminator")
    try:
        header = json.loads(blob[:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: line 1: bad JSON header ({exc})") from None
    if not isinstance(header, dict) or header.get("magic") != magic:
        raise FormatError(f"{path}: line 1: expected magic {magic!r}")
    if header.get("version") != 1:
        raise FormatError(f"{path}: line 1: unsupported version {header.get('version')!r}")
    for key in ("width", "height"):
        if not isinstance(header.get(key), int) or header[key] < 0:
            raise FormatError(f"{path}: line 1: {key} must be a non-negative integer")
    return header, blob[end + 1:], end + 1


def _payload(body, dtype, count, offset, path):
    expected = count * dtype.itemsize
    if len(body) != expected:
        raise FormatError(
            f"{path}: byte offset {offset}: expected {expected} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype, count=count)


# --------------------------------------------------------------------------
# covariance raster


def write_covariance_raster(path, raster, looks, extra=None):
    raster = np.asarray(raster, dtype=np.complex128)
    if raster.ndim != 4 or raster.shape[2] != raster.shape[3]:
        raise ValueError("raster must have shape (H, W, q, q)")
    h, w, q, _ = raster.shape
    header = {"magic": COV_MAGIC, "version": 1, "width": w, "height": h, "q": q,
              "looks": looks}
    header.update(extra or {})
    atomic_write(path, _header_bytes(header) + raster.astype(_COMPLEX).tobytes())


def read_covariance_raster(path):
    """Return ``(raster, header)``; raster has shape ``(H, W, q, q)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    header, body, offset = _split_header(blob, COV_MAGIC, path)
    q = header.get("q")
    if not isinstance(q, int) or q < 1:
        raise FormatError(f"{path}: line 1: q must be a positive integer")
    looks = header.get("looks")
    if not isinstance(looks, (int, float)) or not looks > 0:
        raise FormatError(f"{path}: line 1: looks must be a positive number")
    h, w = header["height"], header["width"]
    data = _payload(body, _COMPLEX, h * w * q * q, offset, path)
    raster = data.astype(np.complex128).reshape(h, w, q, q)
    if not np.all(np.isfinite(raster)):
        raise FormatError(f"{path}: non-finite covariance entries")
    asym = np.abs(raster - np.conj(np.swapaxes(raster, -1, -2)))
    scale = max(1.0, float(np.abs(raster).max(initial=0.0)))
    if asym.size and asym.max() > config.HERMITIAN_READ_TOL * scale:
        pixel = np.unravel_index(int(np.argmax(asym.max(axis=(-1, -2)))), (h, w))
        raise FormatError(f"{path}: pixel (row {pixel[0]}, col {pixel[1]}) is not Hermitian")
    return raster, header


# --------------------------------------------------------------------------
# label raster


def write_labels(path, labels, extra=None):
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("labels must be 2-D")
    h, w = labels.shape
    header = {"magic": LABEL_MAGIC, "version": 1, "width": w, "height": h}
    header.update(extra or {})
    atomic_write(path, _header_bytes(header) + labels.astype(_INT32).tobytes())


def read_labels(path):
    """Return ``(labels, header)`` with labels as ``int32`` of shape ``(H, W)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    header, body, offset = _split_header(blob, LABEL_MAGIC, path)
    h, w = header["height"], header["width"]
    labels = _payload(body, _INT32, h * w, offset, path).astype(np.int32).reshape(h, w)
    if np.any(labels < -1):
        raise FormatError(f"{path}: labels below -1")
    return labels, header


# --------------------------------------------------------------------------
# prototypes


def _matrix_to_json(m):
    m = np.asarray(m)
    if np.iscomplexobj(m):
        return [[[float(v.real), float(v.imag)] for v in row] for row in m]
    return [[float(v) for v in row] for row in m]


def _complex_matrix(obj, where):
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: matrix must be nested numbers") from None
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
        raise FormatError(f"{where}: expected a QxQ array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def prototypes_to_json(prototypes, prov=None):
    classes = []
    for e in prototypes:
        item = {
            "name": e.name,
            "sample_size": e.wishart.sample_size,
            "looks": e.wishart.looks,
            "sigma": _matrix_to_json(e.wishart.sigma_hat),
        }
        if e.gaussian is not None:
            item["gaussian"] = {
                "mu": [float(v) for v in e.gaussian.mu_hat],
                "sigma": _matrix_to_json(e.gaussian.sigma_hat),
                "sample_size": e.gaussian.sample_size,
            }
        classes.append(item)
    doc = {"format": PROTOTYPE_FORMAT, "version": 1, "q": prototypes.q,
           "looks": prototypes.looks, "classes": classes}
    if prov:
        doc["provenance"] = prov
    return doc


def prototypes_from_json(doc, where="prototypes"):
    if not isinstance(doc, dict) or doc.get("format") != PROTOTYPE_FORMAT:
        raise FormatError(f"{where}: not a {PROTOTYPE_FORMAT} document")
    classes = doc.get("classes")
    if not isinstance(classes, list) or not classes:
        raise FormatError(f"{where}: 'classes' must be a non-empty list")
    entries = []
    for i, item in enumerate(classes):
        loc = f"{where}: classes[{i}]"
        try:
            name = item["name"]
            wishart = CovarianceEstimate(_complex_matrix(item["sigma"], loc),
                                         item["sample_size"], item["looks"])
            gaussian = None
            if "gaussian" in item:
                g = item["gaussian"]
                gaussian = GaussianEstimate(np.array(g["mu"], dtype=float),
                                            np.array(g["sigma"], dtype=float), g["sample_size"])
        except KeyError as exc:
            raise FormatError(f"{loc}: missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{loc}: {exc}") from None
        entries.append(PrototypeEntry(name, wishart, gaussian))
    try:
        return PrototypeSet(tuple(entries))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def write_prototypes(path, prototypes, prov=None):
    text = json.dumps(prototypes_to_json(prototypes, prov), indent=1)
    atomic_write(path, (text + "\n").encode())


def read_prototypes(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return prototypes_from_json(doc, str(path))


# --------------------------------------------------------------------------
# assignment table


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_assignments(path, result, prov=None):
    buf = _io.StringIO()
    if prov:
        buf.write("# " + json.dumps(prov, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ASSIGNMENT_COLUMNS)
    stat = result.winning_statistic
    pval = result.winning_p_value
    logp = result.winning_log10_p
    for i in range(result.n_segments):
        c = int(result.assigned[i])
        name = result.class_names[c] if c >= 0 else "Unclassified"
        writer.writerow([i, name, _num(stat[i]), _num(pval[i]), _num(logp[i]),
                         result.kind.value, result.reasons[i]])
    atomic_write(path, buf.getvalue().encode())


def read_assignments(path):
    """Parse an assignment table into a dict of column arrays."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    prov = None
    start = 0
    if lines and lines[0].startswith("#"):
        try:
            prov = json.loads(lines[0][1:])
        except json.JSONDecodeError:
            prov = None
        start = 1
    reader = csv.reader(lines[start:])
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: empty assignment table") from None
    if header[:6] != ASSIGNMENT_COLUMNS[:6]:
        raise FormatError(f"{path}: line {start + 1}: unexpected header {header}")
    cols = {k: [] for k in ASSIGNMENT_COLUMNS}
    for lineno, row in enumerate(reader, start=start + 2):
        if len(row) < 6:
            raise FormatError(f"{path}: line {lineno}: expected at least 6 fields")
        try:
            cols["segment_id"].append(int(row[0]))
            cols["class"].append(row[1])
            cols["statistic"].append(float(row[2]))
            cols["p_value"].append(float(row[3]))
            cols["log10_p"].append(float(row[4]))
        except ValueError as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from None
        cols["kind"].append(row[5])
        cols["reason"].append(row[6] if len(row) > 6 else "")
    out = {k: np.array(v) if k in ("segment_id", "statistic", "p_value", "log10_p") else v
           for k, v in cols.items()}
    if list(out["segment_id"]) != list(range(len(out["segment_id"]))):
        raise FormatError(f"{path}: segment ids must be 0..r-1 in order")
    out["provenance"] = prov
    return out


# --------------------------------------------------------------------------
# PPM / PGM


def write_ppm(path, rgb):
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PPM needs an (H, W, 3) uint8 image")
    h, w, _ = rgb.shape
    atomic_write(path, f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes())


def write_pgm(path, gray):
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError("PGM needs an (H, W) uint8 image")
    h, w = gray.shape
    atomic_write(path, f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes())


def read_pnm(path):
    """Read a binary P5/P6 file written by :func:`write_pgm` / :func:`write_ppm`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated header")
        tokens.append(blob[start:pos])
    pos += 1
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: byte offset 0: unsupported magic {magic!r}")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit maps are supported")
    channels = 3 if magic == b"P6" else 1
    body = blob[pos:]
    if len(body) != w * h * channels:
        raise FormatError(f"{path}: byte offset {pos}: expected {w * h * channels} bytes")
    img = np.frombuffer(body, dtype=np.uint8)
    return img.reshape(h, w, 3) if channels == 3 else img.reshape(h, w)


def write_palette(path, palette):
    doc = {name: list(rgb) for name, rgb in palette.items()}
    atomic_write(path, (json.dumps(doc, indent=1) + "\n").encode())


def read_palette(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return {name: tuple(int(c) for c in rgb) for name, rgb in doc.items()}


def write_json(path, doc):
    atomic_write(path, (json.dumps(doc, indent=1, default=_json_default) + "\n").encode())


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
