"""Binary containers for snapshots and models, and CSV exports.

All binary values are little-endian regardless of host.

Snapshot container (``NIROM1``)::

    magic   6 bytes  b"NIROM1"
    endian  2 bytes  b"LE"
    rows    u64
    cols    u64
    dt      f64
    nx      u32
    ny      u32
    name    u16 length + UTF-8 bytes
    payload rows*cols f64, row-major

Model container (``NIROMDMD1``)::

    magic   9 bytes  b"NIROMDMD1"
    endian  2 bytes  b"LE"
    k u32, m u64, n_snapshots u64, dt f64
    modes   m*k complex (interleaved re, im f64), row-major
    ritz    k complex
    ampl    k complex
    rbf     u8 flag; if 1:
              layout u8 (1 = 2d, 2 = 1d), count u32, t_first f64, t_last f64,
              then per surface: kernel (u8 length + ASCII), n u64, d u32,
              centers n*d f64, weights n f64, poly (d+1) f64, lo d f64, span d f64
"""
import csv
import io
import os
import struct
import tempfile

import numpy as np

from .dmd import DmdModel
from .errors import DataError
from .rbf import NiromSurfaces, RbfSurface
from .snapshots import SnapshotMatrix

SNAPSHOT_MAGIC = b"NIROM1"
MODEL_MAGIC = b"NIROMDMD1"
ENDIAN_TAG = b"LE"
F8 = np.dtype("<f8")
LAYOUTS = {"2d": 1, "1d": 2}


def atomic_write(path, data, mode="wb"):
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf, what):
        self.buf = buf
        self.pos = 0
        self.what = what

    def take(self, n, label):
        if self.pos + n > len(self.buf):
            raise DataError(f"{self.what}: truncated while reading {label} "
                            f"(need {n} bytes at offset {self.pos}, file has {len(self.buf)})",
                            offset=len(self.buf))
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt, label):
        s = struct.Struct("<" + fmt)
        vals = s.unpack(self.take(s.size, label))
        return vals[0] if len(vals) == 1 else vals

    def floats(self, count, label):
        return np.frombuffer(self.take(8 * count, label), dtype=F8).astype(float)

    def complexes(self, count, label):
        pairs = self.floats(2 * count, label)
        z = np.empty(count, dtype=complex)
        z.real = pairs[0::2]
        z.imag = pairs[1::2]
        return z

    def finish(self):
        if self.pos != len(self.buf):
            raise DataError(f"{self.what}: {len(self.buf) - self.pos} unexpected trailing "
                            f"bytes at offset {self.pos}", offset=self.pos)


def _check_magic(r, magic):
    got = r.take(len(magic), "magic")
    if got != magic:
        raise DataError(f"{r.what}: bad magic {got!r} at offset 0, expected {magic!r}",
                        offset=0)
    tag = r.take(2, "endianness tag")
    if tag != ENDIAN_TAG:
        raise DataError(f"{r.what}: unsupported endianness tag {tag!r} at offset "
                        f"{len(magic)}", offset=len(magic))


def _interleave(z):
    z = np.asarray(z, dtype=complex).ravel()
    out = np.empty(2 * z.size, dtype=F8)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out.tobytes()


# -- snapshots -------------------------------------------------------------

def snapshots_to_bytes(snap):
    data = np.asarray(snap.data, dtype=float)
    m, n = data.shape
    name = snap.name.encode("utf-8")
    if not (m > 0 and n > 0 and snap.dt > 0 and snap.nx > 0 and snap.ny > 0):
        raise DataError("snapshot header values must be positive")
    header = (SNAPSHOT_MAGIC + ENDIAN_TAG
              + struct.pack("<QQdIIH", m, n, snap.dt, snap.nx, snap.ny, len(name)) + name)
    return header + np.ascontiguousarray(data, dtype=F8).tobytes()


def snapshots_from_bytes(buf, what="snapshot file"):
    r = _Reader(buf, what)
    _check_magic(r, SNAPSHOT_MAGIC)
    m, n, dt, nx, ny, name_len = r.unpack("QQdIIH", "header")
    name = r.take(name_len, "field name").decode("utf-8")
    if not (m > 0 and n > 0 and dt > 0 and nx > 0 and ny > 0):
        raise DataError(f"{what}: nonpositive header value", offset=len(SNAPSHOT_MAGIC) + 2)
    expected = 8 * m * n
    remaining = len(buf) - r.pos
    if remaining != expected:
        raise DataError(f"{what}: payload length mismatch at offset {len(buf)}: "
                        f"expected {expected} bytes after offset {r.pos}, found {remaining}",
                        offset=len(buf))
    data = r.floats(m * n, "payload").reshape(m, n)
    return SnapshotMatrix(np.ascontiguousarray(data), dt, nx, ny, name)


def write_snapshots(path, snap):
    atomic_write(path, snapshots_to_bytes(snap))


def read_snapshots(path):
    with open(path, "rb") as fh:
        return snapshots_from_bytes(fh.read(), what=os.fspath(path))


# -- models ----------------------------------------------------------------

def _surface_bytes(s):
    kernel = s.kernel.encode("ascii")
    n, d = s.centers.shape
    parts = [struct.pack("<B", len(kernel)), kernel, struct.pack("<QI", n, d)]
    for arr in (s.centers, s.weights, s.poly, s.lo, s.span):
        parts.append(np.ascontiguousarray(arr, dtype=F8).tobytes())
    return b"".join(parts)


def _read_surface(r):
    klen = r.unpack("B", "kernel length")
    kernel = r.take(klen, "kernel").decode("ascii")
    n, d = r.unpack("QI", "surface size")
    centers = r.floats(n * d, "centers").reshape(n, d)
    weights = r.floats(n, "weights")
    poly = r.floats(d + 1, "affine coefficients")
    lo = r.floats(d, "axis offsets")
    span = r.floats(d, "axis widths")
    return RbfSurface(centers, weights, poly, lo, span, kernel)


def model_to_bytes(model, nirom=None):
    k, m = model.k, model.m
    parts = [MODEL_MAGIC, ENDIAN_TAG,
             struct.pack("<IQQd", k, m, model.n_snapshots, model.dt),
             _interleave(model.modes), _interleave(model.ritz),
             _interleave(model.amplitudes)]
    if nirom is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<BBIdd", 1, LAYOUTS[nirom.layout], len(nirom.surfaces),
                                 nirom.t_first, nirom.t_last))
        parts.extend(_surface_bytes(s) for s in nirom.surfaces)
    return b"".join(parts)


def model_from_bytes(buf, what="model file"):
    """Return ``(DmdModel, NiromSurfaces or None)``."""
    r = _Reader(buf, what)
    _check_magic(r, MODEL_MAGIC)
    k, m, n_snap, dt = r.unpack("IQQd", "header")
    modes = r.complexes(m * k, "modes").reshape(m, k)
    ritz = r.complexes(k, "ritz values")
    ampl = r.complexes(k, "amplitudes")
    model = DmdModel(np.ascontiguousarray(modes), ritz, ampl, dt, n_snap)
    flag = r.unpack("B", "rbf flag")
    nirom = None
    if flag == 1:
        layout_code, count, t_first, t_last = r.unpack("BIdd", "rbf header")
        layouts = {v: key for key, v in LAYOUTS.items()}
        if layout_code not in layouts:
            raise DataError(f"{what}: unknown rbf layout {layout_code}", offset=r.pos)
        surfaces = [_read_surface(r) for _ in range(count)]
        nirom = NiromSurfaces(layouts[layout_code], surfaces, t_first, t_last)
    elif flag != 0:
        raise DataError(f"{what}: bad rbf flag {flag} at offset {r.pos - 1}", offset=r.pos - 1)
    r.finish()
    return model, nirom


def write_model(path, model, nirom=None):
    atomic_write(path, model_to_bytes(model, nirom))


def read_model(path):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read(), what=os.fspath(path))


# -- CSV -------------------------------------------------------------------

SCHEMAS = {
    "spectrum": ["re_lambda", "im_lambda", "growth_rate", "frequency", "amplitude"],
    "sweep": ["k", "rel_error", "correlation", "wall_time_s"],
    "local_error": ["x", "y", "abs_error"],
    "bench": ["m", "n", "k", "t_ardmd_s", "t_fullsvd_s", "er_ardmd", "er_fullsvd"],
}


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def csv_text(rows, schema):
    """Render rows (sequences ordered as the schema's columns) to CSV text."""
    columns = SCHEMAS[schema]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        row = list(row)
        if len(row) != len(columns):
            raise DataError(f"{schema} row has {len(row)} values, expected {len(columns)}")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def export_csv(path, rows, schema):
    atomic_write(path, csv_text(rows, schema), mode="w")


def read_csv(path):
    """Return ``(header, rows)`` with numeric cells parsed as float."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(c) for c in row] for row in reader]


def spectrum_rows(points):
    return [(p.ritz.real, p.ritz.imag, p.growth_rate, p.frequency, p.amplitude)
            for p in points]


def sweep_rows(trace):
    return [(r.k, r.rel_error, r.correlation, r.wall_time) for r in trace]


def local_error_rows(snap, reference, predicted, x=None, y=None):
    """Grid points with ``|v - v_pred|`` for one snapshot column."""
    err = np.abs(np.asarray(reference) - np.asarray(predicted)).reshape(snap.ny, snap.nx)
    if x is None:
        x = np.arange(snap.nx, dtype=float)
    if y is None:
        y = np.arange(snap.ny, dtype=float)
    return [(x[i], y[j], err[j, i]) for j in range(snap.ny) for i in range(snap.nx)]
