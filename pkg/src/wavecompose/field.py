"""Dense H x W x C float64 fields, seeded randomness, and CSV/PGM dumps.

A field is a plain ``numpy.ndarray`` of shape ``(height, width, channels)``
and dtype float64. Functions here accept 2-D arrays too and treat them as
single-channel fields.
"""
import csv
import io
import operator
from pathlib import Path

import numpy as np


def as_field(x, name="field"):
    """Coerce `x` to a finite float64 array of shape (H, W, C)."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or min(a.shape) < 1:
        raise ValueError(f"{name}: expected an H x W x C array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name}: contains non-finite values")
    return a


def check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def inner(a, b):
    """Sum over all entries of ``a * b``."""
    a = as_field(a, "a")
    b = as_field(b, "b")
    check_same_shape(a, b)
    return float(np.dot(a.ravel(), b.ravel()))


def l2_norm_sq(a):
    a = as_field(a)
    return float(np.dot(a.ravel(), a.ravel()))


def make_rng(seed):
    """Counter-based (Philox) generator; same seed gives the same stream everywhere."""
    try:
        seed = operator.index(seed)
    except TypeError:
        raise TypeError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(seed))


def gaussian_field(shape, rng):
    """I.i.d. standard normal field drawn from `rng` (advances its state)."""
    shape = tuple(int(s) for s in shape)
    if len(shape) == 2:
        shape = shape + (1,)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError(f"shape dims must be positive (H, W, C), got {shape}")
    return rng.standard_normal(shape)


# --- serialization -------------------------------------------------------

def field_to_csv(x, header_comments=()):
    """CSV text with one line per (pixel-row, channel), ordered row-major.

    Columns: ``row, channel, c0 .. c{W-1}``. Values use ``repr`` so they
    round-trip exactly.
    """
    x = as_field(x)
    h, w, c = x.shape
    buf = io.StringIO()
    for line in header_comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "channel"] + [f"c{j}" for j in range(w)])
    for r in range(h):
        for ch in range(c):
            writer.writerow([r, ch] + [repr(float(v)) for v in x[r, :, ch]])
    return buf.getvalue()


def field_from_csv(text):
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    w = len(header) - 2
    cells = {}
    for rec in reader:
        cells[int(rec[0]), int(rec[1])] = [float(v) for v in rec[2:]]
    h = max(r for r, _ in cells) + 1
    c = max(ch for _, ch in cells) + 1
    out = np.empty((h, w, c))
    for (r, ch), vals in cells.items():
        out[r, :, ch] = vals
    return out


def write_field_csv(path, x, header_comments=()):
    Path(path).write_text(field_to_csv(x, header_comments), newline="")


def read_field_csv(path):
    return field_from_csv(Path(path).read_text())


def field_to_pgm(x, comment=None):
    """Binary P5 PGM, maxval 65535, from a single-channel field.

    Values map affinely from [min, max] to [0, 65535]; min and max go into a
    header comment so the mapping can be undone.
    """
    x = as_field(x)
    if x.shape[2] != 1:
        raise ValueError(f"PGM dump needs a single-channel field, got {x.shape[2]} channels")
    img = x[:, :, 0]
    # range rounded to 12 digits so last-ulp noise upstream does not change the bytes
    lo_s, hi_s = f"{img.min():.12g}", f"{img.max():.12g}"
    lo, hi = float(lo_s), float(hi_s)
    if hi > lo:
        scaled = np.clip(np.rint((img - lo) / (hi - lo) * 65535.0), 0, 65535)
    else:
        scaled = np.zeros_like(img)
    data = scaled.astype(">u2").tobytes()
    h, w = img.shape
    lines = ["P5", f"# min={lo_s} max={hi_s}"]
    if comment:
        lines.append(f"# {comment}")
    lines += [f"{w} {h}", "65535"]
    return ("\n".join(lines) + "\n").encode("ascii") + data


def pgm_to_field(blob):
    """Inverse of `field_to_pgm` up to 16-bit quantization."""
    header = []
    pos = 0
    while len(header) < 4:
        end = blob.index(b"\n", pos)
        line = blob[pos:end].decode("ascii")
        pos = end + 1
        if line.startswith("#"):
            if line.startswith("# min="):
                lo_s, hi_s = line[2:].split()
                lo, hi = float(lo_s[4:]), float(hi_s[4:])
            continue
        header.extend(line.split())
    magic, w, h, maxval = header[0], int(header[1]), int(header[2]), int(header[3])
    if magic != "P5" or maxval != 65535:
        raise ValueError("not a 16-bit P5 PGM")
    raw = np.frombuffer(blob[pos:pos + 2 * w * h], dtype=">u2").reshape(h, w)
    img = lo + raw.astype(np.float64) / 65535.0 * (hi - lo)
    return img[:, :, None]


def write_field_pgm(path, x, comment=None):
    Path(path).write_bytes(field_to_pgm(x, comment))


def read_field_pgm(path):
    return pgm_to_field(Path(path).read_bytes())
