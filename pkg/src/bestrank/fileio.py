"""Readers and writers for dense-matrix CSV, sketch (SKZ1) and PGM files.

Floats are written with ``repr`` so that every file round-trips exactly and
reruns produce identical bytes.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError
from .matrix_core import as_matrix
from .sampling import SamplingScheme, SketchBundle

SKETCH_MAGIC = "SKZ1"


def _fmt(x):
    return repr(float(x))


def write_matrix_csv(A, path):
    A = as_matrix(A)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in A:
            fh.write(",".join(map(_fmt, row)))
            fh.write("\n")


def read_matrix_csv(path):
    try:
        with open(path, encoding="ascii") as fh:
            rows = [
                [float(tok) for tok in line.split(",")]
                for line in fh.read().splitlines()
                if line.strip()
            ]
    except (UnicodeDecodeError, ValueError) as exc:
        raise FormatError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged rows")
    try:
        return as_matrix(rows)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_sketch(s, path):
    d1, d2 = s.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(SKETCH_MAGIC + "\n")
        fh.write(f"{d1} {d2} {s.entry_count} {s.scheme.value} {_fmt(s.budget_n)} {int(s.seed)}\n")
        fh.write(f"{_fmt(s.fro_norm)} {_fmt(s.l1_norm)}\n")
        fh.write(" ".join(map(_fmt, s.row_norms)) + "\n")
        fh.write(" ".join(map(_fmt, s.col_norms)) + "\n")
        for i, j, v, p in zip(s.rows.tolist(), s.cols.tolist(), s.values.tolist(), s.probs.tolist()):
            fh.write(f"{i} {j} {_fmt(v)} {_fmt(p)}\n")


def read_sketch(path):
    with open(path, encoding="ascii") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 5 or lines[0] != SKETCH_MAGIC:
        head = lines[0] if lines else ""
        raise FormatError(f"{path}: not a sketch file (header {head!r})")
    try:
        d1, d2, count, scheme, budget, seed = lines[1].split()
        d1, d2, count = int(d1), int(d2), int(count)
        fro, l1 = (float(t) for t in lines[2].split())
        row_norms = np.array([float(t) for t in lines[3].split()])
        col_norms = np.array([float(t) for t in lines[4].split()])
        body = lines[5:]
        if len(body) != count:
            raise FormatError(f"{path}: header promises {count} entries, found {len(body)}")
        if count:
            table = np.array([ln.split() for ln in body], dtype=object)
            rows = table[:, 0].astype(np.int64)
            cols = table[:, 1].astype(np.int64)
            values = table[:, 2].astype(float)
            probs = table[:, 3].astype(float)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            values = probs = np.zeros(0)
        return SketchBundle(
            shape=(d1, d2),
            rows=rows,
            cols=cols,
            values=values,
            probs=probs,
            row_norms=row_norms,
            col_norms=col_norms,
            fro_norm=fro,
            l1_norm=l1,
            scheme=SamplingScheme.parse(scheme),
            budget_n=float(budget),
            seed=int(seed),
        )
    except FormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed sketch ({exc})") from exc


def _pgm_tokens(data, count, pos):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path):
    """Greyscale PGM (P2 ASCII or P5 8-bit binary) as a float matrix of raw intensities."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: unsupported image type {magic.decode('latin-1')!r} (need P2 or P5)")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header ({exc})") from exc
    header = f"{magic.decode()} {width} {height} {maxval}"
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: invalid PGM header {header!r}")
    if magic == b"P5":
        if maxval > 255:
            raise FormatError(f"{path}: only 8-bit P5 images are supported, header {header!r}")
        raster = data[pos + 1 : pos + 1 + width * height]
        if len(raster) != width * height:
            raise FormatError(f"{path}: truncated raster for header {header!r}")
        pixels = np.frombuffer(raster, dtype=np.uint8)
    else:
        try:
            pixels = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"{path}: non-integer pixel in P2 body") from exc
        if pixels.size != width * height:
            raise FormatError(f"{path}: expected {width * height} pixels, found {pixels.size}")
    if pixels.size and pixels.max() > maxval:
        raise FormatError(f"{path}: pixel value exceeds maxval in header {header!r}")
    return pixels.reshape(height, width).astype(np.float64)


def write_pgm(image, path, binary=True, maxval=255):
    """Write integer intensities in ``[0, maxval]`` as P5 (binary) or P2 (ASCII)."""
    img = np.asarray(image)
    pix = np.clip(np.rint(img), 0, maxval).astype(np.int64)
    h, w = pix.shape
    with open(path, "wb") as fh:
        if binary:
            if maxval > 255:
                raise FormatError("binary PGM output supports maxval <= 255 only")
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
            fh.write(pix.astype(np.uint8).tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n{maxval}\n".encode("ascii"))
            for row in pix:
                fh.write((" ".join(map(str, row)) + "\n").encode("ascii"))
