"""On-disk formats: binary portable graymaps and a raw float64 video container.

PGM files use the standard P5 layout (P2 is accepted when reading); samples
wider than 8 bits are stored most-significant-byte first per the PNM
convention.  Masks are maxval-1 graymaps, one file per frame, named
``frame_000001.mask.pgm`` with 1 marking foreground.

The raw container is an ASCII header terminated by a blank line followed by
little-endian float64 frames in row-major order:

    nrpca-raw 1
    frames <d_f>
    rows <d_m>
    cols <d_n>
    x_black <float>
    x_white <float>
    dtype float64 little-endian row-major

"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import FrameGeometry, PerFrameSets

RAW_MAGIC = "nrpca-raw 1"


def write_pgm(path, image, maxval: int | None = None) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    if not np.issubdtype(image.dtype, np.integer):
        rounded = np.rint(image)
        if not np.allclose(image, rounded, atol=1e-9):
            raise ValueError("graymap output requires integer pixel values")
        image = rounded.astype(np.int64)
    if maxval is None:
        maxval = max(1, int(image.max()))
    if image.min() < 0 or image.max() > maxval:
        raise ValueError(
            f"values [{image.min()}, {image.max()}] outside graymap range [0, {maxval}]"
        )
    if maxval > 65535:
        raise ValueError(f"maxval {maxval} exceeds 16-bit graymap limit")
    height, width = image.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    Path(path).write_bytes(header + image.astype(dtype).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, fields, offset = _parse_pnm_header(data)
    if magic not in ("P2", "P5"):
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    width, height, maxval = fields
    if magic == "P2":
        values = np.array(data[offset:].split(), dtype=np.int64)
    else:
        dtype = ">u2" if maxval > 255 else "u1"
        count = width * height
        values = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        values = values.astype(np.int64)
    if values.size != width * height:
        raise ValueError(f"{path}: expected {width * height} samples, got {values.size}")
    return values.reshape(height, width)


def _parse_pnm_header(data: bytes):
    magic = data[:2].decode("ascii", errors="replace")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    return magic, tuple(fields), pos


def write_raw_video(path, frames, x_black: float, x_white: float) -> None:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3:
        raise ValueError(f"expected (d_f, d_m, d_n) frames, got shape {frames.shape}")
    d_f, d_m, d_n = frames.shape
    header = (
        f"{RAW_MAGIC}\n"
        f"frames {d_f}\n"
        f"rows {d_m}\n"
        f"cols {d_n}\n"
        f"x_black {x_black:.17g}\n"
        f"x_white {x_white:.17g}\n"
        f"dtype float64 little-endian row-major\n"
        f"\n"
    )
    Path(path).write_bytes(header.encode("ascii") + frames.astype("<f8").tobytes())


def read_raw_video(path) -> tuple[np.ndarray, float, float]:
    data = Path(path).read_bytes()
    end = data.find(b"\n\n")
    if end < 0:
        raise ValueError(f"{path}: missing raw header terminator")
    lines = data[:end].decode("ascii").splitlines()
    if not lines or lines[0] != RAW_MAGIC:
        raise ValueError(f"{path}: not a {RAW_MAGIC} file")
    fields = dict(line.split(maxsplit=1) for line in lines[1:])
    d_f, d_m, d_n = int(fields["frames"]), int(fields["rows"]), int(fields["cols"])
    x_black, x_white = float(fields["x_black"]), float(fields["x_white"])
    frames = np.frombuffer(data, dtype="<f8", offset=end + 2)
    if frames.size != d_f * d_m * d_n:
        raise ValueError(
            f"{path}: expected {d_f * d_m * d_n} samples, got {frames.size}"
        )
    return frames.reshape(d_f, d_m, d_n).copy(), x_black, x_white


def write_pgm_frames(directory, frames, maxval: int | None = None,
                     suffix: str = ".pgm") -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for idx, frame in enumerate(frames, start=1):
        write_pgm(directory / f"frame_{idx:06d}{suffix}", frame, maxval)


def read_pgm_frames(directory, suffix: str = ".pgm") -> np.ndarray:
    directory = Path(directory)
    paths = sorted(p for p in directory.glob(f"*{suffix}")
                   if not (suffix == ".pgm" and p.name.endswith(".mask.pgm")))
    if not paths:
        raise ValueError(f"no {suffix} frames found in {directory}")
    frames = [read_pgm(p) for p in paths]
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise ValueError(f"inconsistent frame sizes in {directory}: {sorted(shapes)}")
    return np.stack(frames)


def write_mask_frames(directory, sets: PerFrameSets) -> None:
    """One maxval-1 graymap per frame, foreground pixels stored as 1."""
    g = sets.geometry
    frames = sets.foreground.reshape(g.d_m, g.d_n, g.d_f, order="F").transpose(2, 0, 1)
    write_pgm_frames(directory, frames.astype(np.uint8), maxval=1,
                     suffix=".mask.pgm")


def read_mask_frames(directory) -> PerFrameSets:
    frames = read_pgm_frames(directory, suffix=".mask.pgm")
    d_f, d_m, d_n = frames.shape
    geometry = FrameGeometry(d_m, d_n, d_f)
    mask = frames.transpose(1, 2, 0).reshape(geometry.m, geometry.n, order="F") > 0
    return PerFrameSets(geometry, mask)


def load_video(path) -> tuple[np.ndarray, float | None, float | None]:
    """Read a video from a raw container file or a directory of PGM frames.

    For frame directories, a ``metadata.json`` sidecar (if present) supplies
    the recorded intensity range; otherwise the range is left unset.
    """
    path = Path(path)
    if path.is_file():
        return read_raw_video(path)
    if path.is_dir():
        frames = read_pgm_frames(path).astype(np.float64)
        meta_path = path / "metadata.json"
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            return frames, meta.get("x_black"), meta.get("x_white")
        return frames, None, None
    raise ValueError(f"{path}: no such file or directory")
