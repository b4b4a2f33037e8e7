"""Data model for grayscale video matrices and rank-1 + sparse decompositions.

A video of d_f frames, each d_m pixels tall and d_n pixels wide, is stored as
an m-by-n data matrix whose column k is the column-major vectorization of
frame k, with m = d_m*d_n pixels and n = d_f frames.  The public API uses the
1-based pixel numbering h = (j-1)*d_m + i for pixel (i, j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Half of an 8-bit quantization step: separates exact background from any
# integer foreground deviation.
DEFAULT_EPS_S = 0.5


@dataclass(frozen=True)
class FrameGeometry:
    """Frame dimensions (d_m rows, d_n columns) and frame count d_f."""

    d_m: int
    d_n: int
    d_f: int

    def __post_init__(self):
        for name in ("d_m", "d_n", "d_f"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def m(self) -> int:
        """Number of pixels per frame."""
        return self.d_m * self.d_n

    @property
    def n(self) -> int:
        """Number of frames."""
        return self.d_f


def index_of_pixel(i: int, j: int, geometry: FrameGeometry) -> int:
    """1-based pixel number h = (j-1)*d_m + i of pixel (i, j)."""
    if not (1 <= i <= geometry.d_m and 1 <= j <= geometry.d_n):
        raise ValueError(f"pixel ({i}, {j}) outside {geometry.d_m}x{geometry.d_n} frame")
    return (j - 1) * geometry.d_m + i


def pixel_of_index(h: int, geometry: FrameGeometry) -> tuple[int, int]:
    """Invert the pixel numbering: (i, j) = (h - (ceil(h/d_m) - 1)*d_m, ceil(h/d_m))."""
    if not 1 <= h <= geometry.m:
        raise ValueError(f"pixel number {h} outside 1..{geometry.m}")
    j = (h + geometry.d_m - 1) // geometry.d_m
    i = h - (j - 1) * geometry.d_m
    return i, j


def vectorize_frame(frame, geometry: FrameGeometry) -> np.ndarray:
    """Column-major vectorization of one frame: output[h-1] = frame[i-1, j-1]."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (geometry.d_m, geometry.d_n):
        raise ValueError(
            f"frame shape {frame.shape} does not match geometry "
            f"({geometry.d_m}, {geometry.d_n})"
        )
    return frame.ravel(order="F")


def frame_of_column(column, geometry: FrameGeometry) -> np.ndarray:
    """Undo vectorize_frame: reshape an m-vector back to a d_m-by-d_n frame."""
    column = np.asarray(column, dtype=np.float64)
    if column.shape != (geometry.m,):
        raise ValueError(f"column length {column.shape} does not match m={geometry.m}")
    return column.reshape(geometry.d_m, geometry.d_n, order="F")


@dataclass(frozen=True)
class DataMatrix:
    """m-by-n matrix of pixel intensities with its frame geometry and value range."""

    values: np.ndarray
    geometry: FrameGeometry
    x_black: float
    x_white: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.geometry.m, self.geometry.n):
            raise ValueError(
                f"values shape {values.shape} does not match geometry "
                f"({self.geometry.m}, {self.geometry.n})"
            )
        if not 0.0 <= self.x_black <= self.x_white:
            raise ValueError(f"invalid intensity range [{self.x_black}, {self.x_white}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def frame(self, k: int) -> np.ndarray:
        """Frame k (1-based) as a d_m-by-d_n array."""
        if not 1 <= k <= self.geometry.n:
            raise ValueError(f"frame {k} outside 1..{self.geometry.n}")
        return frame_of_column(self.values[:, k - 1], self.geometry)

    def frames(self) -> np.ndarray:
        """All frames as a (d_f, d_m, d_n) array."""
        g = self.geometry
        return self.values.reshape(g.d_m, g.d_n, g.d_f, order="F").transpose(2, 0, 1)


def assemble_data_matrix(frames, x_black: float, x_white: float,
                         geometry: FrameGeometry | None = None) -> DataMatrix:
    """Stack vectorized frames into a DataMatrix, rejecting out-of-range pixels."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.size == 0 or arr.ndim != 3:
        raise ValueError("frames must be a nonempty (d_f, d_m, d_n) stack")
    d_f, d_m, d_n = arr.shape
    inferred = FrameGeometry(d_m, d_n, d_f)
    if geometry is not None and geometry != inferred:
        raise ValueError(f"frames have geometry {inferred}, expected {geometry}")
    geometry = inferred
    bad = (arr < x_black) | (arr > x_white)
    if bad.any():
        k0, i0, j0 = np.argwhere(bad)[0]
        raise ValueError(
            f"pixel (i={i0 + 1}, j={j0 + 1}, k={k0 + 1}) value {arr[k0, i0, j0]} "
            f"outside [{x_black}, {x_white}]"
        )
    values = arr.transpose(1, 2, 0).reshape(geometry.m, geometry.n, order="F")
    return DataMatrix(values, geometry, float(x_black), float(x_white))


@dataclass(frozen=True)
class Decomposition:
    """Background model: nonnegative pattern u (per pixel) and scaling v (per frame)."""

    u: np.ndarray
    v: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64).ravel()
        v = np.array(self.v, dtype=np.float64).ravel()
        if (u < 0).any() or (v < 0).any():
            raise ValueError("decomposition factors must be entrywise nonnegative")
        if self.lam < 0:
            raise ValueError(f"regularization weight must be nonnegative, got {self.lam}")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def w(self) -> np.ndarray:
        """Stacked (m+n)-vector (u, v)."""
        return np.concatenate([self.u, self.v])

    def background(self) -> np.ndarray:
        """Rank-1 background matrix u v^T."""
        return np.outer(self.u, self.v)

    def balance_gap(self) -> float:
        """| ||u||^2 - ||v||^2 | relative to ||u||^2 (0 at an ideally balanced pair)."""
        uu = float(self.u @ self.u)
        vv = float(self.v @ self.v)
        if uu == 0.0:
            return 0.0 if vv == 0.0 else np.inf
        return abs(uu - vv) / uu


@dataclass(frozen=True)
class SparseResidual:
    """Foreground residual entries (h, k, X_hk - u_h v_k) with |value| > eps."""

    pixel_idx: np.ndarray
    frame_idx: np.ndarray
    values: np.ndarray
    eps: float
    geometry: FrameGeometry

    def __post_init__(self):
        for name in ("pixel_idx", "frame_idx", "values"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def support(self) -> set[tuple[int, int]]:
        """Foreground set F as 1-based (pixel, frame) pairs."""
        return set(zip(self.pixel_idx.tolist(), self.frame_idx.tolist()))


class PerFrameSets:
    """Per-frame background/foreground pixel sets, stored as an m-by-n foreground mask."""

    def __init__(self, geometry: FrameGeometry, foreground):
        foreground = np.array(foreground, dtype=bool)
        if foreground.shape != (geometry.m, geometry.n):
            raise ValueError(
                f"mask shape {foreground.shape} does not match ({geometry.m}, {geometry.n})"
            )
        foreground.setflags(write=False)
        self.geometry = geometry
        self.foreground = foreground

    @classmethod
    def from_foreground_support(cls, geometry: FrameGeometry,
                                pairs) -> "PerFrameSets":
        """Build from 1-based (pixel, frame) foreground pairs."""
        mask = np.zeros((geometry.m, geometry.n), dtype=bool)
        for h, k in pairs:
            if not (1 <= h <= geometry.m and 1 <= k <= geometry.n):
                raise ValueError(f"pair ({h}, {k}) outside the measurement set")
            mask[h - 1, k - 1] = True
        return cls(geometry, mask)

    @property
    def background(self) -> np.ndarray:
        return ~self.foreground

    def foreground_count(self) -> int:
        return int(self.foreground.sum())

    def foreground_pixels(self, k: int) -> set[tuple[int, int]]:
        """F^(k): 1-based (i, j) pixels that are foreground in frame k."""
        return self._pixels(k, self.foreground)

    def background_pixels(self, k: int) -> set[tuple[int, int]]:
        """B^(k): 1-based (i, j) pixels that are background in frame k."""
        return self._pixels(k, ~self.foreground)

    def _pixels(self, k, mask):
        if not 1 <= k <= self.geometry.n:
            raise ValueError(f"frame {k} outside 1..{self.geometry.n}")
        hs = np.nonzero(mask[:, k - 1])[0] + 1
        return {pixel_of_index(int(h), self.geometry) for h in hs}

    def __eq__(self, other):
        if not isinstance(other, PerFrameSets):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(
            self.foreground, other.foreground
        )

    def __repr__(self):
        return (f"PerFrameSets({self.geometry!r}, "
                f"|F|={self.foreground_count()})")


def residual_sets(X: DataMatrix, dec: Decomposition,
                  eps_s: float = DEFAULT_EPS_S) -> tuple[SparseResidual, PerFrameSets]:
    """Threshold the residual X - u v^T into foreground/background index sets."""
    if eps_s < 0:
        raise ValueError(f"eps_s must be nonnegative, got {eps_s}")
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    geometry = X.geometry if isinstance(X, DataMatrix) else None
    if geometry is None:
        raise ValueError("residual_sets requires a DataMatrix input")
    if dec.u.shape != (geometry.m,) or dec.v.shape != (geometry.n,):
        raise ValueError(
            f"decomposition shape ({dec.u.size}, {dec.v.size}) does not match "
            f"data ({geometry.m}, {geometry.n})"
        )
    residual = values - np.outer(dec.u, dec.v)
    fg = np.abs(residual) > eps_s
    rows, cols = np.nonzero(fg)
    sparse = SparseResidual(
        pixel_idx=rows + 1,
        frame_idx=cols + 1,
        values=residual[rows, cols],
        eps=float(eps_s),
        geometry=geometry,
    )
    return sparse, PerFrameSets(geometry, fg)
