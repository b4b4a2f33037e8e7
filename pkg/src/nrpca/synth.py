"""Synthetic scenes: rank-1 background plus a rectangle on a constant
trajectory, with exact ground-truth foreground sets for every test.

The background image is balanced into factors (u, v) with ||u|| = ||v|| and a
constant per-frame scaling, so the generated data matrix is exactly rank one
off the object.  The object brightens covered pixels by a fixed contrast, far
enough above the residual threshold that detected and true foregrounds agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certify import (RECTANGLE_FACTOR, RectangleSpec, common_background_pixel,
                      rectangle_identifiability)
from .core import (DEFAULT_EPS_S, DataMatrix, Decomposition, FrameGeometry,
                   PerFrameSets, assemble_data_matrix)

BOUNDARY_MODES = ("exit", "wrap")


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a synthetic video.

    background: a constant level, a (low, high) range sampled per pixel, or
    an explicit background image given through the u/v0 override fields.
    rect=None produces an object-free, exactly rank-1 video.
    """

    geometry: FrameGeometry
    rect: RectangleSpec | None
    start: tuple[int, int] = (1, 1)
    background: float | tuple[float, float] = 4.0
    u: np.ndarray | None = None
    v0: float | None = None
    object_contrast: float | None = None
    boundary: str = "exit"
    eps_s: float = DEFAULT_EPS_S

    def __post_init__(self):
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        if self.rect is not None:
            i0, j0 = self.start
            g = self.geometry
            if not (1 <= i0 and i0 + self.rect.p_m - 1 <= g.d_m
                    and 1 <= j0 and j0 + self.rect.p_n - 1 <= g.d_n):
                raise ValueError(
                    f"initial {self.rect.p_m}x{self.rect.p_n} rectangle at "
                    f"({i0}, {j0}) lies outside the {g.d_m}x{g.d_n} frame"
                )

    def contrast(self) -> float:
        if self.object_contrast is not None:
            return self.object_contrast
        return max(2 * self.eps_s, 10.0)


@dataclass(frozen=True)
class Scene:
    """Generated video with its exact ground truth."""

    spec: SceneSpec
    frames: np.ndarray
    foreground: PerFrameSets
    p_f: int
    u: np.ndarray
    v: np.ndarray
    x_black: float
    x_white: float

    def data_matrix(self) -> DataMatrix:
        return assemble_data_matrix(self.frames, self.x_black, self.x_white)

    def decomposition(self, lam: float = 1.0) -> Decomposition:
        return Decomposition(self.u, self.v, lam)


def balanced_decomposition(background_image, n_frames: int
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Split a positive background image b into u, v with u v^T = b 1^T,
    constant v, and ||u||_2 = ||v||_2."""
    b = np.asarray(background_image, dtype=np.float64).ravel()
    if (b <= 0).any():
        raise ValueError("background image must be strictly positive")
    v0 = math.sqrt(np.linalg.norm(b) / math.sqrt(n_frames))
    return b / v0, np.full(n_frames, v0)


def _background_image(spec: SceneSpec, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = spec.geometry
    if spec.u is not None:
        u = np.asarray(spec.u, dtype=np.float64).ravel()
        if u.shape != (g.m,):
            raise ValueError(f"explicit u must have length m={g.m}")
        if spec.v0 is not None:
            v0 = float(spec.v0)
        else:
            # Balance ||u|| = ||v|| for the caller.
            v0 = float(np.linalg.norm(u) / math.sqrt(g.n))
        v = np.full(g.n, v0)
        return u * v0, u, v
    bg = spec.background
    if np.isscalar(bg):
        image = np.full(g.m, float(bg))
    else:
        low, high = bg
        if not 0 < low <= high:
            raise ValueError(f"background range must satisfy 0 < low <= high, got {bg}")
        image = rng.uniform(low, high, size=g.m)
        # Pin the darkest pixel to the range floor so x_black is attained.
        image[np.argmin(image)] = low
    u, v = balanced_decomposition(image, g.n)
    return image, u, v


def _covered_indices(spec: SceneSpec, k: int) -> np.ndarray:
    """0-based pixel numbers covered by the object in frame k (1-based)."""
    rect, g = spec.rect, spec.geometry
    i0, j0 = spec.start
    top = i0 + round((k - 1) * rect.speed_y)
    left = j0 + round((k - 1) * rect.speed_x)
    rows = np.arange(top, top + rect.p_m)
    cols = np.arange(left, left + rect.p_n)
    if spec.boundary == "exit":
        rows = rows[(rows >= 1) & (rows <= g.d_m)]
        cols = cols[(cols >= 1) & (cols <= g.d_n)]
    else:
        rows = (rows - 1) % g.d_m + 1
        cols = (cols - 1) % g.d_n + 1
    if rows.size == 0 or cols.size == 0:
        return np.empty(0, dtype=np.int64)
    return ((cols[None, :] - 1) * g.d_m + rows[:, None] - 1).ravel()


def generate(spec: SceneSpec, seed: int = 0) -> Scene:
    """Render the scene and count the true per-pixel obscuring maximum."""
    g = spec.geometry
    rng = np.random.default_rng(seed)
    image, u, v = _background_image(spec, rng)
    fg = np.zeros((g.m, g.n), dtype=bool)
    if spec.rect is not None:
        for k in range(1, g.n + 1):
            fg[_covered_indices(spec, k), k - 1] = True
    contrast = spec.contrast()
    X = np.outer(u, v)
    X[fg] += contrast
    x_black = float(image.min())
    x_white = float(image.max() + (contrast if fg.any() else 0.0))
    frames = X.reshape(g.d_m, g.d_n, g.d_f, order="F").transpose(2, 0, 1)
    p_f = int(fg.sum(axis=1).max()) if fg.any() else 0
    return Scene(
        spec=spec,
        frames=frames,
        foreground=PerFrameSets(g, fg),
        p_f=p_f,
        u=u,
        v=v,
        x_black=x_black,
        x_white=x_white,
    )


def certified_scene(geometry: FrameGeometry, background_level: float = 4.0,
                    contrast: float | None = None,
                    eps_s: float = DEFAULT_EPS_S) -> SceneSpec:
    """Search for a scene whose generated video passes both the common-pixel
    connectivity check and the closed-form rectangle identifiability test.

    Requires d_f = d_m * d_n.  The rectangle side starts at the largest value
    whose area stays strictly under d/49 and shrinks (raising the speed when
    needed) until the rendered scene actually certifies.
    """
    d = geometry.d_f
    if geometry.m != d:
        raise ValueError(
            f"certified_scene requires d_f = d_m*d_n, got d_f={d}, "
            f"d_m*d_n={geometry.m}"
        )
    limit = d / RECTANGLE_FACTOR
    budget = math.ceil(limit) - 1 if float(limit).is_integer() else math.floor(limit)
    if budget < 1:
        raise ValueError(
            f"no feasible certified scene at d={d}: the object would need "
            f"fewer than {limit:.4g} covered pixels and obscured frames; "
            "the smallest feasible d is 50"
        )
    side = max(1, int(math.isqrt(budget)))
    for p in range(side, 0, -1):
        p_m = min(p, geometry.d_m)
        p_n = min(p, geometry.d_n)
        for speed in (1.0, float(p_n + 1)):
            candidate = SceneSpec(
                geometry=geometry,
                rect=RectangleSpec(p_m, p_n, speed_x=speed),
                start=(1, 1),
                background=background_level,
                object_contrast=contrast,
                eps_s=eps_s,
            )
            scene = generate(candidate, seed=0)
            shape = RectangleSpec(p_m, p_n, p_f=max(scene.p_f, 1))
            if (common_background_pixel(scene.foreground).passed
                    and rectangle_identifiability(shape, geometry).passed
                    and scene.p_f >= 1):
                return candidate
    raise ValueError(f"no certified scene found at geometry {geometry}")
