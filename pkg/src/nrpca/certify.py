"""Certificates for unique, globally optimal segmentation under local search.

Two families of checks are evaluated from the video data and a candidate
decomposition: connectivity of the background graph (with cheap necessary
conditions and a common-background-pixel sufficient condition), and the
degree-margin identifiability test

    delta(background graph) > (48 / c^2) * kappa^4 * Delta(foreground graph),

together with its closed-form variant for a rectangular moving object.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (DEFAULT_EPS_S, DataMatrix, Decomposition, FrameGeometry,
                   PerFrameSets, pixel_of_index, residual_sets)
from .graphs import background_connected, mask_degree_stats

# Margin factor in the degree inequality and its single-parameter rectangle
# form (one unit larger because the two degree margins collapse into one).
IDENTIFIABILITY_FACTOR = 48.0
RECTANGLE_FACTOR = 49

# Entries this far below max(w) are treated as zero when computing kappa.
DEGENERATE_RATIO = 1e-9


@dataclass(frozen=True)
class RectangleSpec:
    """A p_m-by-p_n moving rectangle, optionally with known obscuring count
    p_f (max frames any single pixel stays covered) or constant speeds."""

    p_m: int
    p_n: int
    p_f: int | None = None
    speed_x: float = 0.0
    speed_y: float = 0.0

    def __post_init__(self):
        if self.p_m < 1 or self.p_n < 1:
            raise ValueError(f"rectangle sides must be >= 1, got {self.p_m}x{self.p_n}")
        if self.p_f is not None and self.p_f < 1:
            raise ValueError(f"p_f must be >= 1, got {self.p_f}")
        if self.speed_x < 0 or self.speed_y < 0:
            raise ValueError("speeds must be nonnegative")

    @property
    def area(self) -> int:
        return self.p_m * self.p_n


@dataclass(frozen=True)
class NecessaryConditions:
    """Cheap tests that must all hold for the background graph to be connected."""

    foreground_count: int
    size_limit: int
    empty_frame: int | None        # witness frame with no background pixel
    uncovered_pixel: int | None    # witness pixel that is foreground in every frame

    @property
    def size_ok(self) -> bool:
        return self.foreground_count <= self.size_limit

    @property
    def frames_ok(self) -> bool:
        return self.empty_frame is None

    @property
    def pixels_ok(self) -> bool:
        return self.uncovered_pixel is None

    @property
    def all_ok(self) -> bool:
        return self.size_ok and self.frames_ok and self.pixels_ok


@dataclass(frozen=True)
class CommonPixelCheck:
    """Sufficient condition: some pixel is background in every frame, and
    every pixel is background in at least one frame."""

    passed: bool
    witness: int | None
    union_covers_all: bool


@dataclass(frozen=True)
class IdentifiabilityCheck:
    min_degree: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class RectangleCheck:
    p_f: int
    area: int
    limit: float
    passed: bool


def check_necessary_conditions(sets: PerFrameSets) -> NecessaryConditions:
    """Foreground-size bound, no fully covered frame, no always-covered pixel."""
    g = sets.geometry
    fg = sets.foreground
    count = int(fg.sum())
    limit = g.m * g.n - (g.m + g.n - 1)
    full_frames = np.nonzero(fg.all(axis=0))[0]
    covered_pixels = np.nonzero(fg.all(axis=1))[0]
    return NecessaryConditions(
        foreground_count=count,
        size_limit=limit,
        empty_frame=int(full_frames[0]) + 1 if full_frames.size else None,
        uncovered_pixel=int(covered_pixels[0]) + 1 if covered_pixels.size else None,
    )


def max_relative_object_size(geometry: FrameGeometry) -> float:
    """Largest foreground-to-background pixel ratio compatible with a
    connected background: (m*n - (m + n - 1)) / (m + n - 1)."""
    m, n = geometry.m, geometry.n
    denom = m + n - 1
    return (m * n - denom) / denom


def common_background_pixel(sets: PerFrameSets) -> CommonPixelCheck:
    """Look for a pixel that stays background through every frame.

    Passing also requires that every pixel is background somewhere, in which
    case the background graph is guaranteed connected.
    """
    bg = ~sets.foreground
    union_ok = bool(bg.any(axis=1).all())
    always = np.nonzero(bg.all(axis=1))[0]
    witness = int(always[0]) + 1 if always.size else None
    return CommonPixelCheck(
        passed=union_ok and witness is not None,
        witness=witness,
        union_covers_all=union_ok,
    )


def condition_number(dec: Decomposition | np.ndarray) -> float:
    """kappa(w): max entry over min entry of the stacked positive vector."""
    w = dec.w if isinstance(dec, Decomposition) else np.asarray(dec, dtype=np.float64)
    top = float(w.max())
    bottom = float(w.min())
    if bottom <= 0 or (top > 0 and bottom <= DEGENERATE_RATIO * top):
        raise ValueError(
            "condition number undefined: the decomposition has a zero or "
            "numerically vanishing entry (positivity assumption violated)"
        )
    return top / bottom


def condition_number_bound(x_black: float, x_white: float) -> float:
    """Upper bound x_white / x_black on kappa of any exact background fit."""
    if x_black <= 0:
        raise ValueError(f"x_black must be positive, got {x_black}")
    if x_white < x_black:
        raise ValueError(f"need x_black <= x_white, got [{x_black}, {x_white}]")
    return x_white / x_black


def margin_constant(X: DataMatrix | np.ndarray, dec: Decomposition,
                    slack: float = 1e-6) -> float:
    """Largest margin c in (0, 1] with every entry of the lifted data matrix
    strictly above c * w_min^2.

    The lifted matrix [[u u^T, X], [X^T, v v^T]] is never materialized: its
    blockwise minimum is min(min(u)^2, min(v)^2, min(X)).  The returned value
    keeps a relative slack below the feasibility boundary since the defining
    inequality is strict.
    """
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    if not 0 <= slack < 1:
        raise ValueError(f"slack must lie in [0, 1), got {slack}")
    u, v = dec.u, dec.v
    if (u <= 0).any() or (v <= 0).any():
        raise ValueError("margin undefined: decomposition must be strictly positive")
    u_min = float(u.min())
    v_min = float(v.min())
    block_min = min(u_min * u_min, v_min * v_min, float(values.min()))
    if block_min <= 0:
        raise ValueError(
            f"no valid margin: lifted matrix minimum {block_min} is not positive"
        )
    w_min = min(u_min, v_min)
    return min(1.0, (1.0 - slack) * block_min / (w_min * w_min))


def check_identifiability(min_degree: float, max_degree: float, kappa: float,
                          c: float) -> IdentifiabilityCheck:
    """Strict test min_degree > (48 / c^2) * kappa^4 * max_degree."""
    if not 0 < c <= 1:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if max_degree < 0 or min_degree < 0:
        raise ValueError("degrees must be nonnegative")
    threshold = IDENTIFIABILITY_FACTOR / (c * c) * kappa ** 4 * max_degree
    return IdentifiabilityCheck(
        min_degree=float(min_degree),
        threshold=float(threshold),
        passed=min_degree > threshold,
    )


def max_obscured_frames(rect: RectangleSpec, geometry: FrameGeometry) -> int:
    """p_f for a constant-speed trajectory: min(ceil(p_n/sx), ceil(p_m/sy)).

    A zero speed contributes an infinite term (the object never passes along
    that axis).  Warns when the video is too short for the object to travel
    past a pixel, or when the object never moves at all (in which case every
    covered pixel stays covered for all d_f frames).
    """
    if rect.speed_x == 0 and rect.speed_y == 0:
        warnings.warn(
            "object never moves: every covered pixel is obscured for all "
            "frames, so no pixel-coverage condition can hold",
            stacklevel=2,
        )
        return geometry.d_f
    terms = []
    if rect.speed_x > 0:
        terms.append(math.ceil(rect.p_n / rect.speed_x))
    if rect.speed_y > 0:
        terms.append(math.ceil(rect.p_m / rect.speed_y))
    p_f = min(terms)
    if geometry.d_f <= p_f:
        warnings.warn(
            f"video has only {geometry.d_f} frames; the object may not travel "
            f"far enough for the {p_f}-frame obscuring bound to be exact",
            stacklevel=2,
        )
    return p_f


def rectangle_identifiability(rect: RectangleSpec,
                              geometry: FrameGeometry) -> RectangleCheck:
    """Identifiability in closed form for a rectangular object:
    p_f < d/49 and p_m*p_n < d/49 with d = d_f = d_m*d_n."""
    if geometry.d_f != geometry.m:
        raise ValueError(
            f"rectangle test requires d_f = d_m*d_n, got d_f={geometry.d_f}, "
            f"d_m*d_n={geometry.m}; square the video with the preprocess module"
        )
    if rect.p_m > geometry.d_m or rect.p_n > geometry.d_n:
        raise ValueError(
            f"{rect.p_m}x{rect.p_n} rectangle does not fit a "
            f"{geometry.d_m}x{geometry.d_n} frame"
        )
    p_f = rect.p_f if rect.p_f is not None else max_obscured_frames(rect, geometry)
    if p_f > geometry.d_f:
        raise ValueError(f"p_f={p_f} exceeds frame count {geometry.d_f}")
    limit = geometry.d_f / RECTANGLE_FACTOR
    return RectangleCheck(
        p_f=int(p_f),
        area=rect.area,
        limit=limit,
        passed=p_f < limit and rect.area < limit,
    )


@dataclass(frozen=True)
class CertificateReport:
    """Verdicts and computed quantities for all evaluated conditions.

    Fields are None when the inputs needed for that check were not supplied
    (e.g. no decomposition means no kappa, margin, or degree test).
    """

    geometry: FrameGeometry
    p_max: float
    necessary: NecessaryConditions | None = None
    common_pixel: CommonPixelCheck | None = None
    background_is_connected: bool | None = None
    foreground_max_degree: int | None = None
    background_min_degree: int | None = None
    kappa: float | None = None
    kappa_bound: float | None = None
    c: float | None = None
    identifiability: IdentifiabilityCheck | None = None
    rectangle: RectangleCheck | None = None

    def failures(self) -> list[str]:
        """Names of evaluated conditions that did not pass."""
        found = []
        if self.necessary is not None:
            if not self.necessary.size_ok:
                found.append("foreground size bound")
            if not self.necessary.frames_ok:
                found.append("frame background coverage")
            if not self.necessary.pixels_ok:
                found.append("pixel background coverage")
        if self.common_pixel is not None and not self.common_pixel.passed:
            found.append("common background pixel")
        if self.background_is_connected is False:
            found.append("background graph connectivity")
        if self.identifiability is not None and not self.identifiability.passed:
            found.append("degree-margin identifiability")
        if self.rectangle is not None and not self.rectangle.passed:
            found.append("rectangle identifiability")
        return found

    def all_passed(self) -> bool:
        return not self.failures()

    def to_text(self) -> str:
        """Human-diffable report with 6-significant-digit float formatting."""
        g = self.geometry
        lines = [
            "certificate report",
            "==================",
            f"geometry: d_m={g.d_m} d_n={g.d_n} d_f={g.d_f} (m={g.m}, n={g.n})",
            f"max relative object size: {_fmt(self.p_max)}",
            "",
        ]
        lines.append("necessary conditions")
        if self.necessary is None:
            lines.append("  SKIPPED (no per-frame sets supplied)")
        else:
            nc = self.necessary
            lines.append(
                f"  foreground size    {_verdict(nc.size_ok)}  "
                f"|F|={nc.foreground_count} limit={nc.size_limit}"
            )
            frame_note = "" if nc.frames_ok else f"  witness frame k={nc.empty_frame}"
            lines.append(f"  frame coverage     {_verdict(nc.frames_ok)}{frame_note}")
            pixel_note = "" if nc.pixels_ok else f"  witness pixel h={nc.uncovered_pixel}"
            lines.append(f"  pixel coverage     {_verdict(nc.pixels_ok)}{pixel_note}")
        lines.append("sufficient condition")
        if self.common_pixel is None:
            lines.append("  SKIPPED (no per-frame sets supplied)")
        else:
            cp = self.common_pixel
            note = ""
            if cp.witness is not None:
                i, j = pixel_of_index(cp.witness, g)
                note = f"  witness pixel h={cp.witness} (i={i}, j={j})"
            lines.append(f"  common background pixel  {_verdict(cp.passed)}{note}")
        lines.append("connectivity")
        if self.background_is_connected is None:
            lines.append("  SKIPPED (no per-frame sets supplied)")
        else:
            lines.append(
                f"  background graph connected  {_verdict(self.background_is_connected)}"
            )
        lines.append("identifiability")
        if self.kappa is not None:
            lines.append(f"  kappa: {_fmt(self.kappa)}")
        if self.kappa_bound is not None:
            lines.append(f"  kappa bound from intensity range: {_fmt(self.kappa_bound)}")
        if self.c is not None:
            lines.append(f"  margin c: {_fmt(self.c)}")
        if self.foreground_max_degree is not None:
            lines.append(
                f"  max foreground degree: {self.foreground_max_degree}   "
                f"min background degree: {self.background_min_degree}"
            )
        if self.identifiability is None:
            lines.append("  degree margin  SKIPPED (needs data and decomposition)")
        else:
            iq = self.identifiability
            lines.append(
                f"  degree margin  {_verdict(iq.passed)}  "
                f"{_fmt(iq.min_degree)} > {_fmt(iq.threshold)}"
            )
        lines.append("rectangle form")
        if self.rectangle is None:
            lines.append("  SKIPPED (no rectangle supplied)")
        else:
            rc = self.rectangle
            lines.append(
                f"  p_f={rc.p_f} < {_fmt(rc.limit)} and "
                f"area={rc.area} < {_fmt(rc.limit)}  {_verdict(rc.passed)}"
            )
        lines.append("")
        lines.append(f"overall: {_verdict(self.all_passed())}")
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def certify_video(data: DataMatrix | None = None,
                  decomposition: Decomposition | None = None,
                  sets: PerFrameSets | None = None,
                  rect: RectangleSpec | None = None,
                  geometry: FrameGeometry | None = None,
                  eps_s: float = DEFAULT_EPS_S,
                  margin_slack: float = 1e-6) -> CertificateReport:
    """Evaluate every certificate the supplied inputs allow.

    Per-frame sets are derived from data + decomposition when not given
    directly.  With only a rectangle spec and geometry, the closed-form
    rectangle test (and the intensity-range kappa bound, if data is present)
    are still evaluated.
    """
    if sets is None and data is not None and decomposition is not None:
        _, sets = residual_sets(data, decomposition, eps_s)
    if geometry is None:
        if sets is not None:
            geometry = sets.geometry
        elif data is not None:
            geometry = data.geometry
        else:
            raise ValueError("certify_video needs a geometry, data, or per-frame sets")

    necessary = common = connected = None
    fg_max = bg_min = None
    if sets is not None:
        necessary = check_necessary_conditions(sets)
        common = common_background_pixel(sets)
        connected = background_connected(sets)
        fg_max = mask_degree_stats(sets, "foreground").max_degree
        bg_min = mask_degree_stats(sets, "background").min_degree

    kappa = c = kappa_bound = None
    ident = None
    if data is not None and data.x_black > 0:
        kappa_bound = condition_number_bound(data.x_black, data.x_white)
    if decomposition is not None:
        kappa = condition_number(decomposition)
        if data is not None:
            c = margin_constant(data, decomposition, margin_slack)
            if fg_max is not None:
                ident = check_identifiability(bg_min, fg_max, kappa, c)

    rectangle = None
    if rect is not None:
        rectangle = rectangle_identifiability(rect, geometry)

    return CertificateReport(
        geometry=geometry,
        p_max=max_relative_object_size(geometry),
        necessary=necessary,
        common_pixel=common,
        background_is_connected=connected,
        foreground_max_degree=fg_max,
        background_min_degree=bg_min,
        kappa=kappa,
        kappa_bound=kappa_bound,
        c=c,
        identifiability=ident,
        rectangle=rectangle,
    )
