"""Synthetic test objects: a USAF-1951-style bar target and an animal silhouette.

Everything is rendered analytically (exact pixel-area coverage for the bar
target, 4x4 supersampling for the silhouette) and snapped to the 8-bit grid,
so repeated renders are byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import IoFailure

DMD_FIELD = 768  # the target is sampled onto 768 x 768 mirrors


def usaf_lp_per_mm(group: int, element: int) -> float:
    return 2.0 ** (group + (element - 1) / 6.0)


@dataclass(frozen=True)
class UsafElement:
    group: int
    element: int
    lp_per_mm: float
    orientation: str  # "vertical": bars vary along columns
    bbox: tuple  # (r0, r1, c0, c1) in fractional pixels

    @property
    def bar_width_px(self) -> float:
        r0, r1, c0, c1 = self.bbox
        return ((c1 - c0) if self.orientation == "vertical" else (r1 - r0)) / 5.0


@dataclass
class UsafTarget:
    image: np.ndarray
    extent_mm: float
    elements: list = field(default_factory=list)

    @property
    def pixels(self) -> int:
        return self.image.shape[0]

    def metadata(self) -> dict:
        return {
            "kind": "usaf1951-style",
            "extent_mm": self.extent_mm,
            "pixels": self.pixels,
            "elements": [asdict(e) for e in self.elements],
        }


def _coverage(lo: float, hi: float, start: int, stop: int) -> np.ndarray:
    """Fraction of each unit pixel [i, i+1), start <= i < stop, covered by [lo, hi)."""
    edges = np.arange(start, stop + 1, dtype=np.float64)
    return np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, 1.0)


def _fill_rect(img: np.ndarray, r0: float, r1: float, c0: float, c1: float) -> None:
    """Add exact area coverage of the rectangle [r0, r1) x [c0, c1)."""
    i0, i1 = max(int(r0), 0), min(int(np.ceil(r1)), img.shape[0])
    j0, j1 = max(int(c0), 0), min(int(np.ceil(c1)), img.shape[1])
    img[i0:i1, j0:j1] += np.outer(_coverage(r0, r1, i0, i1), _coverage(c0, c1, j0, j1))


def to_8bit_grid(img) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def usaf_target(pixels: int = DMD_FIELD, extent_mm: float = 4.8, groups=(2, 3, 4, 5, 6),
                quantize: bool = True) -> UsafTarget:
    """Bright three-bar pairs on a dark field, shelf-packed largest first.

    Each element is a vertical triplet and a horizontal triplet of bars of
    width 1 / (2 lp) and length five widths.  Elements too large for the
    field are skipped.
    """
    scale = pixels / extent_mm  # px per mm
    img = np.zeros((pixels, pixels))
    margin = 0.03 * pixels
    x, y, shelf_h = margin, margin, 0.0
    elements = []
    for g in groups:
        for e in range(1, 7):
            lp = usaf_lp_per_mm(g, e)
            w = scale / (2 * lp)
            gap = max(2 * w, 2.0)
            bw, bh = 12 * w, 5 * w
            if x + bw > pixels - margin:
                x, y, shelf_h = margin, y + shelf_h, 0.0
            if y + bh > pixels - margin or bw > pixels - 2 * margin:
                continue
            # vertical triplet at (x, y), horizontal triplet at (x + 7w, y)
            for k in (0, 2, 4):
                _fill_rect(img, y, y + 5 * w, x + k * w, x + (k + 1) * w)
                _fill_rect(img, y + k * w, y + (k + 1) * w, x + 7 * w, x + 12 * w)
            elements.append(UsafElement(g, e, lp, "vertical", (y, y + 5 * w, x, x + 5 * w)))
            elements.append(UsafElement(g, e, lp, "horizontal", (y, y + 5 * w, x + 7 * w, x + 12 * w)))
            x += bw + gap
            shelf_h = max(shelf_h, bh + gap)
    img = np.clip(img, 0.0, 1.0)
    if quantize:
        img = to_8bit_grid(img)
    return UsafTarget(img, extent_mm, elements)


def _ellipse(X, Y, cx, cy, rx, ry, angle_deg=0.0):
    a = math.radians(angle_deg)
    u = (X - cx) * math.cos(a) + (Y - cy) * math.sin(a)
    v = -(X - cx) * math.sin(a) + (Y - cy) * math.cos(a)
    return (u / rx) ** 2 + (v / ry) ** 2 <= 1.0


def _silhouette_mask(X, Y):
    """Kangaroo-like outline in unit coordinates (x right, y down)."""
    m = _ellipse(X, Y, 0.50, 0.55, 0.17, 0.24, -25)  # body
    m |= _ellipse(X, Y, 0.63, 0.27, 0.08, 0.06, -15)  # head
    m |= _ellipse(X, Y, 0.59, 0.33, 0.05, 0.07, 20)  # neck
    m |= _ellipse(X, Y, 0.66, 0.18, 0.018, 0.05, 15)  # ear
    m |= _ellipse(X, Y, 0.40, 0.70, 0.12, 0.09, 0)  # haunch
    m |= _ellipse(X, Y, 0.47, 0.85, 0.15, 0.025, 0)  # hind foot
    m |= _ellipse(X, Y, 0.64, 0.52, 0.07, 0.018, 35)  # forearm
    # tail: tapering chain of discs along a shallow arc
    for t in np.linspace(0.0, 1.0, 40):
        cx = 0.36 - 0.28 * t
        cy = 0.74 + 0.12 * t**1.5
        r = 0.045 * (1.0 - 0.8 * t)
        m |= (X - cx) ** 2 + (Y - cy) ** 2 <= r * r
    return m


def silhouette(pixels: int = DMD_FIELD, supersample: int = 4, quantize: bool = True) -> tuple:
    """(image, area_fraction): bright silhouette on a dark field."""
    s = pixels * supersample
    c = (np.arange(s) + 0.5) / s
    X, Y = np.meshgrid(c, c)
    fine = _silhouette_mask(X, Y).astype(np.float64)
    img = fine.reshape(pixels, supersample, pixels, supersample).mean(axis=(1, 3))
    if quantize:
        img = to_8bit_grid(img)
    return img, float(img.mean())


def make_fixtures(outdir, pixels: int = DMD_FIELD) -> dict:
    """Render the bundled fixtures as 8-bit PNGs plus ``fixtures.json``."""
    from .images import save_image

    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    usaf = usaf_target(pixels)
    kangaroo, area = silhouette(pixels)
    save_image(usaf.image, out / "usaf.png")
    save_image(kangaroo, out / "kangaroo.png")
    meta = {
        "usaf": usaf.metadata(),
        "kangaroo": {"kind": "silhouette", "pixels": pixels, "area_fraction": area},
    }
    try:
        (out / "fixtures.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return {"usaf": out / "usaf.png", "kangaroo": out / "kangaroo.png", "meta": out / "fixtures.json"}
