"""Finite detector as a Fourier-plane stop.

A lens of focal length f maps object spatial frequency (nu_x, nu_y) to the
point (lambda f nu_x, lambda f nu_y) of its focal plane.  A detector of side
``s`` centred there only collects |nu| <= s / (2 lambda f), so it low-pass
filters what the single-pixel system can reconstruct.

Units: lengths in the model are micrometres except ``focal_length_mm`` and
``object_extent_mm``; frequencies are reported in line pairs per mm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

SHAPES = ("square", "circle")


@dataclass(frozen=True)
class ApertureModel:
    detector_side_um: float = 170.0
    wavelength_um: float = 0.565
    focal_length_mm: float = 4.0
    object_extent_mm: float = 4.8
    shape: str = "square"
    na_diameter_um: float | None = None  # optional outer NA-limited circle

    def __post_init__(self):
        for name in ("detector_side_um", "wavelength_um", "focal_length_mm", "object_extent_mm"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.shape not in SHAPES:
            raise ConfigError(f"shape must be one of {SHAPES}")
        if self.na_diameter_um is not None and not self.na_diameter_um > 0:
            raise ConfigError("na_diameter_um must be positive")

    @property
    def lambda_f_um2(self) -> float:
        """lambda * f in um^2 (Fourier-plane um per cycle/um)."""
        return self.wavelength_um * self.focal_length_mm * 1e3

    @property
    def cutoff_lp_mm(self) -> float:
        """Half-side of the detector expressed as object frequency."""
        return (self.detector_side_um / 2) / self.lambda_f_um2 * 1e3

    def fourier_extent_um(self, pixels: int) -> float:
        """Side of the sampled Fourier plane for ``pixels`` samples across the object."""
        return self.lambda_f_um2 * pixels / (self.object_extent_mm * 1e3)


@dataclass
class FourierPlane:
    intensity: np.ndarray  # centred, 1/um^2 scaled as I = |F|^2 / (lambda f)^2
    x_um: np.ndarray
    y_um: np.ndarray

    @property
    def extent_um(self) -> tuple:
        dx = self.x_um[1] - self.x_um[0]
        dy = self.y_um[1] - self.y_um[0]
        return (self.x_um.size * dx, self.y_um.size * dy)

    @property
    def pixel_area_um2(self) -> float:
        return float((self.x_um[1] - self.x_um[0]) * (self.y_um[1] - self.y_um[0]))


def _pixel_pitch_um(shape: tuple, model: ApertureModel) -> tuple:
    L = model.object_extent_mm * 1e3
    return L / shape[0], L / shape[1]


def fourier_plane_intensity(img, model: ApertureModel) -> FourierPlane:
    """Focal-plane intensity of the object transmittance, physically scaled.

    The continuous transform is approximated by ``dx dy * FFT`` so that
    ``sum(I) * pixel_area`` equals ``sum(img**2) * dx * dy`` (Parseval).
    """
    x = np.asarray(img, dtype=np.float64)
    dy, dx = _pixel_pitch_um(x.shape, model)
    F = np.fft.fftshift(np.fft.fft2(x)) * dx * dy
    lf = model.lambda_f_um2
    intensity = np.abs(F) ** 2 / lf**2
    nu_y = np.fft.fftshift(np.fft.fftfreq(x.shape[0], d=dy))
    nu_x = np.fft.fftshift(np.fft.fftfreq(x.shape[1], d=dx))
    return FourierPlane(intensity, lf * nu_x, lf * nu_y)


def aperture_mask(shape: tuple, model: ApertureModel) -> np.ndarray:
    """Boolean pass mask in unshifted FFT order (Hermitian symmetric)."""
    dy, dx = _pixel_pitch_um(shape, model)
    lf = model.lambda_f_um2
    X = np.abs(lf * np.fft.fftfreq(shape[1], d=dx))[None, :]
    Y = np.abs(lf * np.fft.fftfreq(shape[0], d=dy))[:, None]
    half = model.detector_side_um / 2
    if model.shape == "square":
        mask = (X <= half) & (Y <= half)
    else:
        mask = X**2 + Y**2 <= half**2
    if model.na_diameter_um is not None:
        mask &= X**2 + Y**2 <= (model.na_diameter_um / 2) ** 2
    return mask


def aperture_filter(img, model: ApertureModel, clip: bool = True) -> np.ndarray:
    """Image reconstructed from the light the detector collects.

    With ``clip=False`` this is an orthogonal projection (idempotent); the
    default clips ringing into [0, 1] for display.
    """
    x = np.asarray(img, dtype=np.float64)
    out = np.fft.ifft2(np.fft.fft2(x) * aperture_mask(x.shape, model)).real
    return np.clip(out, 0.0, 1.0) if clip else out


def bar_contrast(img, element) -> float:
    """Michelson contrast of one 3-bar element: dimmest bar vs brightest gap."""
    x = np.asarray(img)
    r0, r1, c0, c1 = element.bbox
    if element.orientation == "vertical":  # bars vary along columns
        lo, hi, start, width = r0, r1, c0, (c1 - c0) / 5
    else:
        lo, hi, start, width = c0, c1, r0, (r1 - r0) / 5
    # average along the middle half of the bar length
    a = int(np.ceil(lo + (hi - lo) / 4))
    b = max(int(hi - (hi - lo) / 4), a + 1)
    if element.orientation == "vertical":
        profile = x[a:b].mean(axis=0)
    else:
        profile = x[:, a:b].mean(axis=1)
    # pixel k is centred at k + 0.5
    centres = start + (np.arange(5) + 0.5) * width - 0.5
    centre = np.interp(centres, np.arange(profile.size), profile)
    bars = min(centre[0], centre[2], centre[4])
    gaps = max(centre[1], centre[3])
    if bars + gaps <= 0:
        return 0.0
    return float((bars - gaps) / (bars + gaps))


def element_contrasts(filtered, target) -> list:
    """[(lp_per_mm, contrast)] per element, worst orientation, ascending frequency."""
    per = {}
    for el in target.elements:
        c = bar_contrast(filtered, el)
        key = (el.group, el.element)
        per[key] = (el.lp_per_mm, min(c, per.get(key, (0, np.inf))[1]))
    return sorted(per.values())


def resolvable_frequency(model: ApertureModel, target, criterion: float = 0.1) -> float:
    """Highest line-pair frequency whose filtered bars beat ``criterion``.

    ``target`` is a :class:`spikit.fixtures.UsafTarget`; its physical extent
    overrides ``model.object_extent_mm``.  Returns 0.0 if nothing resolves.
    """
    if target.extent_mm != model.object_extent_mm:
        model = replace(model, object_extent_mm=target.extent_mm)
    filtered = aperture_filter(target.image, model)
    resolved = [lp for lp, c in element_contrasts(filtered, target) if c > criterion]
    return max(resolved, default=0.0)
