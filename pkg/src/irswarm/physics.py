"""IR physical layer: lobe shapes, the distance-to-ADC curve, noise and ambient light."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

ADC_MAX = 255
GRAY = 0.6
WHITE = 1.0


@dataclass(frozen=True)
class RadiationPattern:
    """Raised-cosine main lobe with a flat side floor.

    ``lobe_exponent = 0`` gives a flat-top sector, used for idealised channels.
    """

    half_angle: float = 30.0
    lobe_exponent: float = 1.0
    side_floor: float = 0.05
    side_extent: Optional[float] = None

    def __post_init__(self):
        if self.half_angle <= 0:
            raise ValueError("half_angle must be positive")
        if self.lobe_exponent < 0:
            raise ValueError("lobe_exponent must be non-negative")
        if not 0.0 <= self.side_floor <= 0.1:
            raise ValueError("side_floor must lie in [0, 0.1]")
        if self.side_extent is None:
            object.__setattr__(self, "side_extent", 2.0 * self.half_angle)
        if self.side_extent < self.half_angle:
            raise ValueError("side_extent must be at least half_angle")

    def gain(self, offset: float) -> float:
        return pattern_gain(self, offset)


def pattern_gain(pattern: RadiationPattern, offset: float) -> float:
    """Relative intensity at ``offset`` degrees from the lobe axis."""
    x = abs(offset)
    if x > pattern.side_extent:
        return 0.0
    if pattern.lobe_exponent == 0:
        # flat-top sector: the main lobe is closed so adjacent sectors tile
        return 1.0 if x <= pattern.half_angle else pattern.side_floor
    if x >= pattern.half_angle:
        return pattern.side_floor
    c = math.cos(math.radians(90.0 * x / pattern.half_angle))
    return pattern.side_floor + (1.0 - pattern.side_floor) * c ** pattern.lobe_exponent


# Narrow emitter used by the front distance sensor (about 20 degrees full angle).
SENSOR_EMITTER = RadiationPattern(half_angle=10.0, lobe_exponent=1.0, side_floor=0.05)
# Very narrow receiver preset.
NARROW_RECEIVER = RadiationPattern(half_angle=10.0, lobe_exponent=2.0, side_floor=0.0)


DEFAULT_BANDS = ((20.0, 70.0, 1.0), (70.0, 120.0, 4.0), (120.0, 200.0, 10.0), (200.0, 300.0, 50.0))


@dataclass(frozen=True)
class AdcModel:
    """Inverse-power reflective transfer curve.

    ``adc = clamp(round(scale * refl * cos(inc) / (d + offset_distance) ** decay_exponent))``
    With the defaults the white curve saturates at 20 mm and first reads 0 at 300 mm.
    """

    offset_distance: float = 200.0
    decay_exponent: float = 7.6
    adc_bits: int = 8
    saturation_distance: float = 20.0
    noise_bands: tuple = DEFAULT_BANDS
    scale: Optional[float] = None

    def __post_init__(self):
        if self.scale is None:
            object.__setattr__(
                self, "scale",
                self.adc_max * (self.saturation_distance + self.offset_distance) ** self.decay_exponent)

    @property
    def adc_max(self) -> int:
        return (1 << self.adc_bits) - 1

    def continuous(self, distance, reflectivity=1.0, cos_inc=1.0):
        """Noise-free, unquantised, unclamped reading (works on arrays)."""
        d = np.asarray(distance, dtype=np.float64)
        return self.scale * reflectivity * cos_inc / (d + self.offset_distance) ** self.decay_exponent

    def quantize(self, value):
        """Round and clamp continuous readings onto the ADC scale."""
        v = np.clip(np.round(np.asarray(value, dtype=np.float64)), 0, self.adc_max)
        return v.astype(np.int64)


def noise_sigma(model: AdcModel, distance: float) -> float:
    """Standard deviation (mm) of a distance reading at ``distance``."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    bands = model.noise_bands
    if distance < bands[0][0]:
        return bands[0][2]
    for lo, hi, sigma in bands:
        if lo <= distance < hi:
            return sigma
    return bands[-1][2]


def adc_from_distance(model: AdcModel, distance: float, reflectivity: float = 1.0,
                      ambient: float = 0.0, rng: Optional[np.random.Generator] = None,
                      incidence: float = 0.0, ambient_model: Optional["AmbientModel"] = None,
                      direct_light: bool = False) -> int:
    """ADC reading of a reflecting surface at ``distance``.

    With ``rng=None`` the curve is deterministic. Otherwise the distance is
    perturbed by the band noise before being pushed through the curve.
    """
    if distance <= 0:
        raise ValueError("distance must be positive")
    d = distance
    if rng is not None:
        d = d + rng.normal(0.0, noise_sigma(model, distance))
        # a perturbed reading cannot come from behind the sensor
        d = max(d, 1e-3)
    value = model.continuous(d, reflectivity, math.cos(math.radians(incidence)))
    raw = int(model.quantize(value))
    if ambient > 0.0:
        raw = apply_ambient(ambient_model or AmbientModel(), raw, ambient, direct_light)
    return raw


def distance_from_adc(model: AdcModel, adc, assumed_reflectivity: float = 1.0) -> Optional[float]:
    """Invert the noise-free curve. Returns None for a zero reading."""
    if adc <= 0:
        return None
    if adc >= model.adc_max:
        return model.saturation_distance
    d = (model.scale * assumed_reflectivity / adc) ** (1.0 / model.decay_exponent) - model.offset_distance
    return max(d, model.saturation_distance)


def sample_recovered(model: AdcModel, distance: float, n: int, rng: np.random.Generator,
                     reflectivity: float = 1.0) -> np.ndarray:
    """Vectorised noisy reading then inversion; NaN marks out-of-range draws."""
    d = distance + rng.normal(0.0, noise_sigma(model, distance), size=n)
    d = np.maximum(d, 1e-3)
    adc = model.quantize(model.continuous(d, reflectivity))
    out = np.full(n, np.nan)
    ok = adc > 0
    inv = (model.scale * reflectivity / np.maximum(adc, 1)) ** (1.0 / model.decay_exponent) - model.offset_distance
    out[ok] = np.maximum(inv[ok], model.saturation_distance)
    out[adc >= model.adc_max] = model.saturation_distance
    return out


@dataclass(frozen=True)
class AmbientModel:
    """Three ambient distortions: blinding, sensitivity loss and contrast loss."""

    saturation_threshold: float = 0.8
    sensitivity_loss: float = 0.3
    contrast_loss: float = 0.2
    mid_level: float = 127.5

    def __post_init__(self):
        if not 0.0 < self.saturation_threshold <= 1.0:
            raise ValueError("saturation_threshold must lie in (0, 1]")


def apply_ambient(ambient_model: AmbientModel, raw_adc: int, ambient: float,
                  direct_light: bool = False) -> int:
    """Distort a raw ADC value by ambient light of level ``ambient``."""
    if not 0 <= raw_adc <= ADC_MAX:
        raise ValueError("raw_adc must lie in [0, 255]")
    if ambient == 0.0:
        return raw_adc
    if direct_light and ambient >= ambient_model.saturation_threshold:
        return ADC_MAX
    v = raw_adc * max(0.0, 1.0 - ambient_model.sensitivity_loss * ambient)
    c = min(1.0, ambient_model.contrast_loss * ambient)
    v = v * (1.0 - c) + ambient_model.mid_level * c
    return int(min(ADC_MAX, max(0, round(v))))
