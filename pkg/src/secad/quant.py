"""8-bit parameter quantization.

Every geometric parameter in a CAD sequence is stored as an integer level in
``[0, 255]``. Four value ranges share the same level grid:

* signed coordinates in ``[-1, 1]`` (sketch points, plane origins),
* unit magnitudes in ``[0, 1]`` (extrusion extents, sketch scale, radii),
* plane Euler angles in ``[-pi, pi]``,
* arc sweep angles in ``[0, 2*pi]``.

Quantization rounds half away from zero and clamps out-of-range input; the
round trip ``dequantize(quantize(v))`` is therefore within half a level
(``1/255`` of the value range) for in-range ``v``.
"""

from __future__ import annotations

import math

LEVEL_MAX = 255


def _round_half_away(x: float) -> int:
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def quantize(value: float) -> int:
    """Map a coordinate in ``[-1, 1]`` to a level in ``[0, 255]``."""
    v = min(1.0, max(-1.0, float(value)))
    return _round_half_away((v + 1.0) * 0.5 * LEVEL_MAX)


def dequantize(level: int) -> float:
    """Map a level in ``[0, 255]`` back to a coordinate in ``[-1, 1]``."""
    _check_level(level)
    return 2.0 * level / LEVEL_MAX - 1.0


def quantize_unit(value: float) -> int:
    """Map a magnitude in ``[0, 1]`` to a level in ``[0, 255]``."""
    v = min(1.0, max(0.0, float(value)))
    return _round_half_away(v * LEVEL_MAX)


def dequantize_unit(level: int) -> float:
    _check_level(level)
    return level / LEVEL_MAX


def quantize_angle(value: float) -> int:
    """Map an Euler angle in ``[-pi, pi]`` to a level."""
    return quantize(value / math.pi)


def dequantize_angle(level: int) -> float:
    return dequantize(level) * math.pi


def quantize_sweep(value: float) -> int:
    """Map an arc sweep angle in ``[0, 2*pi]`` to a level."""
    return quantize_unit(value / (2.0 * math.pi))


def dequantize_sweep(level: int) -> float:
    return dequantize_unit(level) * 2.0 * math.pi


def _check_level(level: int) -> None:
    if not isinstance(level, int) or isinstance(level, bool):
        raise TypeError(f"quantization level must be an int, got {type(level).__name__}")
    if not 0 <= level <= LEVEL_MAX:
        raise ValueError(f"quantization level {level} outside [0, {LEVEL_MAX}]")
