"""Probabilistic raster augmentation for rendered diagram images.

The pipeline runs a fixed stage list.  A "select one" group first rolls
its gate probability, then picks one member uniformly, then rolls that
member's own probability; the dropout group has no gate and goes straight
to the member pick.  All randomness comes from the caller's ``rng``, so a
seed fixes the output byte-for-byte.  Warps and dropouts fill with white,
the background color of rendered diagrams, and every transform returns an
image of the input's dimensions.

Only the probabilities and the listed limits are contractual; kernel
shapes and effect geometry (streak length, fog range, shadow darkness)
are documented choices of this implementation.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ConfigError, ParameterError

WHITE = (255, 255, 255)


@dataclass
class RasterImage:
    """Row-major RGB image, 8 bits per channel."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 3 or p.shape[2] != 3:
            raise ParameterError("image must be an (h, w, 3) array")
        if p.dtype != np.uint8:
            raise ParameterError("image must be 8-bit per channel")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ParameterError("image must be at least 1x1")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @classmethod
    def blank(cls, width: int, height: int, value: int = 255) -> "RasterImage":
        return cls(np.full((height, width, 3), value, dtype=np.uint8))

    @classmethod
    def read_png(cls, path) -> "RasterImage":
        data = cv2.imread(str(path), cv2.IMREAD_COLOR)
        if data is None:
            raise ParameterError(f"cannot read image: {path}")
        return cls(cv2.cvtColor(data, cv2.COLOR_BGR2RGB))

    def write_png(self, path) -> None:
        ok = cv2.imwrite(str(path), cv2.cvtColor(self.pixels, cv2.COLOR_RGB2BGR))
        if not ok:
            raise ParameterError(f"cannot write image: {path}")


@dataclass
class AugmentConfig:
    """Stage gates, member probabilities, and member limits."""

    blur_gate: float = 0.7
    motion_blur_p: float = 0.5
    median_blur_limit: int = 3
    median_blur_p: float = 0.5
    gaussian_blur_limit: tuple = (3, 5)
    gaussian_blur_p: float = 0.5

    color_gate: float = 0.9
    rgb_shift_limit: int = 80
    rgb_shift_p: float = 0.8
    hsv_shift_limits: tuple = (15, 25, 20)
    hsv_shift_p: float = 0.8

    brightness_limit: float = 0.4
    contrast_limit: float = 0.2
    brightness_contrast_p: float = 0.7

    geometry_gate: float = 0.3
    rotate_limit: float = 30.0
    rotate_p: float = 0.5
    ssr_shift: float = 0.1
    ssr_scale: float = 0.2
    ssr_rotate: float = 45.0
    ssr_p: float = 0.3

    # Stacked probabilities from the source listing: outer 0.2 gate, then
    # the member's own 0.5 roll (net 0.1).
    grid_distortion_gate: float = 0.2
    grid_distortion_p: float = 0.5

    perspective_scale: tuple = (0.01, 0.05)
    perspective_p: float = 0.4

    coarse_dropout_holes: int = 4
    coarse_dropout_size: int = 16
    coarse_dropout_p: float = 0.3
    grid_dropout_ratio: float = 0.2
    grid_dropout_p: float = 0.1

    weather_gate: float = 0.4
    rain_p: float = 0.3
    fog_p: float = 0.3
    shadow_p: float = 0.8

    clahe_p: float = 0.3
    sharpen_p: float = 0.3

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            if f.name.endswith(("_p", "_gate")):
                v = getattr(self, f.name)
                if not 0.0 <= v <= 1.0:
                    raise ConfigError(f"{f.name} must be in [0, 1], got {v}")
        if self.median_blur_limit < 3 or self.median_blur_limit % 2 == 0:
            raise ConfigError("median_blur_limit must be odd and >= 3")
        lo, hi = self.gaussian_blur_limit
        if lo < 3 or hi < lo or lo % 2 == 0 or hi % 2 == 0:
            raise ConfigError("gaussian_blur_limit must be odd bounds with lo <= hi")
        if not 0 <= self.rgb_shift_limit <= 255:
            raise ConfigError("rgb_shift_limit must be in [0, 255]")
        if any(v < 0 for v in self.hsv_shift_limits) or len(self.hsv_shift_limits) != 3:
            raise ConfigError("hsv_shift_limits must be three non-negative values")
        if self.coarse_dropout_holes < 1 or self.coarse_dropout_size < 1:
            raise ConfigError("coarse dropout needs at least one hole of size >= 1")
        if not 0.0 < self.grid_dropout_ratio <= 1.0:
            raise ConfigError("grid_dropout_ratio must be in (0, 1]")
        plo, phi = self.perspective_scale
        if plo < 0 or phi < plo:
            raise ConfigError("perspective_scale must be ordered non-negative bounds")

    @classmethod
    def zeroed(cls) -> "AugmentConfig":
        """A config whose every gate and probability is zero (identity)."""
        cfg = cls()
        for f in dataclasses.fields(cfg):
            if f.name.endswith(("_p", "_gate")):
                setattr(cfg, f.name, 0.0)
        return cfg

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "AugmentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown augmentation keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("gaussian_blur_limit", "hsv_shift_limits", "perspective_scale"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "AugmentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load augmentation config: {exc}") from exc


# --- individual transforms -------------------------------------------------


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParameterError(message)


def _odd_in(rng, lo: int, hi: int) -> int:
    choices = [k for k in range(lo, hi + 1) if k % 2 == 1]
    return choices[rng.randrange(len(choices))]


def _motion_blur(img, params, rng):
    k = params.get("length") or _odd_in(rng, 3, 7)
    _require(k >= 3 and k % 2 == 1, "motion blur length must be odd and >= 3")
    angle = params.get("angle")
    if angle is None:
        angle = rng.uniform(0.0, 180.0)
    kern = np.zeros((k, k), dtype=np.float32)
    c = k // 2
    dx, dy = math.cos(math.radians(angle)), math.sin(math.radians(angle))
    p1 = (int(round(c - dx * c)), int(round(c - dy * c)))
    p2 = (int(round(c + dx * c)), int(round(c + dy * c)))
    cv2.line(kern, p1, p2, 1.0, 1)
    kern /= max(kern.sum(), 1.0)
    return cv2.filter2D(img, -1, kern)


def _median_blur(img, params, rng):
    limit = params.get("limit", 3)
    _require(limit >= 3 and limit % 2 == 1, "median blur limit must be odd and >= 3")
    k = _odd_in(rng, 3, limit)
    return cv2.medianBlur(img, k)


def _gaussian_blur(img, params, rng):
    lo, hi = params.get("limit", (3, 5))
    _require(lo >= 3 and hi >= lo and lo % 2 == 1 and hi % 2 == 1,
             "gaussian blur limit must be odd bounds with lo <= hi")
    k = _odd_in(rng, lo, hi)
    return cv2.GaussianBlur(img, (k, k), 0)


def _rgb_shift(img, params, rng):
    limit = params.get("limit", 80)
    _require(0 <= limit <= 255, "rgb shift limit must be in [0, 255]")
    offsets = np.array([rng.randint(-limit, limit) for _ in range(3)], dtype=np.int16)
    out = img.astype(np.int16) + offsets[None, None, :]
    return np.clip(out, 0, 255).astype(np.uint8)


def _hsv_shift(img, params, rng):
    lh, ls, lv = params.get("limits", (15, 25, 20))
    _require(min(lh, ls, lv) >= 0, "hsv shift limits must be non-negative")
    hsv = cv2.cvtColor(img, cv2.COLOR_RGB2HSV).astype(np.int16)
    hsv[..., 0] = (hsv[..., 0] + rng.randint(-lh, lh)) % 180
    hsv[..., 1] = np.clip(hsv[..., 1] + rng.randint(-ls, ls), 0, 255)
    hsv[..., 2] = np.clip(hsv[..., 2] + rng.randint(-lv, lv), 0, 255)
    return cv2.cvtColor(hsv.astype(np.uint8), cv2.COLOR_HSV2RGB)


def _brightness_contrast(img, params, rng):
    brightness = params.get("brightness", 0.4)
    contrast = params.get("contrast", 0.2)
    _require(brightness >= 0 and contrast >= 0, "limits must be non-negative")
    alpha = 1.0 + rng.uniform(-contrast, contrast)
    beta = 255.0 * rng.uniform(-brightness, brightness)
    out = img.astype(np.float32) * alpha + beta
    return np.clip(out, 0, 255).astype(np.uint8)


def _rotate(img, params, rng):
    limit = params.get("limit", 30.0)
    _require(limit >= 0, "rotate limit must be non-negative")
    angle = rng.uniform(-limit, limit)
    h, w = img.shape[:2]
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), angle, 1.0)
    return cv2.warpAffine(img, m, (w, h), flags=cv2.INTER_LINEAR,
                          borderMode=cv2.BORDER_CONSTANT, borderValue=WHITE)


def _shift_scale_rotate(img, params, rng):
    shift = params.get("shift", 0.1)
    scale = params.get("scale", 0.2)
    limit = params.get("rotate", 45.0)
    _require(shift >= 0 and scale >= 0 and limit >= 0, "limits must be non-negative")
    h, w = img.shape[:2]
    angle = rng.uniform(-limit, limit)
    factor = 1.0 + rng.uniform(-scale, scale)
    dx = rng.uniform(-shift, shift) * w
    dy = rng.uniform(-shift, shift) * h
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), angle, factor)
    m[0, 2] += dx
    m[1, 2] += dy
    return cv2.warpAffine(img, m, (w, h), flags=cv2.INTER_LINEAR,
                          borderMode=cv2.BORDER_CONSTANT, borderValue=WHITE)


def _grid_distortion(img, params, rng):
    steps = params.get("steps", 5)
    limit = params.get("limit", 0.3)
    _require(steps >= 2 and 0 <= limit < 1, "need steps >= 2 and limit in [0, 1)")
    h, w = img.shape[:2]

    def axis_map(size):
        ideal = np.linspace(0, size, steps + 1)
        widths = np.diff(ideal) * np.array(
            [1.0 + rng.uniform(-limit, limit) for _ in range(steps)])
        bounds = np.concatenate([[0.0], np.cumsum(widths)])
        bounds *= size / bounds[-1]  # keep the full image on the canvas
        return np.interp(np.arange(size), ideal, bounds).astype(np.float32)

    map_x = np.tile(axis_map(w), (h, 1))
    map_y = np.tile(axis_map(h)[:, None], (1, w))
    return cv2.remap(img, map_x, map_y, interpolation=cv2.INTER_LINEAR,
                     borderMode=cv2.BORDER_CONSTANT, borderValue=WHITE)


def _perspective(img, params, rng):
    lo, hi = params.get("scale", (0.01, 0.05))
    _require(0 <= lo <= hi, "perspective scale bounds must be ordered and non-negative")
    h, w = img.shape[:2]
    s = rng.uniform(lo, hi)
    src = np.array([[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]], dtype=np.float32)
    jitter = np.array(
        [[rng.uniform(-s, s) * w, rng.uniform(-s, s) * h] for _ in range(4)],
        dtype=np.float32)
    m = cv2.getPerspectiveTransform(src, src + jitter)
    return cv2.warpPerspective(img, m, (w, h), flags=cv2.INTER_LINEAR,
                               borderMode=cv2.BORDER_CONSTANT, borderValue=WHITE)


def _coarse_dropout(img, params, rng):
    holes = params.get("holes", 4)
    size = params.get("size", 16)
    _require(holes >= 1 and size >= 1, "need at least one hole of size >= 1")
    h, w = img.shape[:2]
    out = img.copy()
    side_y, side_x = min(size, h), min(size, w)
    for _ in range(holes):
        y = rng.randrange(h - side_y + 1)
        x = rng.randrange(w - side_x + 1)
        out[y:y + side_y, x:x + side_x] = 255
    return out


def _grid_dropout(img, params, rng):
    ratio = params.get("ratio", 0.2)
    _require(0 < ratio <= 1, "grid dropout ratio must be in (0, 1]")
    h, w = img.shape[:2]
    cell = max(2, min(h, w) // 8)
    hole = max(1, int(cell * ratio))
    off_y, off_x = rng.randrange(cell), rng.randrange(cell)
    out = img.copy()
    for y in range(off_y, h, cell):
        for x in range(off_x, w, cell):
            out[y:y + hole, x:x + hole] = 255
    return out


def _rain(img, params, rng):
    h, w = img.shape[:2]
    slant = rng.uniform(-10, 10)
    length = params.get("length", 15)
    _require(length >= 1, "rain streak length must be >= 1")
    drops = max(1, (h * w) // 600)
    out = img.copy()
    for _ in range(drops):
        x, y = rng.randrange(w), rng.randrange(h)
        cv2.line(out, (x, y), (int(x + slant), y + length), (200, 200, 200), 1)
    return out


def _fog(img, params, rng):
    lo, hi = params.get("coef", (0.1, 0.3))
    _require(0 <= lo <= hi <= 1, "fog coefficient bounds must lie in [0, 1]")
    coef = rng.uniform(lo, hi)
    out = img.astype(np.float32) * (1 - coef) + 255.0 * coef
    return np.clip(out, 0, 255).astype(np.uint8)


def _shadow(img, params, rng):
    darkness = params.get("darkness", 0.5)
    _require(0 <= darkness <= 1, "shadow darkness must be in [0, 1]")
    h, w = img.shape[:2]
    x1 = rng.randrange(w)
    x2 = rng.randrange(w)
    quad = np.array([
        [min(x1, x2), 0], [max(x1, x2), 0],
        [min(w - 1, max(x1, x2) + rng.randrange(w // 4 + 1)), h - 1],
        [max(0, min(x1, x2) - rng.randrange(w // 4 + 1)), h - 1],
    ], dtype=np.int32)
    mask = np.zeros((h, w), dtype=np.uint8)
    cv2.fillPoly(mask, [quad], 255)
    out = img.astype(np.float32)
    out[mask == 255] *= (1 - darkness)
    return np.clip(out, 0, 255).astype(np.uint8)


def _clahe(img, params, rng):
    clip = params.get("clip", 4.0)
    tiles = params.get("tiles", 8)
    _require(clip > 0 and tiles >= 1, "clahe needs positive clip and tile count")
    lab = cv2.cvtColor(img, cv2.COLOR_RGB2LAB)
    eq = cv2.createCLAHE(clipLimit=clip, tileGridSize=(tiles, tiles))
    lab[..., 0] = eq.apply(lab[..., 0])
    return cv2.cvtColor(lab, cv2.COLOR_LAB2RGB)


def _sharpen(img, params, rng):
    lo, hi = params.get("alpha", (0.2, 0.5))
    _require(0 <= lo <= hi <= 1, "sharpen alpha bounds must lie in [0, 1]")
    alpha = rng.uniform(lo, hi)
    kern = np.array([[-1, -1, -1], [-1, 9, -1], [-1, -1, -1]], dtype=np.float32)
    sharp = cv2.filter2D(img, -1, kern)
    out = img.astype(np.float32) * (1 - alpha) + sharp.astype(np.float32) * alpha
    return np.clip(out, 0, 255).astype(np.uint8)


_TRANSFORMS = {
    "motion_blur": _motion_blur,
    "median_blur": _median_blur,
    "gaussian_blur": _gaussian_blur,
    "rgb_shift": _rgb_shift,
    "hsv_shift": _hsv_shift,
    "brightness_contrast": _brightness_contrast,
    "rotate": _rotate,
    "shift_scale_rotate": _shift_scale_rotate,
    "grid_distortion": _grid_distortion,
    "perspective": _perspective,
    "coarse_dropout": _coarse_dropout,
    "grid_dropout": _grid_dropout,
    "rain": _rain,
    "fog": _fog,
    "shadow": _shadow,
    "clahe": _clahe,
    "sharpen": _sharpen,
}

TRANSFORM_KINDS = tuple(sorted(_TRANSFORMS))


def apply_transform(kind: str, params: dict, img: RasterImage,
                    rng: random.Random) -> RasterImage:
    """Apply one named transform; limits come from ``params``, draws from ``rng``."""
    fn = _TRANSFORMS.get(kind)
    if fn is None:
        raise ParameterError(f"unknown transform {kind!r}")
    return RasterImage(fn(img.pixels, params or {}, rng))


def augment(img: RasterImage, cfg: AugmentConfig, rng: random.Random,
            events: list | None = None) -> RasterImage:
    """Run the full augmentation stage list on one image.

    ``events`` (optional) collects ("gate", group), ("select", kind) and
    ("apply", kind) tuples for calibration measurements.
    """
    cfg.validate()

    def note(tag, name):
        if events is not None:
            events.append((tag, name))

    out = img

    def run(kind, params):
        nonlocal out
        note("apply", kind)
        out = apply_transform(kind, params, out, rng)

    # Blur group.
    if rng.random() < cfg.blur_gate:
        note("gate", "blur")
        members = (
            ("motion_blur", cfg.motion_blur_p, {}),
            ("median_blur", cfg.median_blur_p, {"limit": cfg.median_blur_limit}),
            ("gaussian_blur", cfg.gaussian_blur_p, {"limit": cfg.gaussian_blur_limit}),
        )
        kind, p, params = members[rng.randrange(len(members))]
        note("select", kind)
        if rng.random() < p:
            run(kind, params)

    # Color group.
    if rng.random() < cfg.color_gate:
        note("gate", "color")
        members = (
            ("rgb_shift", cfg.rgb_shift_p, {"limit": cfg.rgb_shift_limit}),
            ("hsv_shift", cfg.hsv_shift_p, {"limits": cfg.hsv_shift_limits}),
        )
        kind, p, params = members[rng.randrange(len(members))]
        note("select", kind)
        if rng.random() < p:
            run(kind, params)

    # Brightness/contrast.
    note("select", "brightness_contrast")
    if rng.random() < cfg.brightness_contrast_p:
        run("brightness_contrast",
            {"brightness": cfg.brightness_limit, "contrast": cfg.contrast_limit})

    # Geometry group.
    if rng.random() < cfg.geometry_gate:
        note("gate", "geometry")
        members = (
            ("rotate", cfg.rotate_p, {"limit": cfg.rotate_limit}),
            ("shift_scale_rotate", cfg.ssr_p,
             {"shift": cfg.ssr_shift, "scale": cfg.ssr_scale, "rotate": cfg.ssr_rotate}),
        )
        kind, p, params = members[rng.randrange(len(members))]
        note("select", kind)
        if rng.random() < p:
            run(kind, params)

    # Grid distortion behind its own outer gate.
    if rng.random() < cfg.grid_distortion_gate:
        note("gate", "grid_distortion")
        note("select", "grid_distortion")
        if rng.random() < cfg.grid_distortion_p:
            run("grid_distortion", {})

    # Perspective.
    note("select", "perspective")
    if rng.random() < cfg.perspective_p:
        run("perspective", {"scale": cfg.perspective_scale})

    # Dropout group: no gate, straight to the member pick.
    members = (
        ("coarse_dropout", cfg.coarse_dropout_p,
         {"holes": cfg.coarse_dropout_holes, "size": cfg.coarse_dropout_size}),
        ("grid_dropout", cfg.grid_dropout_p, {"ratio": cfg.grid_dropout_ratio}),
    )
    kind, p, params = members[rng.randrange(len(members))]
    note("select", kind)
    if rng.random() < p:
        run(kind, params)

    # Weather group.
    if rng.random() < cfg.weather_gate:
        note("gate", "weather")
        members = (
            ("rain", cfg.rain_p, {}),
            ("fog", cfg.fog_p, {}),
            ("shadow", cfg.shadow_p, {}),
        )
        kind, p, params = members[rng.randrange(len(members))]
        note("select", kind)
        if rng.random() < p:
            run(kind, params)

    # Final optional filters.
    note("select", "clahe")
    if rng.random() < cfg.clahe_p:
        run("clahe", {})
    note("select", "sharpen")
    if rng.random() < cfg.sharpen_p:
        run("sharpen", {})

    return out
