"""Rendering and synthetic chromatic/geometric distortion.

Pixel (i, j) covers [j, j+1) x [i, i+1) in image coordinates, so its center
is (j + 0.5, i + 0.5). Grid coordinates use the same convention at module
scale. ``RasterImage.homography`` maps grid -> image and is updated by every
geometric operation, which gives each synthetic frame exact ground truth.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidParameter
from .symbology import HiqSymbol
from .symbology import container as symbol_container
from .symbology.symbol import DEFAULT_SEED, encode


@dataclass(frozen=True)
class RasterImage:
    pixels: np.ndarray  # (H, W, 3) float in [0, 1]
    homography: np.ndarray | None = None  # grid -> image
    labels: np.ndarray | None = None  # (dim, dim) class per module, -1 on painted patterns
    module_px: int | None = None
    quiet: int | None = None

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def with_pixels(self, pixels: np.ndarray, **changes) -> "RasterImage":
        return replace(self, pixels=np.clip(pixels, 0.0, 1.0), **changes)


# --- sampling ------------------------------------------------------------------

def bilinear_sample(pixels: np.ndarray, x: np.ndarray, y: np.ndarray, fill=None) -> np.ndarray:
    """Sample (H, W, C) pixels at continuous image coordinates.

    Points more than half a pixel outside the image take ``fill`` when given,
    otherwise the nearest edge value.
    """
    h, w = pixels.shape[:2]
    u = np.asarray(x, dtype=float) - 0.5
    v = np.asarray(y, dtype=float) - 0.5
    j0 = np.floor(u).astype(np.int64)
    i0 = np.floor(v).astype(np.int64)
    fu = (u - j0)[..., None]
    fv = (v - i0)[..., None]
    j0c, j1c = np.clip(j0, 0, w - 1), np.clip(j0 + 1, 0, w - 1)
    i0c, i1c = np.clip(i0, 0, h - 1), np.clip(i0 + 1, 0, h - 1)
    out = (
        pixels[i0c, j0c] * (1 - fu) * (1 - fv)
        + pixels[i0c, j1c] * fu * (1 - fv)
        + pixels[i1c, j0c] * (1 - fu) * fv
        + pixels[i1c, j1c] * fu * fv
    )
    if fill is not None:
        outside = (u < -0.5) | (u > w - 0.5) | (v < -0.5) | (v > h - 0.5)
        out[outside] = fill
    return out


def apply_homography(H: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = H[2, 0] * x + H[2, 1] * y + H[2, 2]
    return (H[0, 0] * x + H[0, 1] * y + H[0, 2]) / z, (H[1, 0] * x + H[1, 1] * y + H[1, 2]) / z


# --- rendering -----------------------------------------------------------------

def rasterize_grid(colors: np.ndarray, module_px: int, quiet: int) -> np.ndarray:
    dim = colors.shape[0]
    full = np.ones((dim + 2 * quiet, dim + 2 * quiet, 3))
    full[quiet:quiet + dim, quiet:quiet + dim] = colors
    return np.repeat(np.repeat(full, module_px, axis=0), module_px, axis=1)


def render_homography(module_px: int, quiet: int) -> np.ndarray:
    s = float(module_px)
    return np.array([[s, 0.0, quiet * s], [0.0, s, quiet * s], [0.0, 0.0, 1.0]])


def symbol_labels(symbol: HiqSymbol) -> np.ndarray:
    labels = symbol.classes().astype(np.int64)
    labels[symbol.pattern_mask()] = -1
    return labels


def render(symbol: HiqSymbol, module_px: int = 4, quiet_modules: int = 4,
           colors: np.ndarray | None = None) -> RasterImage:
    """Draw every module as a module_px square of its color inside a white quiet zone."""
    if module_px < 2:
        raise InvalidParameter("module_px must be >= 2")
    if quiet_modules < 0:
        raise InvalidParameter("quiet_modules must be >= 0")
    if colors is None:
        colors = symbol.module_colors()
    return RasterImage(
        pixels=rasterize_grid(colors, module_px, quiet_modules),
        homography=render_homography(module_px, quiet_modules),
        labels=symbol_labels(symbol),
        module_px=module_px,
        quiet=quiet_modules,
    )


# --- chromatic distortion -----------------------------------------------------

def _check_alpha(alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (5,) or (a < 0).any() or abs(a.sum() - 1.0) > 1e-9:
        raise InvalidParameter(f"CMI weights must be 5 nonnegative values summing to 1, got {alpha!r}")
    return a


def cmi_grid(colors: np.ndarray, alpha) -> np.ndarray:
    """Module-level cross-module interference: weights (center, top, bottom, left, right)."""
    a = _check_alpha(alpha)
    padded = np.pad(colors, ((1, 1), (1, 1), (0, 0)), mode="edge")
    c = padded[1:-1, 1:-1]
    return (
        a[0] * c
        + a[1] * padded[:-2, 1:-1]
        + a[2] * padded[2:, 1:-1]
        + a[3] * padded[1:-1, :-2]
        + a[4] * padded[1:-1, 2:]
    )


def apply_cmi(img: RasterImage, symbol: HiqSymbol, alpha) -> RasterImage:
    """Mix each module with its 4 neighbors on the module grid, then re-rasterize."""
    if img.module_px is None or img.quiet is None:
        raise InvalidParameter("apply_cmi needs an image produced by render()")
    mixed = cmi_grid(symbol.module_colors(), alpha)
    return img.with_pixels(rasterize_grid(mixed, img.module_px, img.quiet))


def apply_cci(img: RasterImage, matrix, offset=(0.0, 0.0, 0.0)) -> RasterImage:
    """Cross-channel interference: p' = clamp(M p + offset)."""
    M = np.asarray(matrix, dtype=float)
    if M.shape != (3, 3) or abs(np.linalg.det(M)) < 1e-12:
        raise InvalidParameter("CCI matrix must be an invertible 3x3 matrix")
    return img.with_pixels(img.pixels @ M.T + np.asarray(offset, dtype=float))


def _gradient_field(h: int, w: int, gradient) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gradient, dtype=float))
    if g.size == 1:
        g = np.array([g[0], 0.0])
    xs = (np.arange(w) + 0.5) / w - 0.5
    ys = (np.arange(h) + 0.5) / h - 0.5
    return 1.0 + g[0] * xs[None, :] + g[1] * ys[:, None]


def apply_illumination(img: RasterImage, gains, gradient=0.0) -> RasterImage:
    """p'_c = clamp(g_c (1 + gradient . position) p_c), position centered on the image."""
    g = np.asarray(gains, dtype=float)
    if g.shape != (3,) or (g <= 0).any():
        raise InvalidParameter("illumination gains must be 3 positive values")
    field_ = _gradient_field(img.height, img.width, gradient)
    return img.with_pixels(img.pixels * g * field_[..., None])


def illuminate_grid(colors: np.ndarray, gains) -> np.ndarray:
    return colors * np.asarray(gains, dtype=float)


# --- geometric distortion and noise ----------------------------------------------

def apply_warp(img: RasterImage, H, fill=(1.0, 1.0, 1.0)) -> RasterImage:
    """Perspective warp by H (source image -> destination image), inverse-mapped bilinear."""
    H = np.asarray(H, dtype=float)
    if H.shape != (3, 3) or abs(np.linalg.det(H)) < 1e-12:
        raise InvalidParameter("warp must be an invertible 3x3 matrix")
    if np.allclose(H / H[2, 2], np.eye(3)):
        return img
    Hinv = np.linalg.inv(H)
    ys, xs = np.mgrid[0:img.height, 0:img.width]
    sx, sy = apply_homography(Hinv, xs + 0.5, ys + 0.5)
    out = bilinear_sample(img.pixels, sx, sy, fill=np.asarray(fill, dtype=float))
    gt = H @ img.homography if img.homography is not None else None
    return img.with_pixels(out, homography=gt)


def add_noise(img: RasterImage, sigma, seed: int | np.random.Generator = 0) -> RasterImage:
    s = np.broadcast_to(np.asarray(sigma, dtype=float), (3,))
    if (s < 0).any():
        raise InvalidParameter("noise sigma must be >= 0")
    if not s.any():
        return img
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return img.with_pixels(img.pixels + rng.normal(size=img.pixels.shape) * s)


def add_blur(img: RasterImage, sigma: float) -> RasterImage:
    if sigma < 0:
        raise InvalidParameter("blur sigma must be >= 0")
    if sigma == 0:
        return img
    out = ndimage.gaussian_filter(img.pixels, sigma=(sigma, sigma, 0), mode="nearest")
    return img.with_pixels(out)


# --- profiles and presets -------------------------------------------------------

IDENTITY3 = np.eye(3)
DEFAULT_CCI = ((0.9, 0.1, 0.0), (0.1, 0.85, 0.05), (0.0, 0.1, 0.9))

# lighting presets: per-channel gains and spatial gradient
PRESETS = {
    "incandescent": {"gains": (1.0, 0.85, 0.6), "gradient": (0.0, 0.0)},
    "fluorescent": {"gains": (0.92, 1.0, 0.95), "gradient": (0.0, 0.0)},
    "outdoor": {"gains": (0.97, 0.98, 1.0), "gradient": (0.1, 0.0)},
    "shadowed": {"gains": (0.6, 0.6, 0.65), "gradient": (0.3, 0.2)},
}


@dataclass
class DistortionProfile:
    cci_matrix: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    cci_offset: tuple = (0.0, 0.0, 0.0)
    gains: tuple = (1.0, 1.0, 1.0)
    gradient: tuple = (0.0, 0.0)
    cmi_weights: tuple = (1.0, 0.0, 0.0, 0.0, 0.0)
    warp: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    noise_sigma: tuple = (0.0, 0.0, 0.0)
    blur_sigma: float = 0.0
    preset: str = "none"

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "DistortionProfile":
        def tup(v):
            return tuple(tup(x) for x in v) if isinstance(v, (list, tuple)) else v

        return cls(**{k: tup(v) for k, v in d.items()})


def distort(img: RasterImage, symbol: HiqSymbol, profile: DistortionProfile,
            seed: int | np.random.Generator = 0) -> RasterImage:
    """Apply CMI -> CCI -> warp -> illumination -> blur -> noise.

    Illumination comes after the warp so the area uncovered by the warp is lit
    like the rest of the scene.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = img
    if tuple(profile.cmi_weights) != (1.0, 0.0, 0.0, 0.0, 0.0):
        out = apply_cmi(out, symbol, profile.cmi_weights)
    out = apply_cci(out, profile.cci_matrix, profile.cci_offset)
    out = apply_warp(out, profile.warp)
    out = apply_illumination(out, profile.gains, profile.gradient)
    out = add_blur(out, profile.blur_sigma)
    out = add_noise(out, profile.noise_sigma, rng)
    return out


# --- corpus ---------------------------------------------------------------------

@dataclass
class CorpusSpec:
    """Ranges the corpus generator draws from; every range is (low, high)."""

    versions: tuple = (10,)
    n_layers: int = 3
    ec_levels: str = "L"
    module_px: int = 4
    quiet: int = 4
    presets: tuple = ("incandescent", "fluorescent", "outdoor", "shadowed")
    alpha_center: tuple = (1.0, 1.0)
    cci_strength: tuple = (0.0, 1.0)
    noise_sigma: tuple = (0.0, 0.02)
    blur_sigma: tuple = (0.0, 0.0)
    perspective: tuple = (0.0, 0.02)
    rotation_deg: tuple = (-3.0, 3.0)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusSpec":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


# ~0.6M labeled modules need 65 images at dim 177: 65 x 177^2 = 2.04M modules
TRAINING_SPEC = CorpusSpec(versions=(40,), alpha_center=(0.6, 1.0))
TRAINING_COUNT = 65


@dataclass
class CorpusItem:
    index: int
    image: RasterImage
    symbol: HiqSymbol
    profile: DistortionProfile
    payload: bytes

    @property
    def labels(self) -> np.ndarray:
        return self.image.labels

    @property
    def homography(self) -> np.ndarray:
        return self.image.homography


def _random_alpha(rng: np.random.Generator, lo: float, hi: float) -> tuple:
    center = float(rng.uniform(lo, hi))
    if center >= 1.0:
        return (1.0, 0.0, 0.0, 0.0, 0.0)
    split = rng.dirichlet(np.full(4, 8.0)) * (1.0 - center)
    a = np.concatenate([[center], split])
    a[0] = 1.0 - a[1:].sum()
    return tuple(float(x) for x in a)


def random_warp(rng: np.random.Generator, width: int, height: int,
                perspective: float, rotation_deg: float) -> np.ndarray:
    """Small rotation about the center plus random corner jitter of up to ``perspective`` x size.

    The moved quad is shrunk toward the center until it fits the canvas, so
    nothing of the source image is cut off.
    """
    from .geometry import homography_from_points

    cx, cy = width / 2, height / 2
    th = np.deg2rad(rotation_deg)
    corners = np.array([[0, 0], [width, 0], [width, height], [0, height]], dtype=float)
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    moved = (corners - [cx, cy]) @ rot.T
    moved += rng.uniform(-perspective, perspective, size=(4, 2)) * [width, height]
    reach = np.abs(moved).max(axis=0)
    moved = moved * min(1.0, cx / reach[0], cy / reach[1]) + [cx, cy]
    return homography_from_points(corners, moved)


def _draw(rng: np.random.Generator, lohi) -> float:
    lo, hi = lohi
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def make_profile(spec: CorpusSpec, rng: np.random.Generator, width: int, height: int) -> DistortionProfile:
    preset = spec.presets[int(rng.integers(len(spec.presets)))] if spec.presets else "none"
    light = PRESETS.get(preset, {"gains": (1.0, 1.0, 1.0), "gradient": (0.0, 0.0)})
    strength = _draw(rng, spec.cci_strength)
    cci = (1 - strength) * IDENTITY3 + strength * np.asarray(DEFAULT_CCI)
    warp = random_warp(rng, width, height, _draw(rng, spec.perspective), _draw(rng, spec.rotation_deg))
    noise = _draw(rng, spec.noise_sigma)
    return DistortionProfile(
        cci_matrix=tuple(map(tuple, cci.tolist())),
        gains=tuple(light["gains"]),
        gradient=tuple(light["gradient"]),
        cmi_weights=_random_alpha(rng, *spec.alpha_center),
        warp=tuple(map(tuple, warp.tolist())),
        noise_sigma=(noise, noise, noise),
        blur_sigma=_draw(rng, spec.blur_sigma),
        preset=preset,
    )


def synth_item(spec: CorpusSpec, index: int, seed: int) -> CorpusItem:
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    version = int(spec.versions[int(rng.integers(len(spec.versions)))])
    levels = [spec.ec_levels] * spec.n_layers if len(spec.ec_levels) == 1 else spec.ec_levels.split(",")
    from .ecc import block_layout

    cap = sum(block_layout(version, lv).max_payload for lv in levels)
    payload = rng.integers(0, 256, size=cap, dtype=np.uint8).tobytes()
    symbol = encode(payload, spec.n_layers, levels, version,
                    seed=int(rng.integers(2**63)), randomized=True)
    clean = render(symbol, spec.module_px, spec.quiet)
    profile = make_profile(spec, rng, clean.width, clean.height)
    image = distort(clean, symbol, profile, rng)
    return CorpusItem(index, image, symbol, profile, payload)


def synth_corpus(spec: CorpusSpec, count: int, seed: int = 0) -> list[CorpusItem]:
    """Deterministic labeled corpus; item i depends only on (spec, seed, i)."""
    return [synth_item(spec, i, seed) for i in range(count)]


# --- image and corpus I/O ---------------------------------------------------------

def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.round(np.clip(pixels, 0, 1) * 255).astype(np.uint8)


def save_image(img: RasterImage | np.ndarray, path: str | Path) -> None:
    pixels = img.pixels if isinstance(img, RasterImage) else img
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".ppm", ".pnm") else "PNG"
    Image.fromarray(to_uint8(pixels), mode="RGB").save(path, format=fmt)


def load_image(path: str | Path) -> RasterImage:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=float) / 255.0
    return RasterImage(arr)


def save_bitimage_pbm(bits: np.ndarray, path: str | Path) -> None:
    """Plain-text PBM (P1), 1 = black."""
    h, w = bits.shape
    rows = "\n".join(" ".join(str(int(b)) for b in row) for row in bits)
    Path(path).write_text(f"P1\n{w} {h}\n{rows}\n", encoding="ascii", newline="\n")


def write_corpus(items: Sequence[CorpusItem], directory: str | Path) -> Path:
    """Write images, symbols, labels and a line-delimited JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for item in items:
        stem = f"item_{item.index:05d}"
        save_image(item.image, directory / f"{stem}.png")
        symbol_container.save(item.symbol, directory / f"{stem}.hiq")
        np.savetxt(directory / f"{stem}.labels.txt", item.labels, fmt="%d")
        record = {
            "image": f"{stem}.png",
            "symbol": f"{stem}.hiq",
            "labels": f"{stem}.labels.txt",
            "profile": item.profile.to_dict(),
            "homography": np.asarray(item.homography).tolist(),
            "payload": item.payload.hex(),
        }
        lines.append(json.dumps(record, sort_keys=True))
    (directory / "manifest.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""),
                                              encoding="utf-8", newline="\n")
    return directory


def read_corpus(directory: str | Path) -> list[CorpusItem]:
    directory = Path(directory)
    manifest = directory / "manifest.jsonl"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.jsonl in {directory}")
    items = []
    for i, line in enumerate(manifest.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        rec = json.loads(line)
        img = load_image(directory / rec["image"])
        labels = np.loadtxt(directory / rec["labels"], dtype=np.int64, ndmin=2)
        img = replace(img, homography=np.asarray(rec["homography"]), labels=labels)
        items.append(CorpusItem(
            i, img, symbol_container.load(directory / rec["symbol"]),
            DistortionProfile.from_dict(rec["profile"]), bytes.fromhex(rec["payload"]),
        ))
    return items


__all__ = [
    "RasterImage", "DistortionProfile", "CorpusSpec", "CorpusItem", "render", "apply_cmi",
    "apply_cci", "apply_illumination", "apply_warp", "add_noise", "add_blur", "distort",
    "synth_corpus", "synth_item", "write_corpus", "read_corpus", "save_image", "load_image",
    "bilinear_sample", "apply_homography", "cmi_grid", "PRESETS", "DEFAULT_SEED",
    "TRAINING_SPEC", "TRAINING_COUNT",
]
