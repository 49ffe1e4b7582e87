"""Symbol localization: local binarization, ratio-scan finder detection, color checks, alignment search."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numba
import numpy as np
from scipy import ndimage

from .errors import InvalidParameter, LocalizationFailed
from .raster import RasterImage, bilinear_sample
from .symbology.codebook import (
    FINDER_CORES,
    LAYERS_BY_RING,
    PATTERN_PALETTE,
    alignment_core_name,
    finder_core_names,
    nearest_palette,
)

GRID_BLOCKS = 8
RATIO_TOLERANCE = 0.5
FINDER_RATIO = (1, 1, 3, 1, 1)
ALIGNMENT_SEARCH_MODULES = 2.0


@dataclass(frozen=True)
class BitImage:
    bits: np.ndarray  # (H, W) uint8, 1 = black

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class Pattern:
    center: tuple[float, float]  # image (x, y)
    module_size: float
    kind: str  # "finder" | "alignment"
    core: str  # nearest palette name of the interior
    ring: str | None = None  # finders only
    grid: tuple[float, float] | None = None  # grid (x, y) once identified
    hits: int = 1


@dataclass
class PatternSet:
    finders: tuple  # (top-left, top-right, bottom-left)
    alignments: list = field(default_factory=list)

    @property
    def module_size(self) -> float:
        return float(np.mean([f.module_size for f in self.finders]))

    @property
    def ring_colors(self) -> list[str]:
        return [f.ring for f in self.finders]

    @property
    def all(self) -> list[Pattern]:
        return list(self.finders) + list(self.alignments)


# --- binarization --------------------------------------------------------------

def block_edges(size: int, blocks: int = GRID_BLOCKS) -> np.ndarray:
    return np.linspace(0, size, blocks + 1).round().astype(int)


FLAT_SIGMAS = 10.0  # a channel spanning fewer noise sigmas than this is flat
MIN_NOISE_SAMPLES = 64  # smaller blocks cannot separate noise from edges


def noise_sigma(block: np.ndarray) -> np.ndarray:
    """Per-channel noise estimate from the median absolute horizontal difference."""
    d = np.abs(np.diff(block, axis=1)).reshape(-1, block.shape[-1])
    if len(d) < MIN_NOISE_SAMPLES:
        return np.zeros(block.shape[-1])
    return np.median(d, axis=0) / (0.6745 * np.sqrt(2.0))


def block_thresholds(pixels: np.ndarray) -> np.ndarray:
    """(8, 8, 3) per-block, per-channel (max + min) / 2.

    A flat channel (its range explained by noise alone) gets the block minimum
    as threshold, so it marks no pixel black. Without noise this is exactly
    the max == min case.
    """
    h, w = pixels.shape[:2]
    ye, xe = block_edges(h), block_edges(w)
    T = np.empty((GRID_BLOCKS, GRID_BLOCKS, 3))
    for i in range(GRID_BLOCKS):
        for j in range(GRID_BLOCKS):
            blk = pixels[ye[i]:ye[i + 1], xe[j]:xe[j + 1]]
            hi, lo = blk.max(axis=(0, 1)), blk.min(axis=(0, 1))
            flat = hi - lo <= FLAT_SIGMAS * noise_sigma(blk)
            T[i, j] = np.where(flat, lo, (hi + lo) / 2)
    return T


def binarize(img: RasterImage | np.ndarray) -> BitImage:
    """A pixel is black iff any channel falls strictly below its block threshold."""
    pixels = img.pixels if isinstance(img, RasterImage) else np.asarray(img, dtype=float)
    h, w = pixels.shape[:2]
    if h < GRID_BLOCKS or w < GRID_BLOCKS:
        raise InvalidParameter(f"image must be at least {GRID_BLOCKS}x{GRID_BLOCKS} pixels")
    T = block_thresholds(pixels)
    ye, xe = block_edges(h), block_edges(w)
    out = np.empty((h, w), dtype=np.uint8)
    for i in range(GRID_BLOCKS):
        for j in range(GRID_BLOCKS):
            blk = pixels[ye[i]:ye[i + 1], xe[j]:xe[j + 1]]
            out[ye[i]:ye[i + 1], xe[j]:xe[j + 1]] = (blk < T[i, j]).any(axis=2)
    return BitImage(out)


# --- run-length ratio checks ------------------------------------------------------

def runs(line: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(starts, lengths, values) of the runs in a 0/1 line."""
    line = np.asarray(line, dtype=np.int8)
    change = np.flatnonzero(np.diff(line)) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [len(line)]]))
    return starts, lengths, line[starts]


def ratio_ok(lengths, ratio=FINDER_RATIO, tol: float = RATIO_TOLERANCE) -> np.ndarray:
    """Vectorized check of run windows (..., len(ratio)) against a module ratio."""
    lengths = np.asarray(lengths, dtype=float)
    ratio = np.asarray(ratio, dtype=float)
    unit = lengths.sum(axis=-1, keepdims=True) / ratio.sum()
    return (np.abs(lengths - ratio * unit) < tol * ratio * unit).all(axis=-1) & (unit[..., 0] >= 1.0)


def _windows(lengths: np.ndarray, k: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(lengths, k)


def scan_line(line: np.ndarray, ratio=FINDER_RATIO) -> list[tuple[float, float]]:
    """(center, module size) of every black-led run window matching ``ratio``."""
    starts, lengths, values = runs(line)
    k = len(ratio)
    if len(lengths) < k:
        return []
    win = _windows(lengths, k)
    ok = ratio_ok(win, ratio) & (values[: len(win)] == 1)
    mid = k // 2
    out = []
    for i in np.flatnonzero(ok):
        c = starts[i + mid] + lengths[i + mid] / 2.0
        out.append((float(c), float(win[i].sum() / sum(ratio))))
    return out


@numba.njit(cache=True)
def _walk_runs(line, pos, half):
    """Run lengths around ``pos``: out[half] is the run containing it, then ``half`` runs each side.

    Returns (lengths, start of the middle run); lengths[0] is -1 if the line ends first.
    """
    n = line.shape[0]
    k = 2 * half + 1
    out = np.zeros(k, dtype=np.int64)
    v = line[pos]
    lo = pos
    while lo > 0 and line[lo - 1] == v:
        lo -= 1
    hi = pos
    while hi < n - 1 and line[hi + 1] == v:
        hi += 1
    out[half] = hi - lo + 1
    start = lo
    # runs to the right
    j = hi + 1
    for r in range(half + 1, k):
        if j >= n:
            out[0] = -1
            return out, start
        v = line[j]
        e = j
        while e < n - 1 and line[e + 1] == v:
            e += 1
        out[r] = e - j + 1
        j = e + 1
    # runs to the left
    j = lo - 1
    for r in range(half - 1, -1, -1):
        if j < 0:
            out[0] = -1
            return out, start
        v = line[j]
        b = j
        while b > 0 and line[b - 1] == v:
            b -= 1
        out[r] = j - b + 1
        j = b - 1
    return out, start


@numba.njit(cache=True)
def _ratio_ok_nb(lengths, ratio, tol):
    total = 0.0
    rsum = 0.0
    for i in range(ratio.shape[0]):
        total += lengths[i]
        rsum += ratio[i]
    unit = total / rsum
    if unit < 1.0:
        return False
    for i in range(ratio.shape[0]):
        if abs(lengths[i] - ratio[i] * unit) >= tol * ratio[i] * unit:
            return False
    return True


@numba.njit(cache=True)
def _cross_nb(line, pos, ratio, tol):
    """(ok, center, module size) of the ratio window whose middle run contains ``pos``."""
    if pos < 0 or pos >= line.shape[0] or line[pos] != 1:
        return False, 0.0, 0.0
    half = ratio.shape[0] // 2
    lengths, start = _walk_runs(line, pos, half)
    if lengths[0] < 0 or not _ratio_ok_nb(lengths, ratio, tol):
        return False, 0.0, 0.0
    total = 0.0
    rsum = 0.0
    for i in range(ratio.shape[0]):
        total += lengths[i]
        rsum += ratio[i]
    return True, start + lengths[half] / 2.0, total / rsum


@numba.njit(cache=True)
def _diagonal_nb(B, cx, cy, unit, ratio, tol):
    h, w = B.shape
    reach = int(np.ceil(6 * unit))
    x0 = int(np.floor(cx))
    y0 = int(np.floor(cy))
    if not (0 <= x0 < w and 0 <= y0 < h):
        return False
    for sign in (1, -1):
        line = np.empty(2 * reach + 1, dtype=np.uint8)
        count = 0
        pos = 0
        for t in range(-reach, reach + 1):
            x = x0 + t
            y = y0 + sign * t
            if 0 <= x < w and 0 <= y < h:
                if t == 0:
                    pos = count
                line[count] = B[y, x]
                count += 1
        ok, _, _ = _cross_nb(line[:count], pos, ratio, tol)
        if ok:
            return True
    return False


@numba.njit(cache=True)
def _confirm_nb(B, row, col, unit, ratio, tol):
    """Vertical, horizontal and diagonal confirmation of a row hit, trying lines up to half a module away."""
    h, w = B.shape
    reach = max(1, int(unit / 2))
    found = False
    cy = 0.0
    unit_v = 0.0
    for step in range(2 * reach + 1):
        d = (step + 1) // 2 * (1 if step % 2 == 0 else -1)
        k = col + d
        if 0 <= k < w:
            found, cy, unit_v = _cross_nb(B[:, k], row, ratio, tol)
            if found:
                break
    if not found:
        return False, 0.0, 0.0, 0.0
    found = False
    cx = 0.0
    unit_h = 0.0
    for step in range(2 * reach + 1):
        d = (step + 1) // 2 * (1 if step % 2 == 0 else -1)
        k = int(cy) + d
        if 0 <= k < h:
            found, cx, unit_h = _cross_nb(B[k], col, ratio, tol)
            if found:
                break
    if not found:
        return False, 0.0, 0.0, 0.0
    if not _diagonal_nb(B, cx, cy, (unit_v + unit_h) / 2, ratio, tol):
        return False, 0.0, 0.0, 0.0
    return True, cx, cy, (unit + unit_v + unit_h) / 3


def cross_check(line: np.ndarray, pos: int, ratio=FINDER_RATIO) -> tuple[float, float] | None:
    """Center and module size of a ratio window whose middle run contains ``pos``."""
    ok, center, unit = _cross_nb(np.ascontiguousarray(line, dtype=np.uint8), int(pos),
                                 np.asarray(ratio, dtype=float), RATIO_TOLERANCE)
    return (center, unit) if ok else None


# --- finder candidates -----------------------------------------------------------

def scan_rows(B: np.ndarray, ratio=FINDER_RATIO) -> list[tuple[int, float, float]]:
    """(row, center, module size) of every ratio match in every row, in one vectorized pass."""
    h, w = B.shape
    B = B.astype(np.int8)
    change = np.zeros((h, w), dtype=bool)
    change[:, 0] = True
    change[:, 1:] = B[:, 1:] != B[:, :-1]
    rows, cols = np.nonzero(change)
    ends = np.empty_like(cols)
    ends[:-1] = cols[1:]
    last = np.ones(len(rows), dtype=bool)
    last[:-1] = rows[1:] != rows[:-1]
    ends[last] = w
    lengths = ends - cols
    values = B[rows, cols]
    k = len(ratio)
    if len(lengths) < k:
        return []
    win = _windows(lengths, k)
    same_row = rows[k - 1:] == rows[: len(win)]
    ok = same_row & (values[: len(win)] == 1) & ratio_ok(win, ratio)
    mid = k // 2
    total = float(sum(ratio))
    out = []
    for i in np.flatnonzero(ok):
        out.append((int(rows[i]), float(cols[i + mid] + lengths[i + mid] / 2.0), float(win[i].sum() / total)))
    return out


def finder_candidates(bits: BitImage) -> list[tuple[float, float, float, int]]:
    """Clustered (x, y, module size, hits) of 1:1:3:1:1 centers confirmed in three directions."""
    B = bits.bits
    Bc = np.ascontiguousarray(B, dtype=np.uint8)
    ratio = np.asarray(FINDER_RATIO, dtype=float)
    confirmed = []
    for row, cx, unit in scan_rows(B):
        ok, x, y, u = _confirm_nb(Bc, row, int(cx), unit, ratio, RATIO_TOLERANCE)
        if ok:
            confirmed.append((x, y, u))
    clusters: list[list] = []
    for x, y, u in confirmed:
        for c in clusters:
            if np.hypot(c[0] / c[3] - x, c[1] / c[3] - y) < 2.0 * u:
                c[0] += x
                c[1] += y
                c[2] += u
                c[3] += 1
                break
        else:
            clusters.append([x, y, u, 1])
    return [(c[0] / c[3], c[1] / c[3], c[2] / c[3], c[3]) for c in clusters]


def _ring_points(cx, cy, radius) -> tuple[np.ndarray, np.ndarray]:
    ang = np.arange(8) * np.pi / 4
    # square ring: scale the unit circle onto the Chebyshev ring
    dx, dy = np.cos(ang), np.sin(ang)
    s = radius / np.maximum(np.abs(dx), np.abs(dy))
    return cx + dx * s, cy + dy * s


def local_color(pixels: np.ndarray, cx: float, cy: float, radius: float) -> np.ndarray:
    """Median color over a small disk, for robustness against edge pixels."""
    r = max(radius, 0.5)
    off = np.linspace(-r, r, 5)
    gx, gy = np.meshgrid(off, off)
    keep = gx ** 2 + gy ** 2 <= r * r + 1e-9
    return np.median(bilinear_sample(pixels, cx + gx[keep], cy + gy[keep]), axis=0)


def classify_finder(pixels: np.ndarray, x: float, y: float, unit: float) -> tuple[str, str]:
    """(core, ring) palette names after normalizing by the pattern's own white ring."""
    wx, wy = _ring_points(x, y, 2.0 * unit)
    white = np.median(bilinear_sample(pixels, wx, wy), axis=0)
    white = np.maximum(white, 1e-3)
    core = local_color(pixels, x, y, 0.8 * unit) / white
    rx, ry = _ring_points(x, y, 3.0 * unit)
    ring_samples = bilinear_sample(pixels, rx, ry) / white
    ring_names = [nearest_palette(c) for c in ring_samples]
    ring = max(set(ring_names), key=ring_names.count)
    return nearest_palette(core), ring


def _order_geometric(pts: np.ndarray) -> tuple[int, int, int]:
    """Indices (top-left, top-right, bottom-left) of three finder centers."""
    best = None
    for tl in range(3):
        a, b = [i for i in range(3) if i != tl]
        u, v = pts[a] - pts[tl], pts[b] - pts[tl]
        cosang = abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v) + 1e-12)
        if best is None or cosang < best[0]:
            best = (cosang, tl, a, b)
    _, tl, a, b = best
    u, v = pts[a] - pts[tl], pts[b] - pts[tl]
    # image y grows downward, so top-right x bottom-left has a positive z component
    if u[0] * v[1] - u[1] * v[0] < 0:
        a, b = b, a
    return tl, a, b


def _triple_score(pts: np.ndarray, units: np.ndarray) -> float:
    tl, tr, bl = _order_geometric(pts)
    u, v = pts[tr] - pts[tl], pts[bl] - pts[tl]
    lu, lv = np.linalg.norm(u), np.linalg.norm(v)
    cosang = abs(u @ v) / (lu * lv + 1e-12)
    return cosang + abs(lu - lv) / max(lu, lv) + np.std(units) / np.mean(units)


def select_finders(cands: list[Pattern], n_layers: int | None = None) -> tuple[Pattern, Pattern, Pattern]:
    """Color-valid triple ordered (top-left, top-right, bottom-left)."""
    if n_layers is not None:
        expected = set(finder_core_names(n_layers))
    else:
        colored = {c.core for c in cands} & set(FINDER_CORES)
        expected = set(FINDER_CORES) if len(colored) >= 2 else {"black"}
    valid = [c for c in cands if c.core in expected]
    if len(valid) < 3:
        raise LocalizationFailed(f"only {len(valid)} finder candidates pass the color check")
    if expected == set(FINDER_CORES):
        by_color = {}
        for c in valid:
            if c.core not in by_color or c.hits > by_color[c.core].hits:
                by_color[c.core] = c
        if len(by_color) == 3:
            return tuple(by_color[name] for name in FINDER_CORES)
    pool = sorted(valid, key=lambda c: -c.hits)[:6]
    best = min(combinations(pool, 3), key=lambda t: _triple_score(
        np.array([c.center for c in t]), np.array([c.module_size for c in t])))
    pts = np.array([c.center for c in best])
    return tuple(best[i] for i in _order_geometric(pts))


def locate_finders(bits: BitImage, img: RasterImage, n_layers: int | None = None) -> tuple:
    cands = []
    for x, y, u, hits in finder_candidates(bits):
        core, ring = classify_finder(img.pixels, x, y, u)
        cands.append(Pattern((x, y), u, "finder", core, ring, hits=hits))
    if len(cands) < 3:
        raise LocalizationFailed(f"found {len(cands)} finder candidates, need 3")
    return select_finders(cands, n_layers)


# --- alignment patterns --------------------------------------------------------

def find_alignment(bits: BitImage, img: RasterImage, predicted: tuple[float, float], unit: float,
                   core_name: str, search: float = ALIGNMENT_SEARCH_MODULES) -> Pattern | None:
    """Alignment center near ``predicted``: a one-module black blob framed by white then black."""
    B = bits.bits
    h, w = B.shape
    px, py = predicted
    half = (search + 3.0) * unit
    x0, x1 = int(max(0, np.floor(px - half))), int(min(w, np.ceil(px + half)))
    y0, y1 = int(max(0, np.floor(py - half))), int(min(h, np.ceil(py + half)))
    if x1 - x0 < 3 or y1 - y0 < 3:
        return None
    win = B[y0:y1, x0:x1]
    labels, count = ndimage.label(win)
    if count == 0:
        return match_alignment(img, predicted, unit, core_name, search)
    idx = np.arange(1, count + 1)
    areas = ndimage.sum(np.ones_like(win), labels, idx)
    centers = ndimage.center_of_mass(win, labels, idx)
    area = unit * unit
    best = None
    for a, (cy, cx) in zip(areas, centers):
        if not (0.25 * area <= a <= 2.5 * area):
            continue
        gx, gy = cx + x0 + 0.5, cy + y0 + 0.5
        dist = np.hypot(gx - px, gy - py)
        if dist > search * unit:
            continue
        row, col = int(gy), int(gx)
        if not (0 <= row < h and 0 <= col < w):
            continue
        hor = alignment_cross(B[row], col, unit)
        ver = alignment_cross(B[:, col], row, unit)
        if hor is None or ver is None:
            continue
        cx_img, cy_img = hor[0], ver[0]
        if ring_structure_score(B, cx_img, cy_img, unit) < 22:
            continue
        wx, wy = _ring_points(cx_img, cy_img, 1.0 * unit)
        white = np.maximum(np.median(bilinear_sample(img.pixels, wx, wy), axis=0), 1e-3)
        core = nearest_palette(local_color(img.pixels, cx_img, cy_img, 0.3 * unit) / white)
        if core != core_name:
            continue
        if best is None or dist < best[0]:
            best = (dist, Pattern((cx_img, cy_img), (hor[1] + ver[1]) / 2, "alignment", core))
    if best is None:
        # interference can wash the one-module core out of the bit image
        return match_alignment(img, predicted, unit, core_name, search)
    return best[1]


TEMPLATE_MIN_NCC = 0.7


def alignment_template(unit: float, core_name: str) -> np.ndarray:
    """(m, m, 3) pixel template of an alignment pattern: black ring, white ring, colored core."""
    m = max(5, int(round(5 * unit)))
    off = (np.arange(m) + 0.5 - m / 2) / unit
    level = np.maximum(np.abs(off)[:, None], np.abs(off)[None, :])
    tpl = np.empty((m, m, 3))
    tpl[:] = PATTERN_PALETTE["black"]
    tpl[level < 1.5] = PATTERN_PALETTE["white"]
    tpl[level < 0.5] = PATTERN_PALETTE[core_name]
    return tpl


def _peak_offset(left: float, mid: float, right: float) -> float:
    denom = left - 2 * mid + right
    return 0.0 if denom >= 0 else float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def match_alignment(img: RasterImage, predicted: tuple[float, float], unit: float, core_name: str,
                    search: float = ALIGNMENT_SEARCH_MODULES) -> Pattern | None:
    """Best normalized cross-correlation with the color template near ``predicted``.

    Each channel is correlated on its own (so per-channel gains cancel) and
    channels whose template is constant are skipped.
    """
    tpl = alignment_template(unit, core_name)
    m = tpl.shape[0]
    px, py = predicted
    reach = int(np.ceil(search * unit))
    x0 = int(np.floor(px - m / 2)) - reach
    y0 = int(np.floor(py - m / 2)) - reach
    h, w = img.height, img.width
    if x0 < 0 or y0 < 0 or x0 + m + 2 * reach > w or y0 + m + 2 * reach > h:
        return None
    win = img.pixels[y0:y0 + m + 2 * reach, x0:x0 + m + 2 * reach]
    views = np.lib.stride_tricks.sliding_window_view(win, (m, m), axis=(0, 1))  # (Y, X, 3, m, m)
    scores = []
    for c in range(3):
        t = tpl[..., c] - tpl[..., c].mean()
        if not t.any():
            continue
        v = views[:, :, c]
        v = v - v.mean(axis=(-1, -2), keepdims=True)
        num = (v * t).sum(axis=(-1, -2))
        den = np.sqrt((v * v).sum(axis=(-1, -2)) * (t * t).sum()) + 1e-12
        scores.append(num / den)
    ncc = np.mean(scores, axis=0)
    # stay within the search radius
    oy, ox = np.mgrid[0:ncc.shape[0], 0:ncc.shape[1]]
    cx = x0 + ox + m / 2
    cy = y0 + oy + m / 2
    ncc = np.where(np.hypot(cx - px, cy - py) <= search * unit, ncc, -1.0)
    iy, ix = np.unravel_index(np.argmax(ncc), ncc.shape)
    best = ncc[iy, ix]
    if best < TEMPLATE_MIN_NCC:
        return None
    dx = _peak_offset(ncc[iy, ix - 1], best, ncc[iy, ix + 1]) if 0 < ix < ncc.shape[1] - 1 else 0.0
    dy = _peak_offset(ncc[iy - 1, ix], best, ncc[iy + 1, ix]) if 0 < iy < ncc.shape[0] - 1 else 0.0
    return Pattern((float(cx[iy, ix] + dx), float(cy[iy, ix] + dy)), unit, "alignment", core_name)


def alignment_cross(line: np.ndarray, pos: int, unit: float) -> tuple[float, float] | None:
    """Center and module size of a black core framed by white runs and then black.

    The outer black ring may merge with dark neighbouring modules, so only its
    presence is checked, not its length.
    """
    if not (0 <= pos < len(line)) or line[pos] != 1:
        return None
    lengths, start = _walk_runs(np.ascontiguousarray(line, dtype=np.uint8), int(pos), 2)
    if lengths[0] < 0:
        return None
    inner = lengths[1:4].astype(float)
    if ((inner < 0.5 * unit) | (inner > 1.5 * unit)).any():
        return None
    if min(lengths[0], lengths[4]) < 0.5 * unit:
        return None
    return float(start + lengths[2] / 2.0), float(inner.mean())


_RING_OFFSETS = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3) if (dx, dy) != (0, 0)]


def ring_structure_score(B: np.ndarray, cx: float, cy: float, unit: float) -> int:
    """How many of the 24 modules around a candidate alignment center match white-then-black rings."""
    h, w = B.shape
    score = 0
    for dx, dy in _RING_OFFSETS:
        x, y = int(np.floor(cx + dx * unit)), int(np.floor(cy + dy * unit))
        if not (0 <= x < w and 0 <= y < h):
            continue
        expected = 1 if max(abs(dx), abs(dy)) == 2 else 0
        score += int(B[y, x] == expected)
    return score


def layers_from_rings(finders) -> int | None:
    votes = [LAYERS_BY_RING.get(f.ring) for f in finders]
    for v in set(votes):
        if v is not None and votes.count(v) >= 2:
            return v
    return None


def find_patterns(bits: BitImage, img: RasterImage, n_layers: int | None = None) -> PatternSet:
    """Three color-checked finders; alignment search happens once a version is hypothesized."""
    finders = locate_finders(bits, img, n_layers)
    return PatternSet(finders, [])


def expected_core(n_layers: int) -> str:
    return alignment_core_name(n_layers)


__all__ = [
    "BitImage", "Pattern", "PatternSet", "PATTERN_PALETTE", "binarize", "block_thresholds",
    "find_alignment", "find_patterns", "match_alignment", "layers_from_rings", "scan_line", "cross_check",
]
