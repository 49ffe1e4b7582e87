"""Frame decoding, multi-frame sessions with block accumulation, metrics and benchmarks."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .detect import BitImage, PatternSet, binarize, find_alignment, find_patterns
from .ecc import EcLevel, block_layout, deinterleave, rs_decode_block, unframe_payload
from .errors import (
    BlockDecodeFailure,
    DegenerateConfiguration,
    FormatUnreadable,
    FrameRejected,
    InvalidWhite,
    LayerMismatch,
    LocalizationFailed,
    UndefinedMetrics,
    WhiteEstimationFailure,
)
from .geometry import (
    ALIGNMENT_WEIGHT,
    FINDER_WEIGHT,
    Correspondence,
    estimate_rgt,
    homography_4pt,
    reprojection_error,
    sample_modules,
)
from .colorrec.white import estimate_white
from .raster import CorpusItem, RasterImage, apply_homography
from .symbology.codebook import alignment_core_name
from .symbology.layout import (
    alignment_centers,
    decode_format_word,
    decode_version_word,
    dim_of,
    format_positions,
    version_positions,
)
from .symbology.placement import bits_to_bytes, placement
from .symbology.symbol import DEFAULT_SEED, HiqSymbol, vote_layers

log = logging.getLogger(__name__)

DECODED = "decoded"
PARTIAL = "partial"
LOCALIZATION_FAILED = "localization-failed"
FORMAT_UNREADABLE = "format-unreadable"
MAX_ALIGNMENT_RESIDUAL = 1.0  # modules
CONFIDENT_TIMING = 0.9  # timing-pattern agreement that ends the version search


@dataclass(frozen=True)
class DecodeOptions:
    seed: int = DEFAULT_SEED
    use_rgt: bool = True
    randomized: bool = True
    version: int | None = None  # skip version estimation when known
    version_span: int = 2


@dataclass
class FrameResult:
    status: str
    version: int | None = None
    n_layers: int | None = None
    ec_levels: tuple | None = None
    layer_bits: np.ndarray | None = None  # (n, dim, dim) predicted module bits
    streams: dict = field(default_factory=dict)  # layer -> pre-correction data bits
    blocks: dict = field(default_factory=dict)  # (layer, block) -> bytes | None
    corrected: dict = field(default_factory=dict)  # (layer, block) -> corrected symbol count
    payload: bytes | None = None
    homography: np.ndarray | None = None
    white: np.ndarray | None = None
    patterns: PatternSet | None = None
    evaluations: int = 0
    skipped_layers: tuple = ()
    message: str = ""

    @property
    def localized(self) -> bool:
        return self.status != LOCALIZATION_FAILED

    @property
    def identity(self) -> tuple | None:
        return None if self.version is None else (self.version, self.n_layers)


# --- geometry stage ------------------------------------------------------------

def _finder_grid(dim: int) -> list[tuple[float, float]]:
    return [(3.5, 3.5), (dim - 3.5, 3.5), (3.5, dim - 3.5)]


def estimate_version(patterns: PatternSet) -> int:
    tl, tr, bl = (np.array(f.center) for f in patterns.finders)
    span = (np.linalg.norm(tr - tl) + np.linalg.norm(bl - tl)) / 2
    dim = span / patterns.module_size + 7
    return int(np.clip(round((dim - 17) / 4), 1, 40))


def _affine_predict(patterns: PatternSet, dim: int, gx: float, gy: float) -> tuple[float, float]:
    tl, tr, bl = (np.array(f.center) for f in patterns.finders)
    u, v = (gx - 3.5) / (dim - 7), (gy - 3.5) / (dim - 7)
    p = tl + u * (tr - tl) + v * (bl - tl)
    return float(p[0]), float(p[1])


def _grid_to_image(H: np.ndarray, gx, gy):
    return apply_homography(np.linalg.inv(H), np.asarray(gx, dtype=float), np.asarray(gy, dtype=float))


def fit_homography(bits: BitImage, img: RasterImage, patterns: PatternSet, version: int,
                   n_layers: int, use_rgt: bool = True) -> tuple[np.ndarray, list]:
    """Image -> grid homography for a hypothesized version; returns (H, correspondences)."""
    dim = dim_of(version)
    unit = patterns.module_size
    corrs = [Correspondence(f.center, g, FINDER_WEIGHT, "finder")
             for f, g in zip(patterns.finders, _finder_grid(dim))]
    core = alignment_core_name(n_layers)
    centers = alignment_centers(version)
    br = (dim - 7, dim - 7)
    fourth = None
    if br in centers:
        gx, gy = br[1] + 0.5, br[0] + 0.5
        found = find_alignment(bits, img, _affine_predict(patterns, dim, gx, gy), unit, core, search=5.0)
        if found is not None:
            fourth = Correspondence(found.center, (gx, gy), ALIGNMENT_WEIGHT, "alignment")
    if fourth is None:
        # no usable bottom-right alignment: complete the parallelogram
        tl, tr, bl = (np.array(f.center) for f in patterns.finders)
        corner = tuple(tr + bl - tl)
        fourth = Correspondence(corner, (dim - 3.5, dim - 3.5), ALIGNMENT_WEIGHT, "virtual")
    H = homography_4pt(corrs + [fourth])
    if not use_rgt:
        return H, corrs + [fourth]
    align = [fourth] if fourth.kind == "alignment" else []
    for r, c in centers:
        if (r, c) == br:
            continue
        px, py = _grid_to_image(H, c + 0.5, r + 0.5)
        found = find_alignment(bits, img, (float(px), float(py)), unit, core)
        if found is not None:
            align.append(Correspondence(found.center, (c + 0.5, r + 0.5), ALIGNMENT_WEIGHT, "alignment"))
    if len(align) == 0:
        return H, corrs + [fourth]
    all_corrs = corrs + align
    try:
        H = estimate_rgt(all_corrs)
    except DegenerateConfiguration:
        # e.g. a lone central alignment lies on the line through two finders
        return H, corrs + [fourth]
    # drop alignment matches that disagree with the joint fit by more than a module
    err = reprojection_error(H, all_corrs)
    keep = [c for c, e in zip(all_corrs, err) if c.kind == "finder" or e <= MAX_ALIGNMENT_RESIDUAL]
    if len(keep) < len(all_corrs):
        all_corrs = keep if len(keep) >= 4 else corrs + [fourth]
        try:
            H = estimate_rgt(all_corrs) if len(keep) >= 4 else homography_4pt(all_corrs)
        except DegenerateConfiguration:
            all_corrs = corrs + [fourth]
            H = homography_4pt(all_corrs)
    return H, all_corrs


def timing_score(bits: BitImage, H: np.ndarray, dim: int) -> float:
    """Fraction of timing-pattern modules whose binarized pixel has the expected parity."""
    idx = np.arange(8, dim - 8)
    gx = np.concatenate([idx + 0.5, np.full(len(idx), 6.5)])
    gy = np.concatenate([np.full(len(idx), 6.5), idx + 0.5])
    expect = np.concatenate([idx % 2 == 0, idx % 2 == 0]).astype(np.uint8)
    x, y = _grid_to_image(H, gx, gy)
    xi, yi = np.floor(x).astype(int), np.floor(y).astype(int)
    inside = (xi >= 0) & (yi >= 0) & (xi < bits.width) & (yi < bits.height)
    if not inside.any():
        return 0.0
    got = bits.bits[yi[inside], xi[inside]]
    return float((got == expect[inside]).sum() / len(expect))


def localize(img: RasterImage, n_layers: int, options: DecodeOptions = DecodeOptions(),
             bits: BitImage | None = None) -> tuple[PatternSet, int, np.ndarray, BitImage]:
    """Finders, version and homography; raises LocalizationFailed when nothing fits."""
    bits = bits if bits is not None else binarize(img)
    patterns = find_patterns(bits, img, n_layers)
    if options.version is not None:
        candidates = [options.version]
    else:
        v0 = estimate_version(patterns)
        span = range(-options.version_span, options.version_span + 1)
        candidates = sorted({min(40, max(1, v0 + d)) for d in span}, key=lambda v: abs(v - v0))
    best = None
    for v in candidates:
        try:
            H, corrs = fit_homography(bits, img, patterns, v, n_layers, options.use_rgt)
        except DegenerateConfiguration:
            continue
        score = timing_score(bits, H, dim_of(v))
        if best is None or score > best[0] + 1e-9:
            best = (score, v, H, corrs)
        if score >= CONFIDENT_TIMING:
            break  # wrong versions drift off the timing pattern; this one clearly fits
    if best is None:
        raise LocalizationFailed("no version hypothesis produced a valid homography")
    score, v, H, corrs = best
    patterns.alignments = [c for c in corrs if c.kind == "alignment"]
    return patterns, v, H, bits


# --- bit stage -------------------------------------------------------------------

def read_levels(layer_bits: np.ndarray, n_layers: int, known: dict | None = None) -> dict:
    """Per-layer EC level from the two format-word copies; ``known`` fills skipped layers."""
    dim = layer_bits.shape[1]
    first, second = format_positions(dim)
    levels = dict(known or {})
    for j in range(n_layers):
        if j in levels:
            continue
        best = None
        for positions in (first, second):
            word = sum(int(layer_bits[j][p]) << i for i, p in enumerate(positions))
            cand = decode_format_word(word)
            if cand is not None and cand[1] == n_layers and (best is None or cand[2] < best[2]):
                best = cand
        if best is not None:
            levels[j] = EcLevel.parse(best[0])
    return levels


def read_version(layer_bits: np.ndarray) -> int | None:
    dim = layer_bits.shape[1]
    first, second = version_positions(dim)
    for plane in layer_bits:
        for positions in (first, second):
            word = sum(int(plane[p]) << i for i, p in enumerate(positions))
            cand = decode_version_word(word)
            if cand is not None:
                return cand[0]
    return None


def decode_layer_stream(plane: np.ndarray, version: int, level: EcLevel, seed: int, layer: int,
                        randomized: bool) -> tuple[np.ndarray, dict, dict]:
    """Derandomize one layer and RS-decode each block; returns (stream bits, blocks, corrected counts)."""
    pl = placement(version, level, seed, layer, randomized)
    stream = pl.read(plane)
    lay = block_layout(version, level)
    raw = bits_to_bytes(stream, lay.total_codewords)
    blocks, corrected = {}, {}
    for blk in deinterleave(raw, version, level, layer):
        try:
            data, count = rs_decode_block(blk)
            blocks[(layer, blk.block_id)] = data
            corrected[(layer, blk.block_id)] = count
        except BlockDecodeFailure:
            blocks[(layer, blk.block_id)] = None
    return stream, blocks, corrected


def assemble_layer(blocks: dict, layer: int, version: int, level: EcLevel) -> bytes | None:
    """Checksum-verified layer segment from a complete set of block data, else None."""
    lay = block_layout(version, level)
    parts = [blocks.get((layer, b)) for b in range(lay.num_blocks)]
    if any(p is None for p in parts):
        return None
    return unframe_payload(b"".join(parts))


def decode_bits(layer_bits: np.ndarray, n_layers: int, version: int, seed: int = DEFAULT_SEED,
                randomized: bool = True, skip_layers: Sequence[int] = (),
                known_levels: dict | None = None) -> FrameResult:
    """Format reading, derandomization and block decoding of predicted module bits."""
    levels = read_levels(layer_bits, n_layers, known_levels)
    result = FrameResult(PARTIAL, version, n_layers, layer_bits=layer_bits,
                         skipped_layers=tuple(skip_layers))
    if len(levels) < n_layers:
        missing = [j + 1 for j in range(n_layers) if j not in levels]
        result.status = FORMAT_UNREADABLE
        result.message = f"format word unreadable in layer(s) {missing}"
    result.ec_levels = tuple(levels.get(j) for j in range(n_layers))
    segments = []
    for j in range(n_layers):
        if j in skip_layers or j not in levels:
            segments.append(None)
            continue
        stream, blocks, corrected = decode_layer_stream(layer_bits[j], version, levels[j], seed, j, randomized)
        result.streams[j] = stream
        result.blocks.update(blocks)
        result.corrected.update(corrected)
        seg = assemble_layer(blocks, j, version, levels[j])
        if seg is None and all(blocks[(j, b)] is not None for b in range(block_layout(version, levels[j]).num_blocks)):
            # every block decoded but the checksum disagrees: treat as undetected miscorrection
            for key in blocks:
                result.blocks[key] = None
        segments.append(seg)
    if result.status != FORMAT_UNREADABLE and not skip_layers and all(s is not None for s in segments):
        result.payload = b"".join(segments)
        result.status = DECODED
    return result


# --- frame decoding -----------------------------------------------------------------

def decode_frame(img: RasterImage, model, session: "ScanSession | None" = None,
                 options: DecodeOptions = DecodeOptions()) -> FrameResult:
    """binarize -> patterns -> homography -> white -> sample -> classify -> derandomize -> RS."""
    n = model.n_layers
    if session is not None and session.version is not None and options.version is None:
        options = DecodeOptions(options.seed, options.use_rgt, options.randomized, session.version,
                                options.version_span)
    try:
        patterns, version, H, bits = localize(img, n, options)
        rings_n = vote_layers(patterns.ring_colors)
    except LocalizationFailed as exc:
        return FrameResult(LOCALIZATION_FAILED, message=str(exc))
    except FormatUnreadable as exc:
        return FrameResult(FORMAT_UNREADABLE, message=str(exc))
    if rings_n != n:
        return FrameResult(FORMAT_UNREADABLE, message=f"symbol has {rings_n} layers, model expects {n}")
    dim = dim_of(version)
    try:
        white = estimate_white(img, H, dim)
        features = sample_modules(img, H, dim, white)
    except FrameRejected as exc:
        return FrameResult(LOCALIZATION_FAILED, message=str(exc))
    except (WhiteEstimationFailure, InvalidWhite) as exc:
        return FrameResult(FORMAT_UNREADABLE, version, n, message=str(exc))
    skip = session.completed_layers() if session is not None else ()
    known = session.levels if session is not None else None
    before = model.evaluations
    layer_bits = model.predict_bits(features, skip_layers=skip)
    evaluations = model.evaluations - before
    result = decode_bits(layer_bits, n, version, options.seed, options.randomized, skip, known)
    result.homography, result.white, result.patterns = H, white, patterns
    result.evaluations = evaluations
    if version >= 7:
        read = read_version(layer_bits[[j for j in range(n) if j not in skip]])
        if read is not None and read != version:
            result.message = f"version word reads {read}, geometry says {version}"
    return result


# --- sessions --------------------------------------------------------------------------

@dataclass
class ScanSession:
    """Accumulates successfully decoded RS blocks across frames of one symbol."""

    version: int | None = None
    n_layers: int | None = None
    seed: int = DEFAULT_SEED
    levels: dict = field(default_factory=dict)  # layer -> EcLevel
    blocks: dict = field(default_factory=dict)  # (layer, block) -> bytes
    segments: dict = field(default_factory=dict)  # layer -> verified segment
    frames: int = 0
    conflicts: int = 0
    rejected: int = 0

    @property
    def identity(self) -> tuple | None:
        return None if self.version is None else (self.version, self.n_layers, self.seed)

    def completed_layers(self) -> tuple[int, ...]:
        return tuple(sorted(self.segments))

    @property
    def complete(self) -> bool:
        return self.n_layers is not None and len(self.segments) == self.n_layers

    @property
    def payload(self) -> bytes | None:
        if not self.complete:
            return None
        return b"".join(self.segments[j] for j in range(self.n_layers))

    def accumulate(self, result: FrameResult) -> "ScanSession":
        """Merge a frame's decoded blocks; completion is absorbing."""
        self.frames += 1
        if self.complete or not result.localized or result.version is None:
            return self
        if self.version is None:
            self.version, self.n_layers = result.version, result.n_layers
        elif (result.version, result.n_layers) != (self.version, self.n_layers):
            self.rejected += 1
            log.warning("frame identity %s differs from session %s", result.identity, self.identity)
            return self
        for j, lv in enumerate(result.ec_levels or ()):
            if lv is not None and j not in self.levels:
                self.levels[j] = lv
        for key, data in result.blocks.items():
            if data is None or key[0] in self.segments:
                continue
            if key in self.blocks:
                if self.blocks[key] != data:
                    self.conflicts += 1
                    log.warning("conflicting contents for block %s; keeping the first", key)
                continue
            self.blocks[key] = data
        for j, lv in self.levels.items():
            if j in self.segments:
                continue
            seg = assemble_layer(self.blocks, j, self.version, lv)
            if seg is not None:
                self.segments[j] = seg
            elif all((j, b) in self.blocks for b in range(block_layout(self.version, lv).num_blocks)):
                # complete but failing the checksum: forget the layer's blocks and keep scanning
                for b in range(block_layout(self.version, lv).num_blocks):
                    self.blocks.pop((j, b), None)
        return self

    def scan(self, img: RasterImage, model, options: DecodeOptions = DecodeOptions()) -> FrameResult:
        result = decode_frame(img, model, self, options)
        self.accumulate(result)
        return result


# --- metrics ------------------------------------------------------------------------------

def truth_streams(symbol: HiqSymbol) -> dict:
    """Encoder-side data bits per layer, read back through the placement."""
    out = {}
    for j, lv in enumerate(symbol.format.ec_levels):
        pl = placement(symbol.version, lv, symbol.seed, j, symbol.randomized)
        out[j] = pl.read(symbol.layers[j])
    return out


def frame_bit_errors(result: FrameResult, symbol: HiqSymbol) -> tuple[np.ndarray, np.ndarray]:
    """(wrong bits, total bits) per layer; layers without a stream count as not evaluated."""
    n = symbol.n_layers
    wrong, total = np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
    if not result.localized or result.version != symbol.version:
        return wrong, total
    truth = truth_streams(symbol)
    for j, stream in result.streams.items():
        wrong[j] = int((stream != truth[j]).sum())
        total[j] = len(stream)
    return wrong, total


def frame_ber(result: FrameResult, symbol: HiqSymbol) -> float:
    wrong, total = frame_bit_errors(result, symbol)
    return float(wrong.sum() / total.sum()) if total.sum() else float("nan")


@dataclass
class Metrics:
    ber: float
    ber_per_layer: tuple
    dfr: float
    frames: int
    localized: int
    failed: int
    predictions_per_frame: float
    frames_to_success: tuple = ()

    @property
    def frames_mean(self) -> float:
        return float(np.mean(self.frames_to_success)) if self.frames_to_success else float("nan")


def compute_metrics(results: Sequence[FrameResult], truths: Sequence[HiqSymbol] | None = None,
                    frames_to_success: Sequence[int] = ()) -> Metrics:
    if len(results) == 0:
        raise UndefinedMetrics("no frames to score")
    localized = [r for r in results if r.localized]
    failed = sum(1 for r in localized if r.status != DECODED)
    dfr = failed / len(localized) if localized else float("nan")
    ber, per_layer = float("nan"), ()
    if truths is not None:
        n = max(t.n_layers for t in truths)
        wrong, total = np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
        for r, t in zip(results, truths):
            w, tot = frame_bit_errors(r, t)
            wrong[: len(w)] += w
            total[: len(tot)] += tot
        if total.sum():
            ber = float(wrong.sum() / total.sum())
            per_layer = tuple(float(w / t) if t else float("nan") for w, t in zip(wrong, total))
    ppf = float(np.mean([r.evaluations for r in localized])) if localized else 0.0
    return Metrics(ber, per_layer, dfr, len(results), len(localized), failed, ppf, tuple(frames_to_success))


def predictions_per_frame(dim: int, n_layers: int, family: str) -> int:
    """Classifier evaluations for one frame: K per module for QDA-family, n for LSVM-family."""
    per_module = (1 << n_layers) if family.startswith("qda") else n_layers
    return dim * dim * per_module


# --- benchmark -----------------------------------------------------------------------------

BENCH_FIELDS = ("classifier", "preset", "rgt", "frames", "localized", "ber", "dfr", "frames_mean", "ppf")


def run_benchmark(items: Sequence[CorpusItem], models: dict, use_rgt: Iterable[bool] = (True,),
                  seed: int = DEFAULT_SEED) -> list[dict]:
    """Single-frame BER/DFR for each classifier x preset x RGT setting."""
    rows = []
    presets = sorted({it.profile.preset for it in items})
    for name, model in models.items():
        for rgt in use_rgt:
            for preset in presets:
                subset = [it for it in items if it.profile.preset == preset]
                for it in subset:
                    if it.symbol.n_layers != model.n_layers:
                        raise LayerMismatch(
                            f"model {name} has {model.n_layers} layers, corpus item {it.index} has {it.symbol.n_layers}")
                results = [decode_frame(it.image, model, None,
                                        DecodeOptions(seed=it.symbol.seed, use_rgt=rgt,
                                                      randomized=it.symbol.randomized))
                           for it in subset]
                m = compute_metrics(results, [it.symbol for it in subset])
                rows.append({"classifier": name, "preset": preset, "rgt": int(rgt), "frames": m.frames,
                             "localized": m.localized, "ber": m.ber, "dfr": m.dfr,
                             "frames_mean": 1.0, "ppf": m.predictions_per_frame})
    return rows


def report_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def summarize(rows: Sequence[dict]) -> str:
    lines = [f"{'classifier':<10} {'preset':<13} {'rgt':>3} {'BER':>9} {'DFR':>7} {'ppf':>9}"]
    for r in rows:
        lines.append(f"{r['classifier']:<10} {r['preset']:<13} {r['rgt']:>3} {r['ber']:>9.5f} "
                     f"{r['dfr']:>7.3f} {r['ppf']:>9.0f}")
    return "\n".join(lines)


# --- localized corruption / accumulation experiments ------------------------------------

def corrupt_windows(layer_bits: np.ndarray, windows: int, rng: np.random.Generator,
                    size: int = 8, protect: np.ndarray | None = None, flip: float = 0.5,
                    region: int | None = None) -> np.ndarray:
    """Flip bits with probability ``flip`` inside ``windows`` random size x size module windows.

    ``flip = 0.5`` replaces the windows with random bits. With ``region`` set,
    every window of the call lands inside one random region x region area,
    modelling a local disturbance such as glare.
    """
    out = layer_bits.copy()
    n, dim, _ = out.shape
    span = dim - size + 1
    if region is not None:
        extent = min(max(region - size + 1, 1), span)
        r0, c0 = rng.integers(0, span - extent + 1, size=2)
    for _ in range(windows):
        if region is None:
            r, c = rng.integers(0, span, size=2)
        else:
            r, c = rng.integers(0, extent, size=2) + (r0, c0)
        hits = (rng.random((n, size, size)) < flip).astype(np.uint8)
        out[:, r:r + size, c:c + size] ^= hits
    if protect is not None:
        out[:, protect] = layer_bits[:, protect]
    return out


def frames_until_complete(symbol: HiqSymbol, frame_bits, max_frames: int = 50, accumulate: bool = True) -> int:
    """Frames consumed until the payload is recovered; ``max_frames + 1`` when it never is.

    ``frame_bits`` yields predicted (n, dim, dim) bit planes, one per frame.
    """
    session = ScanSession(seed=symbol.seed)
    known = {j: lv for j, lv in enumerate(symbol.format.ec_levels)}
    for k in range(1, max_frames + 1):
        bits = next(frame_bits)
        if accumulate:
            res = decode_bits(bits, symbol.n_layers, symbol.version, symbol.seed, symbol.randomized,
                              session.completed_layers(), known)
            session.accumulate(res)
            if session.complete:
                return k
        else:
            res = decode_bits(bits, symbol.n_layers, symbol.version, symbol.seed, symbol.randomized,
                              (), known)
            if res.status == DECODED:
                return k
    return max_frames + 1
