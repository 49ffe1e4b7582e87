"""Command-line front door: encode, render, distort, corpus, train, decode, session, bench.

Exit codes: 0 success, 2 usage, 3 data error, 4 decode failure (including a
bench run whose ``--assert`` thresholds do not hold).

A ``--config`` file holds ``key = value`` lines whose keys are option names
(dashes or underscores). Precedence is flags > config file > defaults.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import raster
from .colorrec import METHODS, TrainConfig, collect_samples, load_model, save_model, train
from .detect import binarize
from .ecc import EcLevel, block_layout
from .errors import CapacityExceeded, HiqError
from .pipeline import (
    DECODED,
    DecodeOptions,
    ScanSession,
    corrupt_windows,
    decode_frame,
    frames_until_complete,
    report_csv,
    run_benchmark,
    summarize,
)
from .symbology import DEFAULT_SEED, capacity_table, encode
from .symbology import container as symbol_container
from .symbology.layout import layout

log = logging.getLogger("hiq")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DECODE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class DecodeFailed(Exception):
    pass


# --- config files ---------------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """Install config values as parser defaults, converted like the matching flag."""
    defaults = {}
    for action in parser._actions:
        if action.dest not in config or not action.option_strings:
            continue
        value = config[action.dest]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[action.dest] = value.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*"):
            conv = action.type or str
            defaults[action.dest] = [conv(v) for v in value.split()]
        else:
            defaults[action.dest] = action.type(value) if action.type else value
    parser.set_defaults(**defaults)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _range(text: str) -> tuple[float, float]:
    vals = _floats(text)
    return (vals[0], vals[0]) if len(vals) == 1 else (vals[0], vals[1])


def corpus_spec_from_config(config: dict[str, str]) -> raster.CorpusSpec:
    """Build a CorpusSpec from ``key = value`` text (ranges as ``lo,hi``)."""
    fields = raster.CorpusSpec.__dataclass_fields__
    kwargs = {}
    for key, value in config.items():
        if key not in fields:
            raise UsageError(f"unknown corpus spec key {key!r}")
        if key == "versions":
            kwargs[key] = tuple(int(v) for v in value.split(","))
        elif key in ("n_layers", "module_px", "quiet"):
            kwargs[key] = int(value)
        elif key == "ec_levels":
            kwargs[key] = value
        elif key == "presets":
            kwargs[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        else:
            kwargs[key] = _range(value)
    return raster.CorpusSpec(**kwargs)


# --- subcommands --------------------------------------------------------------------

def cmd_encode(args) -> int:
    payload = Path(args.payload).read_bytes()
    levels = args.ec.split(",")
    if len(levels) == 1:
        levels = levels * args.layers
    try:
        symbol = encode(payload, args.layers, levels, args.version, args.placement_seed,
                        not args.no_randomize)
    except CapacityExceeded as exc:
        print(format_capacity(args.version, args.layers, levels, len(payload)), file=sys.stderr)
        raise exc
    symbol_container.save(symbol, args.output)
    log.info("wrote %s: version %d, %d layers, %d bytes", args.output, args.version, args.layers, len(payload))
    return EXIT_OK


def format_capacity(version: int, n_layers: int, levels, size: int) -> str:
    requested = sum(block_layout(version, EcLevel.parse(lv)).max_payload for lv in levels)
    lines = [f"payload of {size} bytes does not fit version {version} with {n_layers} layer(s)",
             f"  requested levels {','.join(levels)}: max {requested} bytes"]
    for level, cap in capacity_table(version, n_layers).items():
        lines.append(f"  all layers at {level}: max {cap} bytes")
    return "\n".join(lines)


def cmd_render(args) -> int:
    symbol = symbol_container.load(args.symbol)
    img = raster.render(symbol, args.module_px, args.quiet)
    raster.save_image(img, args.output)
    return EXIT_OK


def cmd_distort(args) -> int:
    symbol = symbol_container.load(args.symbol)
    img = raster.render(symbol, args.module_px, args.quiet)
    rng = np.random.default_rng(args.seed)
    strength = args.cci_strength
    cci = (1 - strength) * np.eye(3) + strength * np.asarray(raster.DEFAULT_CCI)
    light = raster.PRESETS.get(args.preset, {"gains": (1.0, 1.0, 1.0), "gradient": (0.0, 0.0)})
    warp = raster.random_warp(rng, img.width, img.height, args.perspective, args.rotation)
    profile = raster.DistortionProfile(
        cci_matrix=tuple(map(tuple, cci.tolist())),
        gains=tuple(light["gains"]),
        gradient=tuple(light["gradient"]),
        cmi_weights=_floats(args.alpha),
        warp=tuple(map(tuple, warp.tolist())),
        noise_sigma=(args.noise,) * 3,
        blur_sigma=args.blur,
        preset=args.preset,
    )
    out = raster.distort(img, symbol, profile, rng)
    raster.save_image(out, args.output)
    return EXIT_OK


def cmd_corpus(args) -> int:
    spec = corpus_spec_from_config(read_config(args.spec)) if args.spec else raster.CorpusSpec()
    items = raster.synth_corpus(spec, args.count, args.seed)
    raster.write_corpus(items, args.output)
    log.info("wrote %d items to %s", len(items), args.output)
    return EXIT_OK


def cmd_train(args) -> int:
    items = raster.read_corpus(args.corpus)
    if not items:
        raise UsageError(f"corpus {args.corpus} is empty")
    n = items[0].symbol.n_layers
    X, y = collect_samples(items, args.augment, args.sigma_w, args.per_image, args.seed)
    cfg = TrainConfig(C=args.C, max_iters=args.max_iters, tol=args.tol, augment_count=args.augment,
                      sigma_w=args.sigma_w)
    model = train(args.algo, X, y, n, cfg)
    save_model(model, args.output)
    log.info("trained %s on %d samples -> %s", args.algo, len(y), args.output)
    return EXIT_OK


def _decode_options(args) -> DecodeOptions:
    return DecodeOptions(seed=args.placement_seed, use_rgt=not args.no_rgt,
                         randomized=not args.no_randomize, version=args.version)


def _emit_payload(payload: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()


def cmd_decode(args) -> int:
    img = raster.load_image(args.image)
    model = load_model(args.model)
    if args.dump_bits:
        raster.save_bitimage_pbm(binarize(img).bits, args.dump_bits)
    result = decode_frame(img, model, None, _decode_options(args))
    log.info("status %s version %s %s", result.status, result.version, result.message)
    if result.status != DECODED:
        raise DecodeFailed(f"{args.image}: {result.status} {result.message}".strip())
    _emit_payload(result.payload, args.output)
    return EXIT_OK


def cmd_session(args) -> int:
    model = load_model(args.model)
    session = ScanSession(seed=args.placement_seed)
    options = _decode_options(args)
    for path in args.images:
        result = session.scan(raster.load_image(path), model, options)
        log.info("%s: %s, layers done %s", path, result.status, session.completed_layers())
        if session.complete:
            break
    if not session.complete:
        raise DecodeFailed(f"session incomplete after {session.frames} frame(s); "
                           f"layers recovered {list(session.completed_layers())}")
    print(f"complete after {session.frames} frame(s)", file=sys.stderr)
    _emit_payload(session.payload, args.output)
    return EXIT_OK


def accumulation_rows(items, windows: int, max_frames: int, seed: int,
                      flip: float = 0.5, region: int | None = 24) -> list[dict]:
    """Frames-to-success with and without placement randomization under windowed corruption."""
    rows = []
    for randomized in (True, False):
        rng = np.random.default_rng(seed)
        counts = []
        for it in items:
            sym = it.symbol
            levels = [lv.value for lv in sym.format.ec_levels]
            symbol = encode(it.payload, sym.n_layers, levels, sym.version, sym.seed, randomized)
            protect = layout(sym.version).roles != 0

            def frames():
                while True:
                    yield corrupt_windows(symbol.layers, windows, rng, protect=protect,
                                          flip=flip, region=region)

            counts.append(frames_until_complete(symbol, frames(), max_frames))
        rows.append({"classifier": "accumulation", "preset": "rand-on" if randomized else "rand-off",
                     "rgt": 1, "frames": len(counts), "localized": len(counts), "ber": float("nan"),
                     "dfr": float(np.mean(np.array(counts) > max_frames)),  # per session
                     "frames_mean": float(np.mean(counts)), "ppf": float("nan")})
    return rows


def check_assertions(rows: list[dict], spec: dict) -> list[str]:
    """Failed threshold descriptions; empty when every check holds."""
    def mean_metric(classifier, metric):
        vals = [r[metric] for r in rows if r["classifier"] == classifier and r["rgt"] == 1]
        vals = [v for v in vals if not np.isnan(v)]
        return float(np.mean(vals)) if vals else float("nan")

    failures = []
    for chk in spec.get("check", []):
        value = mean_metric(chk["classifier"], chk["metric"])
        if "max" in chk and not value <= chk["max"]:
            failures.append(f"{chk['classifier']} {chk['metric']} = {value:.6g} > {chk['max']}")
        if "min" in chk and not value >= chk["min"]:
            failures.append(f"{chk['classifier']} {chk['metric']} = {value:.6g} < {chk['min']}")
    for rel in spec.get("relative", []):
        better = mean_metric(rel["better"], rel["metric"])
        base = mean_metric(rel["baseline"], rel["metric"])
        if not better <= rel["ratio"] * base:
            failures.append(f"{rel['better']} {rel['metric']} {better:.6g} > "
                            f"{rel['ratio']} x {rel['baseline']} {base:.6g}")
    return failures


def cmd_bench(args) -> int:
    import tomli

    for path in [args.corpus, *args.model] + ([args.assert_file] if args.assert_file else []):
        if not Path(path).exists():
            raise FileNotFoundError(f"no such file or directory: {path}")
    items = raster.read_corpus(args.corpus)
    models = {}
    for path in args.model:
        model = load_model(path)
        name = model.kind if model.kind not in models else Path(path).stem
        models[name] = model
    ablate = {a.strip() for a in args.ablate.split(",") if a.strip()} if args.ablate else set()
    unknown = ablate - {"rgt", "rand"}
    if unknown:
        raise UsageError(f"unknown ablation(s): {sorted(unknown)}")
    rgt = (True, False) if "rgt" in ablate else (True,)
    rows = run_benchmark(items, models, rgt)
    if "rand" in ablate:
        rows += accumulation_rows(items, args.windows, args.max_frames, args.seed,
                                  args.flip, args.region or None)
    text = report_csv(rows)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    log.info("\n%s", summarize([r for r in rows if r["classifier"] != "accumulation"]))
    if args.assert_file:
        spec = tomli.loads(Path(args.assert_file).read_text(encoding="utf-8"))
        failures = check_assertions(rows, spec)
        for f in failures:
            print(f"ASSERT FAIL: {f}", file=sys.stderr)
        if failures:
            return EXIT_DECODE
        print("all acceptance thresholds hold", file=sys.stderr)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------

def _add_decode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--placement-seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--no-randomize", action="store_true", help="symbol uses sequential placement")
    p.add_argument("--no-rgt", action="store_true", help="4-point homography only")
    p.add_argument("--version", type=int, default=None, help="skip version estimation")
    p.add_argument("-o", "--output", help="write the payload here instead of stdout")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    # shared options may sit before or after the subcommand; SUPPRESS keeps the
    # subparser from overwriting a value given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed for every random draw (default 0)")
    common.add_argument("--verbose", "-v", action="count", default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value file providing option defaults")

    parser = argparse.ArgumentParser(prog="hiq", description="Layered color 2D barcode toolkit.",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("encode", parents=[common], help="payload file -> symbol container")
    p.add_argument("payload")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--ec", default="L", help="one level for all layers or a comma list, e.g. L,L,M")
    p.add_argument("--version", type=int, default=40)
    p.add_argument("--placement-seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--no-randomize", action="store_true")
    p.set_defaults(func=cmd_encode)
    subs["encode"] = p

    p = sub.add_parser("render", parents=[common], help="symbol container -> clean image")
    p.add_argument("symbol")
    p.add_argument("-o", "--output", required=True, help=".png or .ppm")
    p.add_argument("--module-px", type=int, default=4)
    p.add_argument("--quiet", type=int, default=4)
    p.set_defaults(func=cmd_render)
    subs["render"] = p

    p = sub.add_parser("distort", parents=[common], help="symbol container -> distorted image")
    p.add_argument("symbol")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--module-px", type=int, default=4)
    p.add_argument("--quiet", type=int, default=4)
    p.add_argument("--alpha", default="1,0,0,0,0", help="CMI weights center,top,bottom,left,right")
    p.add_argument("--cci-strength", type=float, default=0.0)
    p.add_argument("--preset", default="none", choices=["none", *raster.PRESETS])
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--blur", type=float, default=0.0)
    p.add_argument("--perspective", type=float, default=0.0)
    p.add_argument("--rotation", type=float, default=0.0, help="degrees")
    p.set_defaults(func=cmd_distort)
    subs["distort"] = p

    p = sub.add_parser("corpus", parents=[common], help="synthesize a labeled corpus directory")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--spec", help="key = value corpus spec file")
    p.set_defaults(func=cmd_corpus)
    subs["corpus"] = p

    p = sub.add_parser("train", parents=[common], help="train a color classifier on a corpus")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--algo", choices=METHODS, default="qda")
    p.add_argument("--augment", type=int, default=5, help="noisy-white copies per module")
    p.add_argument("--sigma-w", type=float, default=0.03)
    p.add_argument("--per-image", type=int, default=None, help="modules sampled per image")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_train)
    subs["train"] = p

    p = sub.add_parser("decode", parents=[common], help="decode one image")
    p.add_argument("image")
    _add_decode_flags(p)
    p.add_argument("--dump-bits", help="write the binarized image as PBM")
    p.set_defaults(func=cmd_decode)
    subs["decode"] = p

    p = sub.add_parser("session", parents=[common], help="accumulate blocks over several frames")
    p.add_argument("images", nargs="+")
    _add_decode_flags(p)
    p.set_defaults(func=cmd_session)
    subs["session"] = p

    p = sub.add_parser("bench", parents=[common], help="BER/DFR report over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--ablate", default="", help="comma list from {rgt, rand}")
    p.add_argument("--assert", dest="assert_file", help="TOML thresholds; exit 4 if any fails")
    p.add_argument("--windows", type=int, default=3, help="8x8 corrupted windows per frame (rand ablation)")
    p.add_argument("--flip", type=float, default=0.5, help="bit flip probability inside a window")
    p.add_argument("--region", type=int, default=24,
                   help="side of the area all windows of a frame fall in (0 = whole symbol)")
    p.add_argument("--max-frames", type=int, default=30)
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    subs["bench"] = p
    return parser, subs


GLOBAL_DEFAULTS = {"seed": 0, "verbose": 0, "config": None}


def _parse(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    return args


def main(argv=None) -> int:
    parser, subs = build_parser()
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.config:
            _apply_config(subs[args.command], read_config(args.config))
            args = _parse(parser, argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecodeFailed as exc:
        print(f"decode failed: {exc}", file=sys.stderr)
        return EXIT_DECODE
    except (HiqError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
