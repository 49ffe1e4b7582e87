import numpy as np
import pytest

from conftest import clean_model
from hiq.colorrec import train_lsvm
from hiq.ecc import block_layout
from hiq.errors import LayerMismatch, UndefinedMetrics
from hiq.pipeline import (
    DECODED,
    FORMAT_UNREADABLE,
    LOCALIZATION_FAILED,
    PARTIAL,
    DecodeOptions,
    FrameResult,
    ScanSession,
    compute_metrics,
    corrupt_windows,
    decode_bits,
    decode_frame,
    frame_ber,
    frames_until_complete,
    predictions_per_frame,
    report_csv,
    run_benchmark,
)
from hiq.raster import CorpusSpec, RasterImage, apply_warp, render, synth_corpus
from hiq.geometry import homography_from_points
from hiq.symbology import encode, layout, placement


def payload_for(n, version, level="L", seed=0):
    cap = n * block_layout(version, level).max_payload
    return np.random.default_rng(seed).integers(0, 256, cap, dtype=np.uint8).tobytes()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_clean_render_decodes(n):
    data = payload_for(n, 8)
    sym = encode(data, n, None, 8)
    res = decode_frame(render(sym), clean_model(n))
    assert res.status == DECODED
    assert res.payload == data
    assert res.version == 8 and res.n_layers == n
    assert frame_ber(res, sym) == 0.0


def test_decode_without_rgt_and_with_known_version():
    sym = encode(b"no rgt", 2, None, 12)
    model = clean_model(2)
    assert decode_frame(render(sym), model, options=DecodeOptions(use_rgt=False)).payload == b"no rgt"
    assert decode_frame(render(sym), model, options=DecodeOptions(version=12)).payload == b"no rgt"


def test_sequential_placement_needs_matching_option():
    sym = encode(b"plain order", 2, None, 5, randomized=False)
    model = clean_model(2)
    assert decode_frame(render(sym), model, options=DecodeOptions(randomized=False)).payload == b"plain order"
    assert decode_frame(render(sym), model).status != DECODED


def test_perspective_view_decodes():
    sym = encode(b"tilted", 3, None, 10)
    img = render(sym)
    w, h = img.width, img.height
    corners = np.array([[0, 0], [w, 0], [w, h], [0, h]], float)
    H = homography_from_points(corners, corners + [[10, 4], [-6, 9], [-12, -5], [7, -8]])
    assert decode_frame(apply_warp(img, H), clean_model(3)).payload == b"tilted"


def test_layer_count_mismatch_is_format_unreadable():
    sym = encode(b"three", 3, None, 5)
    res = decode_frame(render(sym), clean_model(2))
    assert res.status == FORMAT_UNREADABLE
    assert "3 layers" in res.message


def test_blank_image_fails_localization():
    res = decode_frame(RasterImage(np.ones((200, 200, 3))), clean_model(1))
    assert res.status == LOCALIZATION_FAILED
    assert not res.localized


def test_evaluations_follow_the_prediction_budget():
    sym = encode(b"budget", 2, None, 4)
    res = decode_frame(render(sym), clean_model(2))
    assert res.evaluations == predictions_per_frame(sym.dim, 2, "qda") == sym.dim ** 2 * 4
    assert predictions_per_frame(125, 2, "lsvm") == 125 ** 2 * 2


def break_blocks(sym, layer, blocks, rng):
    """Randomize every module of the given RS blocks in one layer."""
    pl = placement(sym.version, sym.format.ec_levels[layer], sym.seed, layer, sym.randomized)
    bits = sym.layers.copy()
    pos = pl.positions[np.isin(pl.block_of, blocks)]
    bits[layer, pos[:, 0], pos[:, 1]] = rng.integers(0, 2, len(pos))
    return bits


def test_session_accumulates_disjoint_block_failures(rng):
    data = payload_for(2, 10, "L")
    sym = encode(data, 2, "L,L", 10)
    nb = block_layout(10, "L").num_blocks
    first, second = list(range(nb // 2)), list(range(nb // 2, nb))
    known = dict(enumerate(sym.format.ec_levels))
    f1 = decode_bits(break_blocks(sym, 0, first, rng), 2, 10, sym.seed, known_levels=known)
    f2 = decode_bits(break_blocks(sym, 0, second, rng), 2, 10, sym.seed, known_levels=known)
    assert f1.status == PARTIAL and f2.status == PARTIAL
    session = ScanSession(seed=sym.seed)
    session.accumulate(f1)
    assert session.completed_layers() == (1,) and not session.complete
    session.accumulate(f2)
    assert session.complete and session.payload == data
    # completion is absorbing
    session.accumulate(FrameResult(LOCALIZATION_FAILED))
    assert session.complete and session.frames == 3


def test_session_skips_completed_layers_on_later_frames():
    sym = encode(b"skip", 2, None, 3)
    model = clean_model(2)
    session = ScanSession(seed=sym.seed)
    first = session.scan(render(sym), model)
    assert first.status == DECODED and session.complete
    second = session.scan(render(sym), model)
    assert second.skipped_layers == (0, 1)


def test_session_rejects_frames_of_another_symbol():
    session = ScanSession()
    session.accumulate(FrameResult(PARTIAL, version=9, n_layers=1, ec_levels=(None,)))
    session.accumulate(FrameResult(PARTIAL, version=3, n_layers=1, ec_levels=(None,)))
    assert session.rejected == 1 and session.version == 9


def test_frames_until_complete_with_and_without_accumulation():
    sym = encode(payload_for(1, 6), 1, "L", 6)
    rng = np.random.default_rng(1)
    protect = layout(6).roles != 0

    def frames():
        while True:
            yield corrupt_windows(sym.layers, 3, rng, protect=protect)

    with_acc = frames_until_complete(sym, frames(), 40, accumulate=True)
    without = frames_until_complete(sym, frames(), 40, accumulate=False)
    assert 1 <= with_acc <= without


def test_corrupt_windows_respects_protection_and_region():
    sym = encode(b"w", 1, "L", 10)
    rng = np.random.default_rng(0)
    protect = layout(10).roles != 0
    out = corrupt_windows(sym.layers, 5, rng, flip=1.0, region=20, protect=protect)
    diff = (out != sym.layers)[0]
    assert not diff[protect].any()
    rows, cols = np.nonzero(diff)
    assert rows.max() - rows.min() < 20 and cols.max() - cols.min() < 20
    assert np.array_equal(corrupt_windows(sym.layers, 0, rng), sym.layers)


def test_metrics_from_frames():
    sym = encode(b"metrics", 2, None, 4)
    model = clean_model(2)
    results = [decode_frame(render(sym), model), FrameResult(LOCALIZATION_FAILED)]
    m = compute_metrics(results, [sym, sym])
    assert m.frames == 2 and m.localized == 1 and m.failed == 0
    assert m.dfr == 0.0 and m.ber == 0.0
    assert m.predictions_per_frame == sym.dim ** 2 * 4
    with pytest.raises(UndefinedMetrics):
        compute_metrics([])


def test_benchmark_rows_and_csv():
    items = synth_corpus(CorpusSpec(versions=(4,), n_layers=2, presets=("fluorescent",)), 2, seed=2)
    rows = run_benchmark(items, {"qda": clean_model(2)}, (True, False))
    assert [(r["classifier"], r["rgt"]) for r in rows] == [("qda", 1), ("qda", 0)]
    assert all(r["localized"] == 2 for r in rows)
    text = report_csv(rows)
    assert text.splitlines()[0] == "classifier,preset,rgt,frames,localized,ber,dfr,frames_mean,ppf"
    with pytest.raises(LayerMismatch):
        run_benchmark(items, {"qda": clean_model(1)})


def test_lsvm_model_decodes_through_the_pipeline():
    from conftest import clean_training_set

    X, y = clean_training_set(2)
    model = train_lsvm(X, y, 2)
    sym = encode(b"lsvm path", 2, None, 5)
    res = decode_frame(render(sym), model)
    assert res.payload == b"lsvm path"
    assert res.evaluations == sym.dim ** 2 * 2
