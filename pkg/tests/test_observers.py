import io as _io

import numpy as np
import pytest

from octrack import io
from octrack.observers import (
    DetectorConfig,
    GradientPeakDetector,
    ObservationReplay,
    detect_boundaries,
    noisy_oracle,
    oracle_pairs,
    parabolic_offset,
    replay_next,
)
from octrack.signal_model import FormatError, LayerId, Status
from octrack.synth import SyntheticScene, preset, render_frame


def quiet_scene(**kw):
    base = dict(width_px=64, background_noise_sigma=0.0, sigma_obs=0.0)
    base.update(kw)
    return SyntheticScene(**base)


def test_parabolic_offset_symmetric_and_skewed():
    assert parabolic_offset(1.0, 2.0, 1.0) == 0.0
    assert parabolic_offset(-1.0, 1.0, 1.0) == 0.5
    assert parabolic_offset(1.0, 1.0, 1.0) == 0.0


def test_two_band_column():
    scene = quiet_scene(epi_base=100.0, dm_base=300.0)
    frame, _ = render_frame(scene)
    epi, dm = detect_boundaries(frame.column(0))
    assert abs(epi.depth_px - 100.0) < 1.0 and abs(dm.depth_px - 300.0) < 1.0
    assert epi.depth_px < dm.depth_px


def test_all_zero_column_with_threshold():
    epi, dm = detect_boundaries(np.zeros(512), cfg=DetectorConfig(gradient_threshold=1.0))
    assert epi.status is Status.DROPOUT and dm.status is Status.DROPOUT


def test_single_band_column():
    rows = np.arange(512.0)
    col = 200 * np.exp(-((rows - 100.0) ** 2) / 18)
    epi, dm = detect_boundaries(col, cfg=DetectorConfig(gradient_threshold=1e-3))
    assert epi.status is Status.VALID and abs(epi.depth_px - 100.0) < 1.0
    assert dm.status is Status.DROPOUT


def test_short_column_rejected():
    with pytest.raises(ValueError):
        detect_boundaries(np.zeros(59))


def test_tie_breaks_to_shallower_row():
    col = np.zeros(200)
    col[20:] = 1.0
    col[60:] = 2.0
    epi, _ = detect_boundaries(col, cfg=DetectorConfig(smoothing_radius=0))
    assert epi.depth_px < 30


def test_anchored_search_follows_previous():
    scene = quiet_scene(epi_base=150.0, dm_base=350.0)
    frame, _ = render_frame(scene)
    epi, dm = detect_boundaries(frame.column(3), previous=(148.0, 352.0))
    assert abs(epi.depth_px - 150) < 0.25 and abs(dm.depth_px - 350) < 0.25
    assert epi.column_index == 3


def test_noiseless_frame_within_quarter_pixel():
    scene = quiet_scene(width_px=128, motion_amplitude=12.0, motion_period=50.0)
    frame, truth = render_frame(scene)
    got = GradientPeakDetector().fit().transform(frame)
    assert np.abs(got - truth).max() < 0.25


def write_rows(text):
    return ObservationReplay(_io.StringIO("layer,column,depth_px,status\n" + text))


def test_replay_pair_and_dropout():
    r = write_rows("dm,0,300.5,valid\nepithelium,0,100,valid\nepithelium,1,,dropout\ndm,1,,dropout\n")
    epi, dm = replay_next(r)
    assert epi.layer is LayerId.EPITHELIUM and dm.depth_px == 300.5
    epi, dm = replay_next(r)
    assert epi.status is Status.DROPOUT
    assert replay_next(r) is None


def test_replay_missing_column():
    r = write_rows("epithelium,0,1,valid\ndm,0,2,valid\nepithelium,2,1,valid\ndm,2,2,valid\n")
    r.replay_next()
    with pytest.raises(FormatError) as exc:
        r.replay_next()
    assert exc.value.column == 2


def test_replay_missing_layer_and_malformed():
    with pytest.raises(FormatError):
        write_rows("epithelium,0,1,valid\nepithelium,1,1,valid\n").replay_next()
    with pytest.raises(FormatError):
        write_rows("epithelium,0,abc,valid\ndm,0,1,valid\n").replay_next()
    with pytest.raises(FormatError):
        write_rows("cornea,0,1,valid\n").replay_next()


def test_replay_roundtrip(tmp_path):
    pairs = list(oracle_pairs(preset("dropoutjagged", seed=4)))
    io.write_observations(tmp_path / "o.csv", pairs)
    with ObservationReplay(tmp_path / "o.csv") as reader:
        back = list(reader)
    assert len(back) == len(pairs)
    for a, b in zip(pairs, back):
        for x, y in zip(a, b):
            assert x.status == y.status and x.column_index == y.column_index
            if x.is_valid:
                assert x.depth_px == y.depth_px


def test_oracle_zero_noise_equals_truth():
    scene = quiet_scene(motion_amplitude=5.0)
    from octrack.synth import ground_truth

    for k in range(scene.width_px):
        epi, dm = noisy_oracle(scene, k)
        assert (epi.depth_px, dm.depth_px) == ground_truth(scene, k)


def test_oracle_dropout_interval_and_range():
    scene = quiet_scene(dropout_intervals=((10, 20),))
    assert all(o.status is Status.DROPOUT for o in noisy_oracle(scene, 15))
    assert noisy_oracle(scene, 20)[0].is_valid
    with pytest.raises(IndexError):
        noisy_oracle(scene, 64)


def test_oracle_noise_std_monte_carlo():
    scene = SyntheticScene(width_px=10_000, sigma_obs=3.0)
    resid = np.array([noisy_oracle(scene, k)[0].depth_px - 120.0 for k in range(scene.width_px)])
    assert abs(resid.std() - 3.0) < 0.1


def test_oracle_is_pure():
    scene = preset("dropoutjagged", seed=2)
    assert noisy_oracle(scene, 77, seed=5) == noisy_oracle(scene, 77, seed=5)
    assert noisy_oracle(scene, 77, seed=5) != noisy_oracle(scene, 77, seed=6)


def test_oracle_jag_bounded():
    scene = quiet_scene(jag_events=((7, 30.0),))
    epi, dm = noisy_oracle(scene, 7)
    assert 0 < abs(epi.depth_px - 120.0) <= 30.0
    assert abs(dm.depth_px - 330.0) <= 30.0
