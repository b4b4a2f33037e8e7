import numpy as np
import pytest

from nrpca.core import FrameGeometry, assemble_data_matrix
from nrpca.preprocess import (PreprocessConfig, repeat_frames,
                              rescale_resolution, rescaled_geometry,
                              shift_pixels, square_video, to_grayscale)


def test_shift_endpoints():
    frames = np.array([[[0.0, 255.0]]])
    shifted, x_black, x_white = shift_pixels(frames, 5000.0)
    assert shifted[0, 0, 0] == 5000.0
    assert shifted[0, 0, 1] == 5255.0
    assert (x_black, x_white) == (5000.0, 5255.0)


def test_shift_rejects_nonpositive_delta():
    with pytest.raises(ValueError, match="positive"):
        shift_pixels(np.zeros((1, 2, 2)), 0.0)


def test_shift_rejects_out_of_range_input():
    with pytest.raises(ValueError, match=r"\[0, 255\]"):
        shift_pixels(np.full((1, 2, 2), 300.0), 10.0)


def test_shift_makes_everything_strictly_positive():
    rng = np.random.default_rng(1)
    frames = rng.integers(0, 256, size=(4, 3, 3)).astype(float)
    for delta in (0.5, 100.0, 5000.0):
        shifted, x_black, _ = shift_pixels(frames, delta)
        assert shifted.min() >= delta == x_black > 0


def test_shift_commutes_with_assembly():
    rng = np.random.default_rng(2)
    frames = rng.integers(0, 256, size=(3, 2, 4)).astype(float)
    shifted, x_black, x_white = shift_pixels(frames, 50.0)
    first = assemble_data_matrix(shifted, x_black, x_white)
    second = assemble_data_matrix(frames, 0.0, 255.0)
    np.testing.assert_array_equal(first.values, second.values + 50.0)


def test_rescaled_geometry_survey_scale():
    geometry, beta = rescaled_geometry(FrameGeometry(1920, 1080, 19623))
    assert beta == pytest.approx(0.0973, abs=5e-5)
    assert (geometry.d_m, geometry.d_n) == (187, 105)
    assert geometry.d_f == geometry.m  # squared exactly, via frame cycling


def test_rescaled_geometry_identity_when_already_square():
    g = FrameGeometry(4, 4, 16)
    geometry, beta = rescaled_geometry(g)
    assert geometry == g
    assert beta == 1.0


def test_rescaled_geometry_rejects_long_videos():
    with pytest.raises(ValueError, match="more frames"):
        rescaled_geometry(FrameGeometry(2, 2, 5))


def test_rescale_halves_eight_by_eight():
    rng = np.random.default_rng(3)
    frames = rng.uniform(10.0, 20.0, size=(16, 8, 8))
    out, geometry, beta = rescale_resolution(frames)
    assert beta == 0.5
    assert (geometry.d_m, geometry.d_n, geometry.d_f) == (4, 4, 16)
    # area averaging at an exact factor of two is the mean of 2x2 blocks
    blocks = frames.reshape(16, 4, 2, 4, 2).mean(axis=(2, 4))
    np.testing.assert_allclose(out, blocks, atol=1e-12)


def test_rescale_preserves_value_range():
    rng = np.random.default_rng(4)
    frames = rng.uniform(5000.0, 5255.0, size=(12, 5, 7))
    out, geometry, _ = rescale_resolution(frames)
    assert geometry.d_f == geometry.m
    assert out.min() >= 5000.0 - 1e-9
    assert out.max() <= 5255.0 + 1e-9


def test_rescale_cycles_frames_to_match_pixel_count():
    frames = np.arange(99, dtype=float).reshape(99, 1, 1) * np.ones((99, 10, 10))
    out, geometry, _ = rescale_resolution(frames)
    # rounding lands on 10x10 = 100 pixels; one frame is cycled in
    assert (geometry.d_m, geometry.d_n, geometry.d_f) == (10, 10, 100)
    assert out.shape[0] == 100
    np.testing.assert_array_equal(out[99], out[0])


def test_rescale_trims_frames_to_match_pixel_count():
    frames = np.ones((1971, 50, 40))
    out, geometry, _ = rescale_resolution(frames)
    # rounding lands on 50x39 = 1950 pixels; trailing frames are trimmed
    assert (geometry.d_m, geometry.d_n, geometry.d_f) == (50, 39, 1950)
    assert out.shape[0] == 1950


def test_repeat_frames_cycles_and_truncates():
    frames = np.stack([np.full((2, 2), 1.0), np.full((2, 2), 2.0)])
    out = repeat_frames(frames)
    assert out.shape == (4, 2, 2)
    np.testing.assert_array_equal(out[:, 0, 0], [1.0, 2.0, 1.0, 2.0])


def test_repeat_frames_identity_when_square():
    frames = np.zeros((4, 2, 2))
    out = repeat_frames(frames)
    np.testing.assert_array_equal(out, frames)


def test_repeat_single_frame():
    frames = np.array([[[3.0, 4.0]]])
    out = repeat_frames(frames)
    assert out.shape == (2, 1, 2)
    np.testing.assert_array_equal(out[0], out[1])


def test_repeat_rejects_long_videos():
    with pytest.raises(ValueError, match="cannot shorten"):
        repeat_frames(np.zeros((5, 2, 2)))


def test_square_video_strategies():
    frames = np.ones((2, 2, 2))
    for strategy, expected_df in [("repeat-frames", 4), ("none", 2)]:
        out, geometry, _ = square_video(frames, strategy)
        assert out.shape[0] == expected_df == geometry.d_f
    out, geometry, beta = square_video(np.ones((16, 8, 8)), "rescale-resolution")
    assert (geometry.d_m, geometry.d_n) == (4, 4)
    with pytest.raises(ValueError, match="strategy"):
        square_video(frames, "bogus")


def test_to_grayscale_averages_channels():
    rgb = np.zeros((2, 2, 2, 3))
    rgb[..., 0] = 30.0
    rgb[..., 1] = 60.0
    rgb[..., 2] = 90.0
    np.testing.assert_array_equal(to_grayscale(rgb), np.full((2, 2, 2), 60.0))
    mono = np.ones((2, 2, 2))
    np.testing.assert_array_equal(to_grayscale(mono), mono)


def test_preprocess_config_validation():
    config = PreprocessConfig()
    assert config.delta_x == 5000.0
    with pytest.raises(ValueError):
        PreprocessConfig(delta_x=-1.0)
    with pytest.raises(ValueError):
        PreprocessConfig(square_strategy="squish")
