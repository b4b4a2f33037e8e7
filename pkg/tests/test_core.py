import numpy as np
import pytest

from nrpca.core import (DataMatrix, Decomposition, FrameGeometry,
                        assemble_data_matrix, frame_of_column, index_of_pixel,
                        pixel_of_index, residual_sets, vectorize_frame)
from nrpca.synth import balanced_decomposition

TOY_FRAMES = [
    [[256.0, 1.0], [256.0, 1.0]],
    [[1.0, 256.0], [256.0, 256.0]],
]
TOY_MATRIX = np.array([
    [256.0, 1.0],
    [256.0, 256.0],
    [1.0, 256.0],
    [1.0, 256.0],
])
TOY_FOREGROUND = {(3, 1), (4, 1), (1, 2)}


def toy_data():
    return assemble_data_matrix(TOY_FRAMES, x_black=1.0, x_white=256.0)


def test_vectorize_toy_first_frame():
    g = FrameGeometry(2, 2, 2)
    np.testing.assert_array_equal(
        vectorize_frame(TOY_FRAMES[0], g), [256.0, 256.0, 1.0, 1.0]
    )


def test_vectorize_toy_second_frame():
    g = FrameGeometry(2, 2, 2)
    np.testing.assert_array_equal(
        vectorize_frame(TOY_FRAMES[1], g), [1.0, 256.0, 256.0, 256.0]
    )


def test_vectorize_single_pixel():
    g = FrameGeometry(1, 1, 1)
    np.testing.assert_array_equal(vectorize_frame([[7.5]], g), [7.5])


def test_vectorize_rejects_wrong_shape():
    with pytest.raises(ValueError, match="shape"):
        vectorize_frame(np.zeros((3, 2)), FrameGeometry(2, 2, 1))


def test_pixel_of_index_two_by_two_table():
    # Enumerate the correspondence on a 2x2 frame directly: vectorize a frame
    # whose entry at (i, j) encodes the pair, then read the table back.
    g = FrameGeometry(2, 2, 1)
    coded = [[11, 12], [21, 22]]
    vec = vectorize_frame(coded, g)
    table = {h: divmod(int(vec[h - 1]), 10) for h in range(1, 5)}
    assert table[3] == (1, 2)
    for h in range(1, 5):
        assert pixel_of_index(h, g) == table[h]


def test_pixel_of_index_first_and_last():
    for d_m, d_n in [(1, 1), (3, 4), (7, 2)]:
        g = FrameGeometry(d_m, d_n, 1)
        assert pixel_of_index(1, g) == (1, 1)
        assert pixel_of_index(g.m, g) == (d_m, d_n)


def test_pixel_of_index_out_of_range():
    g = FrameGeometry(2, 3, 1)
    for h in (0, 7):
        with pytest.raises(ValueError):
            pixel_of_index(h, g)


def test_index_round_trip_random_geometries():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = FrameGeometry(int(rng.integers(1, 9)), int(rng.integers(1, 9)), 1)
        for h in range(1, g.m + 1):
            i, j = pixel_of_index(h, g)
            assert index_of_pixel(i, j, g) == h


def test_assemble_toy_matrix():
    data = toy_data()
    np.testing.assert_array_equal(data.values, TOY_MATRIX)
    assert data.geometry == FrameGeometry(2, 2, 2)


def test_assemble_single_constant_frame():
    data = assemble_data_matrix([np.full((3, 2), 9.0)], x_black=1.0, x_white=10.0)
    np.testing.assert_array_equal(data.values, np.full((6, 1), 9.0))


def test_assemble_rejects_out_of_range_pixel():
    frames = np.full((2, 2, 2), 5000.0)
    frames[1, 0, 1] = 0.0
    with pytest.raises(ValueError, match=r"i=1, j=2, k=2"):
        assemble_data_matrix(frames, x_black=5000.0, x_white=5255.0)


def test_assemble_rejects_empty():
    with pytest.raises(ValueError, match="nonempty"):
        assemble_data_matrix([], x_black=0.0, x_white=1.0)


def test_frame_accessor_round_trips():
    data = toy_data()
    np.testing.assert_array_equal(data.frame(1), TOY_FRAMES[0])
    np.testing.assert_array_equal(data.frame(2), TOY_FRAMES[1])
    np.testing.assert_array_equal(data.frames(), np.asarray(TOY_FRAMES))


def test_frame_of_column_inverts_vectorize():
    g = FrameGeometry(3, 4, 1)
    rng = np.random.default_rng(3)
    frame = rng.uniform(0, 1, size=(3, 4))
    np.testing.assert_array_equal(frame_of_column(vectorize_frame(frame, g), g), frame)


def test_residual_sets_exact_fit_has_empty_foreground():
    u = np.array([2.0, 3.0, 5.0])
    v = np.array([1.0, 4.0])
    X = DataMatrix(np.outer(u, v), FrameGeometry(3, 1, 2), 0.0, 30.0)
    sparse, sets = residual_sets(X, Decomposition(u, v), eps_s=0.0)
    assert len(sparse) == 0
    assert sets.foreground_count() == 0


def test_residual_sets_toy_foreground():
    data = toy_data()
    u, v = balanced_decomposition(np.full(4, 256.0), 2)
    sparse, sets = residual_sets(data, Decomposition(u, v), eps_s=0.5)
    assert sparse.support() == TOY_FOREGROUND
    expected = {(1, 1), (2, 1), (2, 2), (3, 2), (4, 2)}
    assert sets.background_pixels(1) == {pixel_of_index(h, data.geometry)
                                         for h, k in expected if k == 1}


def test_residual_sets_single_perturbed_entry():
    u = np.full(6, 2.0)
    v = np.full(4, 3.0)
    values = np.outer(u, v)
    values[2, 1] += 1.0  # h=3, k=2
    X = DataMatrix(values, FrameGeometry(2, 3, 4), 0.0, 10.0)
    sparse, _ = residual_sets(X, Decomposition(u, v), eps_s=0.5)
    assert sparse.support() == {(3, 2)}
    assert sparse.values[0] == pytest.approx(1.0)


def test_residual_partition_counts():
    rng = np.random.default_rng(7)
    for _ in range(10):
        g = FrameGeometry(int(rng.integers(1, 5)), int(rng.integers(1, 5)),
                          int(rng.integers(1, 5)))
        u = rng.uniform(0.5, 2.0, g.m)
        v = rng.uniform(0.5, 2.0, g.n)
        values = np.outer(u, v) + rng.normal(0, 1.0, (g.m, g.n))
        values = np.abs(values)
        X = DataMatrix(values, g, 0.0, float(values.max()))
        sparse, sets = residual_sets(X, Decomposition(u, v), eps_s=0.3)
        assert len(sparse) == sets.foreground_count()
        assert len(sparse) + int((~sets.foreground).sum()) == g.m * g.n


def test_foreground_shrinks_as_threshold_grows():
    rng = np.random.default_rng(11)
    g = FrameGeometry(4, 3, 5)
    u = rng.uniform(0.5, 2.0, g.m)
    v = rng.uniform(0.5, 2.0, g.n)
    values = np.abs(np.outer(u, v) + rng.normal(0, 1.0, (g.m, g.n)))
    X = DataMatrix(values, g, 0.0, float(values.max()))
    dec = Decomposition(u, v)
    previous = None
    for eps in [0.05, 0.2, 0.8, 2.0]:
        support = residual_sets(X, dec, eps)[0].support()
        if previous is not None:
            assert support <= previous
        previous = support


def test_geometry_validation():
    with pytest.raises(ValueError):
        FrameGeometry(0, 2, 2)
    with pytest.raises(ValueError):
        FrameGeometry(2, 2, -1)
    g = FrameGeometry(3, 4, 5)
    assert (g.m, g.n) == (12, 5)


def test_decomposition_rejects_negative_entries():
    with pytest.raises(ValueError, match="nonnegative"):
        Decomposition(np.array([1.0, -0.1]), np.array([1.0]))


def test_data_matrix_values_are_read_only():
    data = toy_data()
    with pytest.raises(ValueError):
        data.values[0, 0] = 0.0
