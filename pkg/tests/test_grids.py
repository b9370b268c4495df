import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxmol.errors import FormatError
from voxmol.grids import (GridShape, copy_into, make_grid, read_npy,
                          view_over, write_npy)


class TestGridShape:
    def test_strides_are_row_major(self):
        shape = GridShape(3, 4, 5)
        assert shape.strides == (20, 5, 1)
        assert shape.size == 60

    def test_offset_matches_strides(self):
        shape = GridShape(2, 3, 4)
        assert shape.offset((1, 2, 3)) == 1 * 12 + 2 * 4 + 3

    @given(st.lists(st.integers(min_value=1, max_value=8), min_size=1, max_size=6))
    def test_flat_offsets_stay_in_bounds(self, dims):
        shape = GridShape(dims)
        last = tuple(d - 1 for d in dims)
        assert shape.offset(last) == shape.size - 1
        assert shape.offset((0,) * len(dims)) == 0

    @pytest.mark.parametrize("dims", [(0,), (2, 0), (-1, 3), ()])
    def test_bad_extents_rejected(self, dims):
        with pytest.raises(ValueError):
            GridShape(dims)

    def test_too_many_dims_rejected(self):
        with pytest.raises(ValueError):
            GridShape((2,) * 7)


class TestMakeGrid:
    def test_zero_initialized(self):
        g = make_grid((2, 2), "f32")
        assert g.size == 4
        assert not g.array.any()
        assert g.dtype == np.float32

    def test_default_batch_shape(self):
        g = make_grid((10, 14, 48, 48, 48))
        assert g.shape == GridShape(10, 14, 48, 48, 48)

    def test_zero_extent_is_argument_error(self):
        with pytest.raises(ValueError):
            make_grid((0,))

    def test_f64(self):
        assert make_grid((3,), "f64").dtype == np.float64

    def test_unknown_type_rejected(self):
        with pytest.raises(TypeError):
            make_grid((2,), "f16")


class TestViewOver:
    def test_view_aliases_buffer(self):
        buf = np.zeros(4, dtype=np.float32)
        view = view_over(buf, (2, 2))
        view.set((1, 1), 5.0)
        assert buf[3] == 5.0
        buf[0] = 7.0
        assert view.get((0, 0)) == 7.0

    def test_dtype_mismatch_rejected(self):
        buf = np.zeros(4, dtype=np.float64)
        with pytest.raises(TypeError):
            view_over(buf, (2, 2), "f32")

    def test_undersized_buffer_rejected(self):
        with pytest.raises(ValueError):
            view_over(np.zeros(3, dtype=np.float32), (2, 2))

    def test_non_float_buffer_rejected(self):
        with pytest.raises(TypeError):
            view_over(np.zeros(4, dtype=np.int32), (2, 2))

    def test_view_of_owned_grid(self):
        g = make_grid((4,))
        v = view_over(g, (2, 2))
        v.set((0, 1), 3.0)
        assert g.get((1,)) == 3.0

    def test_view_over_plain_buffer_protocol(self):
        import array

        buf = array.array("f", [0.0, 0.0, 0.0, 0.0])
        view = view_over(buf, (2, 2))
        view.set((1, 0), 2.5)
        assert buf[2] == 2.5
        assert view.dtype == np.float32

    def test_view_over_double_buffer(self):
        import array

        buf = array.array("d", [1.0, 2.0])
        assert view_over(buf, (2,)).dtype == np.float64
        with pytest.raises(TypeError):
            view_over(buf, (2,), "f32")


class TestGetSet:
    def test_set_then_get(self):
        g = make_grid((3, 4))
        g.set((1, 2), 7.0)
        assert g.get((1, 2)) == 7.0

    def test_zero_grid_reads_zero(self):
        assert make_grid((2, 2)).get((0, 0)) == 0.0

    @pytest.mark.parametrize("index", [(5, 0), (0, 9), (2, 2), (-1, 0)])
    def test_out_of_bounds(self, index):
        with pytest.raises(IndexError):
            make_grid((2, 2)).get(index)

    def test_wrong_arity(self):
        with pytest.raises(IndexError):
            make_grid((2, 2)).get((1,))


class TestCopyInto:
    def test_copies_elements(self):
        src = make_grid((2, 2))
        src.array[:] = 1.0
        dst = make_grid((2, 2))
        copy_into(src, dst)
        assert (dst.array == 1.0).all()

    def test_deep_copy(self):
        src = make_grid((2, 2))
        dst = make_grid((2, 2))
        copy_into(src, dst)
        src.set((0, 0), 9.0)
        assert dst.get((0, 0)) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            copy_into(make_grid((2, 2)), make_grid((4,)))

    def test_dtype_mismatch(self):
        with pytest.raises(ValueError):
            copy_into(make_grid((2,), "f32"), make_grid((2,), "f64"))


class TestNpy:
    def test_round_trip(self, tmp_path):
        arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        path = tmp_path / "a.npy"
        write_npy(path, arr)
        back = read_npy(path)
        assert back.dtype == np.dtype("<f4")
        np.testing.assert_array_equal(back, arr)

    def test_numpy_reads_our_files(self, tmp_path):
        arr = np.linspace(0, 1, 30, dtype=np.float64).reshape(5, 6)
        path = tmp_path / "b.npy"
        write_npy(path, arr)
        np.testing.assert_array_equal(np.load(path), arr)

    def test_we_read_numpy_files(self, tmp_path):
        arr = np.random.default_rng(0).random((3, 3)).astype(np.float32)
        path = tmp_path / "c.npy"
        np.save(path, arr)
        np.testing.assert_array_equal(read_npy(path), arr)

    def test_header_is_version_1_0_and_aligned(self, tmp_path):
        path = tmp_path / "d.npy"
        write_npy(path, np.zeros((7,), dtype=np.float32))
        raw = path.read_bytes()
        assert raw[:6] == b"\x93NUMPY"
        assert raw[6:8] == bytes([1, 0])
        hlen = int.from_bytes(raw[8:10], "little")
        assert (10 + hlen) % 64 == 0
        assert raw[10 + hlen - 1:10 + hlen] == b"\n"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "e.npy"
        path.write_bytes(b"XXXXXXXXXXXXXXXX")
        with pytest.raises(FormatError):
            read_npy(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "f.npy"
        write_npy(path, np.ones((10,), dtype=np.float32))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(FormatError):
            read_npy(path)

    def test_1d_shape_tuple_syntax(self, tmp_path):
        path = tmp_path / "g.npy"
        write_npy(path, np.zeros(3, dtype=np.float32))
        assert b"(3,)" in path.read_bytes()[:80]

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(width=32, allow_nan=False, allow_infinity=False),
                    min_size=1, max_size=40))
    def test_round_trip_property(self, values):
        import tempfile

        arr = np.array(values, dtype=np.float32)
        with tempfile.NamedTemporaryFile(suffix=".npy") as fh:
            write_npy(fh.name, arr)
            np.testing.assert_array_equal(read_npy(fh.name), arr)
