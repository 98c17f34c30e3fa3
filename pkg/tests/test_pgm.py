import numpy as np
import pytest

from radonlens.errors import FormatError, ParseError, ValidationError
from radonlens.image import ImageGrid
from radonlens.pgm import load_image, save_image


def test_p2_ascii_scaling(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P2\n2 2\n255\n0 255\n255 0\n")
    img = load_image(p)
    assert img.width == 2 and img.height == 2
    np.testing.assert_array_equal(img.data, [[0.0, 1.0], [1.0, 0.0]])


def test_p2_comments_in_header(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P2\n# a comment\n2 1\n# another\n255\n10 20\n")
    img = load_image(p)
    np.testing.assert_allclose(img.data, [[10 / 255, 20 / 255]])


def test_p5_roundtrip_depth8(tmp_path, random_image):
    p = tmp_path / "t.pgm"
    save_image(random_image, p, depth=8)
    back = load_image(p)
    assert np.abs(back.data - random_image.data).max() <= 0.5 / 255 + 1e-12


def test_p5_roundtrip_depth16(tmp_path, random_image):
    p = tmp_path / "t.pgm"
    save_image(random_image, p, depth=16)
    back = load_image(p)
    assert np.abs(back.data - random_image.data).max() <= 0.5 / 65535 + 1e-12


def test_zeros_image_roundtrip(tmp_path):
    p = tmp_path / "z.pgm"
    save_image(ImageGrid(np.zeros((3, 5))), p)
    back = load_image(p)
    assert back.data.sum() == 0.0 and back.width == 5 and back.height == 3


def test_half_gray_rounds_half_up(tmp_path):
    p = tmp_path / "h.pgm"
    save_image(ImageGrid(np.full((1, 1), 0.5)), p, depth=8)
    raster = p.read_bytes().split(b"\n", 3)[3]
    assert raster == bytes([128])  # round(0.5 * 255) with round-half-up


def test_detector_sized_zero_image(tmp_path):
    # full detector-frame dimensions survive a save/load cycle
    p = tmp_path / "big.pgm"
    save_image(ImageGrid(np.zeros((1216, 1936))), p)
    img = load_image(p)
    assert (img.width, img.height) == (1936, 1216)
    assert img.data.sum() == 0.0


def test_out_of_range_raises_without_clamp(tmp_path):
    img = ImageGrid(np.array([[1.5]]))
    with pytest.raises(ValidationError):
        save_image(img, tmp_path / "x.pgm")
    save_image(img, tmp_path / "x.pgm", clamp=True)
    assert load_image(tmp_path / "x.pgm").data[0, 0] == 1.0


def test_unsupported_magic(tmp_path):
    p = tmp_path / "t.ppm"
    p.write_bytes(b"P6\n1 1\n255\nabc")
    with pytest.raises(FormatError):
        load_image(p)


def test_malformed_header_reports_offset(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n2 two\n255\n")
    with pytest.raises(ParseError) as exc:
        load_image(p)
    assert exc.value.offset is not None


def test_truncated_raster(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 7)
    with pytest.raises(ParseError, match="truncated"):
        load_image(p)


def test_p2_write_roundtrip(tmp_path, random_image):
    p = tmp_path / "a.pgm"
    save_image(random_image, p, depth=8, ascii_format=True)
    assert p.read_bytes().startswith(b"P2\n")
    back = load_image(p)
    assert np.abs(back.data - random_image.data).max() <= 0.5 / 255 + 1e-12


def test_p2_and_p5_agree_pixelwise(tmp_path, random_image):
    pa = tmp_path / "a.pgm"
    pb = tmp_path / "b.pgm"
    save_image(random_image, pa, depth=16, ascii_format=True)
    save_image(random_image, pb, depth=16)
    np.testing.assert_array_equal(load_image(pa).data, load_image(pb).data)


def test_p5_16bit_is_big_endian(tmp_path):
    p = tmp_path / "t.pgm"
    save_image(ImageGrid(np.array([[1.0]])), p, depth=16)
    raster = p.read_bytes().split(b"\n", 3)[3]
    assert raster == b"\xff\xff"
    p.write_bytes(b"P5\n1 1\n65535\n\x01\x00")  # MSB first: value 256
    assert load_image(p).data[0, 0] == pytest.approx(256 / 65535)
