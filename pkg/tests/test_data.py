import numpy as np
import pytest
from PIL import Image

from pvrc.data import (
    ManifestError,
    NetpbmError,
    PreprocessParams,
    decode_netpbm,
    devectorize,
    encode_netpbm,
    load_manifest,
    parse_manifest,
    preprocess,
    read_feature_csv,
    read_image,
    resize_bilinear,
    synth_subspace_dataset,
    vectorize,
)
from pvrc.data.samples import class_arrays


class TestVectorize:
    def test_gray_column_order(self):
        np.testing.assert_array_equal(vectorize([[1, 2], [3, 4]]), [1, 3, 2, 4])

    def test_rgb_single_pixel(self):
        np.testing.assert_array_equal(vectorize(np.array([[[10, 20, 30]]]), "rgb_concat"), [10, 20, 30])

    def test_rgb_blocks(self):
        img = np.array([[[1, 2, 3]], [[4, 5, 6]]])  # 2 rows, 1 column
        v = vectorize(img, "rgb_concat")
        np.testing.assert_array_equal(v, [1, 4, 2, 5, 3, 6])

    def test_empty(self):
        with pytest.raises(ValueError):
            vectorize(np.zeros((0, 3)))

    @pytest.mark.parametrize("mode,shape", [("gray", (5, 7)), ("rgb_concat", (4, 3, 3))])
    def test_bijection(self, mode, shape):
        img = np.random.default_rng(0).integers(0, 256, size=shape).astype(float)
        back = devectorize(vectorize(img, mode), shape[0], shape[1], mode)
        np.testing.assert_array_equal(back, img)


class TestNetpbm:
    def test_p5(self):
        data = b"P5\n2 2\n255\n" + bytes([1, 2, 3, 4])
        px, maxval = decode_netpbm(data)
        np.testing.assert_array_equal(px, [[1, 2], [3, 4]])
        assert maxval == 255
        np.testing.assert_array_equal(vectorize(px), [1, 3, 2, 4])

    def test_p2_with_comments(self):
        data = b"P2\n# a comment\n3 1 # trailing\n15\n0 7\n15\n"
        px, maxval = decode_netpbm(data)
        np.testing.assert_array_equal(px, [[0, 7, 15]])
        assert maxval == 15

    def test_p3_and_p6_agree(self):
        rgb = np.array([[[1, 2, 3], [4, 5, 6]], [[7, 8, 9], [250, 251, 252]]], dtype=np.uint16)
        ascii_px, _ = decode_netpbm(encode_netpbm(rgb, 255, binary=False))
        bin_px, _ = decode_netpbm(encode_netpbm(rgb, 255, binary=True))
        np.testing.assert_array_equal(ascii_px, rgb)
        np.testing.assert_array_equal(bin_px, rgb)

    def test_sixteen_bit_big_endian(self):
        data = b"P5 2 1 65535\n" + bytes([0x01, 0x02, 0xFF, 0xFE])
        px, maxval = decode_netpbm(data)
        np.testing.assert_array_equal(px, [[0x0102, 0xFFFE]])
        assert maxval == 65535

    @pytest.mark.parametrize(
        "data,fragment",
        [
            (b"P7\n1 1\n255\n\x00", "magic"),
            (b"P5\n2 2\n255\n\x00\x01", "truncated"),
            (b"P5\nx 2\n255\n", "width"),
            (b"P2\n2 1\n10\n3 11\n", "maxval"),
        ],
    )
    def test_errors_carry_offset(self, data, fragment):
        with pytest.raises(NetpbmError) as info:
            decode_netpbm(data, path="bad.pgm")
        assert "bad.pgm: byte" in str(info.value)
        assert fragment in str(info.value)
        assert info.value.offset >= 0

    def test_read_pgm_and_png(self, tmp_path):
        gray = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        (tmp_path / "a.pgm").write_bytes(encode_netpbm(gray))
        np.testing.assert_array_equal(read_image(tmp_path / "a.pgm"), gray)
        Image.fromarray(gray, mode="L").save(tmp_path / "a.png")
        np.testing.assert_array_equal(read_image(tmp_path / "a.png"), gray)
        rgb = np.random.default_rng(1).integers(0, 256, size=(3, 4, 3)).astype(np.uint8)
        Image.fromarray(rgb, mode="RGB").save(tmp_path / "c.png")
        np.testing.assert_array_equal(read_image(tmp_path / "c.png"), rgb)

    def test_unsupported_suffix(self, tmp_path):
        (tmp_path / "x.jpg").write_bytes(b"")
        with pytest.raises(ValueError):
            read_image(tmp_path / "x.jpg")


class TestPreprocess:
    def test_identity_resize_is_bit_identical(self):
        img = np.random.default_rng(2).random((6, 5)) * 255
        out = preprocess(img, PreprocessParams(5, 6))
        np.testing.assert_array_equal(out, img)
        np.testing.assert_array_equal(preprocess(out, PreprocessParams(5, 6)), out)

    def test_constant_upsample(self):
        np.testing.assert_allclose(resize_bilinear(np.full((2, 2), 7.0), 4, 4), np.full((4, 4), 7.0))

    def test_checkerboard_block_means(self):
        board = np.indices((4, 4)).sum(axis=0) % 2 * 255.0
        board[0, 0] = 40.0
        out = resize_bilinear(board, 2, 2)
        expected = board.reshape(2, 2, 2, 2).mean(axis=(1, 3))
        np.testing.assert_allclose(out, expected, rtol=1e-12)

    def test_gray_conversion_weights(self):
        img = np.zeros((1, 1, 3))
        img[0, 0] = [100, 50, 10]
        out = preprocess(img, PreprocessParams(1, 1, "gray"))
        assert out[0, 0] == pytest.approx(0.299 * 100 + 0.587 * 50 + 0.114 * 10)

    def test_crop(self):
        img = np.arange(30, dtype=float).reshape(5, 6)
        out = preprocess(img, PreprocessParams(2, 3, crop=(1, 2, 2, 3)))
        np.testing.assert_array_equal(out, img[2:5, 1:3])
        with pytest.raises(ValueError, match="outside"):
            preprocess(img, PreprocessParams(2, 2, crop=(5, 0, 2, 2)))

    def test_feature_dim(self):
        assert PreprocessParams(32, 32, "rgb_concat").feature_dim == 3072
        assert PreprocessParams(30, 40).feature_dim == 1200


def _write_csv(path, rows, header=None):
    lines = [] if header is None else [header]
    lines += [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


class TestManifest:
    def test_csv_manifest(self, tmp_path):
        _write_csv(tmp_path / "f.csv", [[2, 1.0, 2.0], [1, 3.0, 4.0], [2, 5.0, 6.0], [1, 7.0, 8.0]], "class,a,b")
        (tmp_path / "m.ini").write_text("[dataset]\nname = toy\nsource = csv\ncsv = f.csv\n")
        samples = load_manifest(tmp_path / "m.ini")
        assert [s.class_id for s in samples] == [1, 1, 2, 2]
        np.testing.assert_array_equal(samples[0].features, [3.0, 4.0])
        np.testing.assert_array_equal(samples[2].features, [1.0, 2.0])
        again = load_manifest(tmp_path / "m.ini")
        assert [(s.class_id, s.features.tobytes(), s.source_id) for s in samples] == [
            (s.class_id, s.features.tobytes(), s.source_id) for s in again
        ]

    def test_csv_errors_name_row(self, tmp_path):
        _write_csv(tmp_path / "f.csv", [[1, 1.0, 2.0], [1, 3.0]])
        with pytest.raises(ManifestError, match="row 2"):
            read_feature_csv(tmp_path / "f.csv")
        _write_csv(tmp_path / "g.csv", [[1, 1.0, 2.0], [1, 3.0, "zz"]])
        with pytest.raises(ManifestError, match="row 2"):
            read_feature_csv(tmp_path / "g.csv")

    def _image_tree(self, tmp_path):
        (tmp_path / "img").mkdir()
        (tmp_path / "img" / "a.pgm").write_bytes(b"P5\n2 2\n255\n" + bytes([1, 2, 3, 4]))
        (tmp_path / "img" / "b.pgm").write_bytes(b"P2\n2 2\n255\n5 6 7 8\n")
        Image.fromarray(np.array([[9, 10], [11, 12]], dtype=np.uint8), mode="L").save(tmp_path / "img" / "c.png")

    def test_image_manifest(self, tmp_path):
        self._image_tree(tmp_path)
        (tmp_path / "m.ini").write_text(
            "[dataset]\nname = imgs\nroot = img\n\n[preprocess]\nwidth = 2\nheight = 2\n\n"
            "[class 5]\nfiles =\n    c.png\n    a.pgm\n\n[class 2]\nfiles = b.pgm\n"
        )
        samples = load_manifest(tmp_path / "m.ini")
        assert [(s.class_id, s.source_id) for s in samples] == [(2, "b.pgm"), (5, "c.png"), (5, "a.pgm")]
        np.testing.assert_array_equal(samples[2].features, [1, 3, 2, 4])
        threaded = load_manifest(tmp_path / "m.ini", threads=4)
        assert [s.features.tobytes() for s in threaded] == [s.features.tobytes() for s in samples]

    def test_duplicate_class_id(self, tmp_path):
        (tmp_path / "m.ini").write_text(
            "[dataset]\nname = x\n[preprocess]\nwidth = 2\nheight = 2\n"
            "[class 1]\nfiles = a.pgm\n[class  1]\nfiles = b.pgm\n"
        )
        with pytest.raises(ManifestError, match="duplicate"):
            parse_manifest(tmp_path / "m.ini")

    def test_missing_image_and_bad_header(self, tmp_path):
        self._image_tree(tmp_path)
        (tmp_path / "img" / "bad.pgm").write_bytes(b"P5\n2 2\n255\n\x00")
        base = "[dataset]\nname = x\nroot = img\n[preprocess]\nwidth = 2\nheight = 2\n[class 1]\nfiles = "
        (tmp_path / "m1.ini").write_text(base + "nope.pgm\n")
        with pytest.raises(ManifestError, match="nope.pgm"):
            load_manifest(tmp_path / "m1.ini")
        (tmp_path / "m2.ini").write_text(base + "bad.pgm\n")
        with pytest.raises(NetpbmError, match="bad.pgm: byte"):
            load_manifest(tmp_path / "m2.ini")

    def test_inconsistent_image_color(self, tmp_path):
        self._image_tree(tmp_path)
        (tmp_path / "m.ini").write_text(
            "[dataset]\nname = x\nroot = img\n[preprocess]\nwidth = 2\nheight = 2\ncolor = rgb_concat\n"
            "[class 1]\nfiles = a.pgm\n"
        )
        with pytest.raises(ManifestError, match="a.pgm"):
            load_manifest(tmp_path / "m.ini")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ManifestError, match="not found"):
            parse_manifest(tmp_path / "none.ini")


class TestSynth:
    def test_deterministic(self):
        a = synth_subspace_dataset(4, 5, 2, 10, 0.1, seed=3)
        b = synth_subspace_dataset(4, 5, 2, 10, 0.1, seed=3)
        assert [s.features.tobytes() for s in a] == [s.features.tobytes() for s in b]
        assert [s.class_id for s in a] == [1] * 5 + [2] * 5 + [3] * 5 + [4] * 5

    def test_noise_free_affine_rank(self):
        groups = class_arrays(synth_subspace_dataset(3, 4, 3, 12, 0.0, seed=4))
        for X in groups.values():
            assert np.linalg.matrix_rank(X[1:] - X[0], tol=1e-9) == 3
        groups = class_arrays(synth_subspace_dataset(2, 7, 3, 12, 0.0, seed=5))
        for X in groups.values():
            assert np.linalg.matrix_rank(X[1:] - X[0], tol=1e-9) == 3

    @pytest.mark.parametrize(
        "args", [(0, 4, 3, 10, 0.1), (2, 3, 3, 10, 0.1), (2, 5, 10, 10, 0.1), (2, 5, 3, 10, -1.0)]
    )
    def test_parameter_errors(self, args):
        with pytest.raises(ValueError):
            synth_subspace_dataset(*args, seed=0)
