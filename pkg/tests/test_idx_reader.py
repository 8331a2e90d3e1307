#!/usr/bin/python
##
# Description: Tests the IDX file reader
##
from __future__ import print_function, division
import gzip
import os
import shutil
import struct
import tempfile
import unittest
import numpy as np
#
from hebbpy.utils.idx_reader import IdxFormatError, load_idx, load_idx_images, \
    load_idx_labels, load_mnist, mnist_paths, write_idx, IMAGE_MAGIC


class TestIdxReader(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.images = np.arange(2 * 28 * 28, dtype=np.int64).reshape(2, 28, 28) % 256
        self.images_path = self.path("images")
        self.labels_path = self.path("labels")
        write_idx(self.images_path, self.images)
        write_idx(self.labels_path, [4, 9])

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def test_roundtrip(self):
        images, labels = load_mnist(self.images_path, self.labels_path)
        self.assertEqual(images.shape, (2, 28, 28))
        np.testing.assert_array_equal(images, self.images)
        np.testing.assert_array_equal(labels, [4, 9])

    def test_gzip(self):
        gz = self.path("images.gz")
        with open(self.images_path, 'rb') as f, gzip.open(gz, 'wb') as g:
            g.write(f.read())
        np.testing.assert_array_equal(load_idx_images(gz), self.images)

    def test_magic_mismatch(self):
        with self.assertRaises(IdxFormatError) as ctx:
            load_idx_images(self.labels_path)
        self.assertIn("magic", str(ctx.exception))
        with self.assertRaises(IdxFormatError):
            load_idx_labels(self.images_path)

    def test_bad_dtype_code(self):
        p = self.path("bad")
        with open(p, 'wb') as f:
            f.write(struct.pack('>I', 0x00000701))
            f.write(struct.pack('>I', 1))
            f.write(b'\x00')
        with self.assertRaises(IdxFormatError):
            load_idx(p)

    def test_truncated(self):
        with open(self.images_path, 'rb') as f:
            raw = f.read()
        p = self.path("short")
        with open(p, 'wb') as f:
            f.write(raw[:-10])
        with self.assertRaises(IdxFormatError) as ctx:
            load_idx(p, IMAGE_MAGIC)
        self.assertIn("byte offset %d" % (len(raw) - 10), str(ctx.exception))
        with open(p, 'wb') as f:
            f.write(raw[:6])
        with self.assertRaises(IdxFormatError) as ctx:
            load_idx(p)
        self.assertIn("truncated header", str(ctx.exception))

    def test_trailing_bytes(self):
        with open(self.labels_path, 'ab') as f:
            f.write(b'\x00\x00')
        with self.assertRaises(IdxFormatError) as ctx:
            load_idx_labels(self.labels_path)
        self.assertIn("trailing", str(ctx.exception))

    def test_label_range(self):
        write_idx(self.labels_path, [4, 12])
        with self.assertRaises(IdxFormatError):
            load_idx_labels(self.labels_path)

    def test_count_mismatch(self):
        write_idx(self.labels_path, [4, 9, 1])
        with self.assertRaises(IdxFormatError):
            load_mnist(self.images_path, self.labels_path)

    def test_paths(self):
        images, labels = mnist_paths(self.tmp)
        self.assertEqual(images, os.path.join(self.tmp, "train-images-idx3-ubyte"))
        self.assertEqual(labels, os.path.join(self.tmp, "train-labels-idx1-ubyte"))
        self.assertEqual(mnist_paths(self.tmp, images="x")[0], "x")


if __name__ == "__main__":
    unittest.main()
