#!/usr/bin/python
##
# @brief Reader for the IDX container used by the MNIST files.
#
# Layout (big endian):
#   u8 0 | u8 0 | u8 dtype code | u8 n_dims | i32[n_dims] sizes | payload
##
from __future__ import print_function, division
import gzip
import os
import struct
import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

# idx dtype code -> big endian numpy dtype
_IDX_DTYPES = {
    0x08: np.dtype('>u1'),
    0x09: np.dtype('>i1'),
    0x0B: np.dtype('>i2'),
    0x0C: np.dtype('>i4'),
    0x0D: np.dtype('>f4'),
    0x0E: np.dtype('>f8'),
}


class IdxFormatError(ValueError):
    pass


def _open(path):
    if path.endswith(".gz"):
        return gzip.open(path, 'rb')
    return open(path, 'rb')


def load_idx(path, expected_magic=None):
    """!
    @brief Parse an IDX file.
    @param path  str.  plain or .gz file
    @param expected_magic  int.  reject files with another magic number
    @return np_ndarray of shape given by the header
    """
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise IdxFormatError("ERROR: %s: truncated header at byte offset %d" % (path, len(raw)))
    magic = struct.unpack('>I', raw[:4])[0]
    if expected_magic is not None and magic != expected_magic:
        raise IdxFormatError("ERROR: %s: magic number mismatch (0x%08X, expected 0x%08X)" %
                             (path, magic, expected_magic))
    zeros, code, n_dims = magic >> 16, (magic >> 8) & 0xFF, magic & 0xFF
    if zeros != 0 or code not in _IDX_DTYPES:
        raise IdxFormatError("ERROR: %s: bad magic number 0x%08X" % (path, magic))
    header_len = 4 + 4 * n_dims
    if len(raw) < header_len:
        raise IdxFormatError("ERROR: %s: truncated header at byte offset %d" % (path, len(raw)))
    dims = struct.unpack('>' + 'I' * n_dims, raw[4:header_len])
    dtype = _IDX_DTYPES[code]
    n_bytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    if len(raw) < header_len + n_bytes:
        raise IdxFormatError("ERROR: %s: truncated payload at byte offset %d (expected %d bytes)" %
                             (path, len(raw), header_len + n_bytes))
    if len(raw) > header_len + n_bytes:
        raise IdxFormatError("ERROR: %s: %d trailing bytes after payload at byte offset %d" %
                             (path, len(raw) - header_len - n_bytes, header_len + n_bytes))
    data = np.frombuffer(raw, dtype=dtype, count=n_bytes // dtype.itemsize, offset=header_len)
    return data.reshape(dims)


def load_idx_images(path):
    """!
    @brief Image tensor of shape (n_images, n_rows, n_cols), values in [0, 255].
    """
    images = load_idx(path, IMAGE_MAGIC)
    if images.ndim != 3:
        raise IdxFormatError("ERROR: %s: expected 3 dimensions, got %d" % (path, images.ndim))
    return images


def load_idx_labels(path):
    labels = load_idx(path, LABEL_MAGIC)
    if labels.ndim != 1:
        raise IdxFormatError("ERROR: %s: expected 1 dimension, got %d" % (path, labels.ndim))
    if labels.size and labels.max() > 9:
        raise IdxFormatError("ERROR: %s: label %d out of range [0, 9]" % (path, labels.max()))
    return labels


def load_mnist(images_path, labels_path):
    """!
    @brief Load matching image and label files.
    @return (images, labels)
    """
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError("ERROR: %d images but %d labels" % (images.shape[0], labels.shape[0]))
    return images, labels


def mnist_paths(directory=None, images=None, labels=None):
    """!
    @brief Resolve dataset file names, falling back on $HEBBPY_MNIST_DIR.
    """
    if directory is None:
        directory = os.environ.get("HEBBPY_MNIST_DIR", "")
    if not images:
        images = os.path.join(directory, "train-images-idx3-ubyte")
    if not labels:
        labels = os.path.join(directory, "train-labels-idx1-ubyte")
    return images, labels


def write_idx(path, data):
    """!
    @brief Write an unsigned byte IDX file (used to build small test datasets).
    """
    data = np.asarray(data, dtype=np.uint8)
    with open(path, 'wb') as f:
        f.write(struct.pack('>I', (0x08 << 8) | data.ndim))
        f.write(struct.pack('>' + 'I' * data.ndim, *data.shape))
        f.write(data.tobytes())
