import logging
import struct

import numpy as np

from problem.plasma_model import ProblemError

logger = logging.getLogger(__name__)

MAGIC = b"VAMX"
VERSION = 1
HEADER = struct.Struct('<4sIII')


def save_matrix(filepath, array):
    """Write a complex matrix (or vector) column-major with a 16-byte header"""
    data = np.asarray(array, dtype=complex)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise ProblemError(f"only matrices and vectors can be dumped, got ndim={data.ndim}")

    rows, cols = data.shape
    with open(filepath, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, rows, cols))
        f.write(data.astype('<c16').tobytes(order='F'))
    logger.info(f"Saved {rows}x{cols} matrix to {filepath}")


def load_matrix(filepath):
    """Read a dump written by save_matrix; vectors come back as rows x 1"""
    try:
        with open(filepath, 'rb') as f:
            header = f.read(HEADER.size)
            payload = f.read()
    except FileNotFoundError:
        logger.warning(f"Matrix dump not found: {filepath}")
        raise

    if len(header) != HEADER.size:
        raise ProblemError(f"truncated header in {filepath}")
    magic, version, rows, cols = HEADER.unpack(header)
    if magic != MAGIC or version != VERSION:
        raise ProblemError(f"not a matrix dump: magic={magic!r} version={version}")
    if len(payload) != rows * cols * 16:
        raise ProblemError(f"payload size {len(payload)} does not match {rows}x{cols}")

    values = np.frombuffer(payload, dtype='<c16')
    return values.reshape((rows, cols), order='F').astype(complex)
