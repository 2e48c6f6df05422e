"""
Small shared helpers: float formatting, seed derivation and atomic writes.
"""

import math
import os
import zlib

import numpy as np

GENERATOR_NAME = 'numpy.random.PCG64 via SeedSequence(master_seed, spawn_key=(crc32(stage), pair, realization))'
NA = 'NA'


def format_float(value) -> str:
    """Shortest round-trip text for a float, 'NA' for NaN"""
    if value is None:
        return NA
    value = float(value)
    if math.isnan(value):
        return NA
    return repr(value)


def format_weight(value) -> str:
    """Six significant digits, used for graph edge labels"""
    return format(float(value), '.6g')


def stage_key(stage: str) -> int:
    return zlib.crc32(stage.encode('utf-8'))


def derive_rng(seed: int, stage: str, *indices: int) -> np.random.Generator:
    """
    Generator for one unit of work.

    The stream depends only on (seed, stage, indices), so any parallel
    schedule reproduces the same numbers.
    """
    sequence = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                      spawn_key=(stage_key(stage),) + tuple(int(i) for i in indices))
    return np.random.Generator(np.random.PCG64(sequence))


def write_text(path, text: str):
    """Write through a temp file so readers never see a half-written artifact"""
    tmp_path = f"{path}.tmp"
    with open(tmp_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    os.replace(tmp_path, path)


def write_bytes(path, data: bytes):
    tmp_path = f"{path}.tmp"
    with open(tmp_path, 'wb') as f:
        f.write(data)
    os.replace(tmp_path, path)
