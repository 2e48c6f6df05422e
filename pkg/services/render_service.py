import logging
from typing import List

import numpy as np

from helpers import format_float, write_bytes, write_text
from models import FlowSummary, GrayscaleMap

logger = logging.getLogger(__name__)

ORIENTATIONS = ('source-on-x', 'source-on-y')
PROFILE_HEADER = 'index,symbol,region,out_sum,out_mean,in_sum,in_mean,region_end'


def render_grayscale(matrix, orientation='source-on-x') -> GrayscaleMap:
    """
    Map matrix cells to 0-255, higher values lighter.

    Rows of the source matrix are information sources. With source-on-x the
    sources run along the x axis, so image row r holds the flows into
    ``symbols[r]``. Undefined cells are black; a matrix without spread is
    uniform 128.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got '{orientation}'")
    values = np.asarray(matrix.values, dtype=np.float64)
    image = values.T if orientation == 'source-on-x' else values
    height, width = image.shape

    defined = ~np.isnan(image)
    if not defined.any():
        return GrayscaleMap(width, height, bytes([128]) * (width * height), float('nan'), float('nan'))
    low, high = float(np.min(image[defined])), float(np.max(image[defined]))
    if not low < high:
        return GrayscaleMap(width, height, bytes([128]) * (width * height), low, high)

    scaled = np.floor(255.0 * (np.where(defined, image, low) - low) / (high - low) + 0.5)
    pixels = np.where(defined, np.clip(scaled, 0, 255), 0).astype(np.uint8)
    return GrayscaleMap(width, height, pixels.tobytes(), low, high)


def pgm_bytes(gray: GrayscaleMap, ascii=False) -> bytes:
    """Netpbm P5 (binary) or P2 (plain) with the scale in a comment line"""
    header = (f"{'P2' if ascii else 'P5'}\n"
              f"# scale min={format_float(gray.scale_min)} max={format_float(gray.scale_max)}\n"
              f"{gray.width} {gray.height}\n255\n").encode('ascii')
    if not ascii:
        return header + gray.pixels
    rows = gray.as_array()
    body = '\n'.join(' '.join(str(int(p)) for p in row) for row in rows) + '\n'
    return header + body.encode('ascii')


def write_pgm(gray: GrayscaleMap, path, ascii=False):
    write_bytes(path, pgm_bytes(gray, ascii))


def region_boundaries(summaries: List[FlowSummary]) -> List[int]:
    """1-based row numbers after which the region label changes"""
    return [n + 1 for n in range(len(summaries) - 1) if summaries[n].region != summaries[n + 1].region]


def export_profiles(summaries: List[FlowSummary], path):
    """Per-market flow profile in manifest order, with region block ends marked"""
    boundaries = set(region_boundaries(summaries))
    lines = [PROFILE_HEADER]
    for n, s in enumerate(summaries, start=1):
        lines.append(','.join([str(n), s.symbol, s.region,
                               format_float(s.out_sum), format_float(s.out_mean),
                               format_float(s.in_sum), format_float(s.in_mean),
                               '1' if n in boundaries else '0']))
    write_text(path, '\n'.join(lines) + '\n')
    return sorted(boundaries)
