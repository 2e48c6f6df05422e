"""
Shared fixtures. The repo root goes on sys.path so tests import the flat
modules (models, services.*) the same way app.py does.
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models import CoupledProcessSpec, EmbeddingConfig, TEMatrix  # noqa: E402
from services.synth_service import generate, write_panel  # noqa: E402

GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'golden')


@pytest.fixture
def write_csv(tmp_path):
    """Write text to a file under tmp_path and return the path"""
    def _write(name, text):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def two_column_prices(write_csv):
    def _prices(name, closes, start='2020-01-01'):
        dates = np.arange(np.datetime64(start), np.datetime64(start) + len(closes))
        body = ''.join(f"{d},{c}\n" for d, c in zip(dates, closes))
        return write_csv(name, 'date,close\n' + body)
    return _prices


@pytest.fixture
def reference_matrix():
    """3x3 TE matrix with an undefined diagonal"""
    values = np.array([[np.nan, 0.1, 0.2],
                       [0.3, np.nan, 0.4],
                       [0.5, 0.6, np.nan]])
    return TEMatrix(['A', 'B', 'C'], values, EmbeddingConfig())


@pytest.fixture(scope='session')
def star_spec():
    """One driver feeding four followers"""
    return CoupledProcessSpec(alphabet=3, epsilon=0.9, length=600, seed=7,
                              topology=(('A', 'B'), ('A', 'C'), ('A', 'D'), ('A', 'E')))


@pytest.fixture(scope='session')
def synthetic_manifest(tmp_path_factory, star_spec):
    """Five-market price panel written by the synth module"""
    outdir = tmp_path_factory.mktemp('synthetic')
    return write_panel(generate(star_spec), str(outdir))


@pytest.fixture
def golden_path():
    def _golden(name):
        return os.path.join(GOLDEN_DIR, name)
    return _golden
