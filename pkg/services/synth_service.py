"""
Coupled discrete processes with known transfer entropy, and an independent
brute-force TE evaluator used to cross-check the estimator.

A driver is i.i.d. uniform over the alphabet. A follower copies its driver's
previous state with probability epsilon and otherwise draws a fresh uniform
state, so it has no memory of its own.
"""

import itertools
import logging
import math
import os
from collections import Counter
from typing import List

import numpy as np
import pandas as pd

from errors import ConfigError, DataError
from helpers import derive_rng, format_float, write_text
from models import CoupledProcessSpec, EmbeddingConfig, LOG_BASES, PriceSeries, SymbolSequence
from services.ingest_service import write_price_csv

logger = logging.getLogger(__name__)

SYNTH_STAGE = 'synth'
START_DATE = '2000-01-03'
START_PRICE = 100.0


def _generation_order(spec: CoupledProcessSpec) -> List[str]:
    driver_of = {follower: driver for driver, follower in spec.topology}
    order, visiting = [], set()

    def visit(name):
        if name in order:
            return
        if name in visiting:
            raise ConfigError(f"topology has a cycle through '{name}'")
        visiting.add(name)
        if name in driver_of:
            visit(driver_of[name])
        visiting.discard(name)
        order.append(name)

    for name in spec.nodes:
        visit(name)
    return order


def generate(spec: CoupledProcessSpec) -> List[SymbolSequence]:
    """One positional sequence per process, in order of first appearance in the topology"""
    driver_of = {follower: driver for driver, follower in spec.topology}
    nodes = spec.nodes
    states = {}
    for name in _generation_order(spec):
        rng = derive_rng(spec.seed, SYNTH_STAGE, nodes.index(name))
        fresh = rng.integers(0, spec.alphabet, size=spec.length)
        if name in driver_of:
            copy = rng.random(spec.length - 1) < spec.epsilon
            driver = states[driver_of[name]]
            fresh[1:] = np.where(copy, driver[:-1], fresh[1:])
        states[name] = fresh
    return [SymbolSequence(name, states[name], spec.alphabet, 'synthetic') for name in nodes]


def _xlogy(x, y):
    return x * math.log(y) if x > 0 else 0.0


def analytic_te(alphabet: int, epsilon: float, log_base='2') -> float:
    """
    Exact T_{driver->follower} for k = l = 1.

    With q = eps + (1 - eps)/A and r = (1 - eps)/A the follower's next state
    matches the driver with probability q and each other state with r.
    """
    if alphabet < 2:
        raise ConfigError(f"alphabet must be at least 2, got {alphabet}")
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"coupling must lie in [0, 1], got {epsilon}")
    q = epsilon + (1.0 - epsilon) / alphabet
    r = (1.0 - epsilon) / alphabet
    te = _xlogy(q, q * alphabet) + (alphabet - 1) * _xlogy(r, r * alphabet)
    return te / math.log(LOG_BASES[str(log_base)])


def brute_force_te(target: SymbolSequence, source: SymbolSequence, cfg: EmbeddingConfig) -> float:
    """
    Transfer entropy by explicit enumeration of every possible
    (next, target history, source history) key, with each marginal tallied
    separately from the raw windows.
    """
    if len(target) != len(source):
        raise DataError(f"sequence lengths differ: target {len(target)}, source {len(source)}")
    k, l = cfg.k, cfg.l
    offset = max(k, l)
    windows = len(target) - offset
    if windows < 1:
        raise DataError(f"{len(target)} samples leave no window for k={k}, l={l}")
    alphabet = max(target.alphabet_size, source.alphabet_size)
    x = [int(v) for v in target.states]
    y = [int(v) for v in source.states]

    joint, past_both, next_past, past = Counter(), Counter(), Counter(), Counter()
    for t in range(offset - 1, len(x) - 1):
        own = tuple(x[t - k + 1:t + 1])
        other = tuple(y[t - l + 1:t + 1])
        joint[(x[t + 1], own, other)] += 1
        past_both[(own, other)] += 1
        next_past[(x[t + 1], own)] += 1
        past[own] += 1

    te = 0.0
    for nxt in range(alphabet):
        for own in itertools.product(range(alphabet), repeat=k):
            for other in itertools.product(range(alphabet), repeat=l):
                n_joint = joint.get((nxt, own, other), 0)
                if n_joint == 0:
                    continue
                p_full = n_joint / past_both[(own, other)]
                p_own = next_past[(nxt, own)] / past[own]
                te += n_joint / windows * math.log(p_full / p_own)
    return te / cfg.log_factor


def write_panel(sequences: List[SymbolSequence], outdir, d=0.04, region='Synthetic'):
    """
    Turn state sequences into two-column price files plus a manifest.

    States 0/1/2 become log returns -2d/0/+2d, so fixed-threshold
    symbolization with the same d recovers them exactly. Returns the manifest path.
    """
    os.makedirs(outdir, exist_ok=True)
    step = 2.0 * d
    manifest = ['symbol,path,region']
    for sequence in sequences:
        if sequence.alphabet_size != 3:
            raise ConfigError("price panels can only encode ternary sequences")
        returns = (sequence.states.astype(np.float64) - 1.0) * step
        closes = START_PRICE * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
        dates = pd.bdate_range(START_DATE, periods=len(closes)).to_numpy(dtype='datetime64[D]')
        filename = f"{sequence.symbol}.csv"
        write_price_csv(PriceSeries(sequence.symbol, dates, closes), os.path.join(outdir, filename))
        manifest.append(f"{sequence.symbol},{filename},{region}")
    manifest_path = os.path.join(outdir, 'manifest.csv')
    write_text(manifest_path, '\n'.join(manifest) + '\n')
    logger.info(f"Wrote {len(sequences)} synthetic price file(s) and {manifest_path}")
    return manifest_path


def describe(spec: CoupledProcessSpec, log_base='2') -> str:
    return (f"A={spec.alphabet} eps={format_float(spec.epsilon)} N={spec.length} seed={spec.seed} "
            f"analytic TE={analytic_te(spec.alphabet, spec.epsilon, log_base):.6f}")
