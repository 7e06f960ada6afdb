"""Planted-signal retention task: scoring robustness under aggressive drops.

Sequences contain a small set of signal tokens that attend to each other
strongly; the rest is noise.  Optionally, a few decoy columns receive extreme
single logits from many rows.  An exponential-sum scorer hands each such row's
entire vote to the decoy (a fixed ~1 advantage per outlier row, however large
the outlier), while max-relative normalization compresses the same advantage
by the squared row maximum, so decoys cannot displace the signal.

Retention is the fraction of signal tokens that survive the drop schedule;
the probe reads the mean retained embedding against a fixed direction that
carries the label on signal tokens only.
"""
from dataclasses import dataclass

import numpy as np

from . import oracles
from .errors import DomainError


@dataclass(frozen=True)
class ToyTaskConfig:
    m: int = 32
    signal_count: int = 4
    heads: int = 4
    noise_sd: float = 0.6
    block_boost: float = 4.5
    decoy_count: int = 3
    outlier_rows: int = 48
    outlier_mag: float = 14.0
    n_exp: int = 2
    offset: float = 8.0
    embed_dim: int = 8
    signal_strength: float = 2.0

    def __post_init__(self):
        if self.signal_count < 0 or self.signal_count > self.m // 2:
            raise DomainError("signal count must lie in [0, m/2]")


def make_instance(rng, cfg: ToyTaskConfig, with_outliers: bool):
    """One task instance: attention logits, signal indices, embeddings, label."""
    m, H = cfg.m, cfg.heads
    sig = np.sort(rng.choice(m, size=cfg.signal_count, replace=False))
    A = rng.normal(0.0, cfg.noise_sd, size=(H, m, m))
    if cfg.signal_count:
        A[np.ix_(range(H), sig, sig)] += cfg.block_boost
    if with_outliers and cfg.decoy_count:
        pool = np.setdiff1d(np.arange(m), sig)
        decoys = rng.choice(pool, size=min(cfg.decoy_count, pool.size), replace=False)
        for _ in range(cfg.outlier_rows):
            h = int(rng.integers(H))
            i = int(rng.integers(m))
            j = int(decoys[rng.integers(decoys.size)])
            A[h, i, j] += cfg.outlier_mag
    label = 1 if rng.random() < 0.5 else -1
    emb = rng.normal(0.0, 1.0, size=(m, cfg.embed_dim))
    if cfg.signal_count:
        emb[sig, 0] += cfg.signal_strength * label
    return A, sig, emb, label


def score_tokens(A, scorer, cfg: ToyTaskConfig):
    if scorer == "maxnorm":
        return oracles.maxnorm_scores(A, offset=cfg.offset, n_exp=cfg.n_exp)
    if scorer == "expsum":
        return oracles.expsum_scores(A)
    raise DomainError(f"unknown scorer {scorer!r}")


def run_instance(seed, cfg: ToyTaskConfig, scorer, drops, with_outliers):
    """Apply `drops` half-drops, rescoring the reduced matrix each time.

    Returns (signal_retention or None, probe_correct: bool).
    """
    rng = np.random.default_rng(seed)
    A, sig, emb, label = make_instance(rng, cfg, with_outliers)
    kept = np.arange(cfg.m)
    for _ in range(drops):
        scores = score_tokens(A, scorer, cfg)
        order = np.lexsort((np.arange(scores.size), scores))
        keep_local = np.sort(order[scores.size - scores.size // 2:])
        A = A[:, keep_local][:, :, keep_local]
        kept = kept[keep_local]
    retention = None
    if cfg.signal_count:
        retention = float(np.isin(sig, kept).mean())
    probe = float(emb[kept, 0].mean())
    correct = (probe > 0) == (label > 0)
    return retention, correct


def run_batch(seed, cfg: ToyTaskConfig, scorer, drops, with_outliers, runs):
    """Seeded batch; returns (mean retention or None, probe accuracy, per-run)."""
    seeds = np.random.SeedSequence(seed).generate_state(runs)
    rets, correct = [], 0
    for s in seeds:
        r, ok = run_instance(int(s), cfg, scorer, drops, with_outliers)
        if r is not None:
            rets.append(r)
        correct += ok
    mean_ret = float(np.mean(rets)) if rets else None
    return mean_ret, correct / runs, rets


def paired_comparison(seed, cfg: ToyTaskConfig, drops, with_outliers, runs):
    """Same instances under both scorers; returns per-run retention pairs."""
    seeds = np.random.SeedSequence(seed).generate_state(runs)
    pairs = []
    for s in seeds:
        r_max, _ = run_instance(int(s), cfg, "maxnorm", drops, with_outliers)
        r_exp, _ = run_instance(int(s), cfg, "expsum", drops, with_outliers)
        pairs.append((r_max, r_exp))
    return pairs
