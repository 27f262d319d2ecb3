"""Block partitions and simulated candidate vectors.

A candidate is built from one block sum per coordinate: plain block sums of
the base law, or exponentially tilted ones, each optionally normalized to
unit total. Normalized candidates whose total is exactly zero carry an
explicit infinity sentinel (values = None) which every constraint rejects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections import Counter

import numpy as np

from . import distributions as dists
from .distributions import TiltedBlockSpec, ZetaSpec

VARIANTS = ("plain_W", "normalized_W", "tilted_V", "normalized_V")

# replications are simulated in fixed-size chunks; chunking is part of the
# determinism contract (results must not depend on worker count)
CHUNK = 65536


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class BlockPartition:
    sizes: tuple[int, ...]
    source: str  # "deterministic_from_P" | "empirical_from_sample"
    weights: tuple[float, ...]  # the defining frequency vector

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def k(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class CandidateVector:
    values: np.ndarray | None  # None encodes the infinity sentinel
    variant: str
    scale: float

    @property
    def is_sentinel(self) -> bool:
        return self.values is None

    def scaled_values(self) -> np.ndarray | None:
        if self.values is None:
            return None
        return self.scale * self.values


def make_partition(P, n: int) -> BlockPartition:
    """Deterministic blocks of sizes floor(n * p_k / M_P), remainder in the last.

    Requires n >= max_k M_P / p_k so every block is nonempty.
    """
    P = np.asarray(P, dtype=float)
    if np.any(P <= 0):
        raise PartitionError("P must have strictly positive components")
    w = P / P.sum()
    bound = math.ceil(max(1.0 / w))
    if n < max(1.0 / w):
        raise PartitionError(
            f"n={n} too small: need n >= {max(1.0 / w):.6g} (smallest valid integer {bound})"
        )
    sizes = [int(math.floor(n * wk)) for wk in w[:-1]]
    sizes.append(n - sum(sizes))
    if min(sizes) < 1:
        raise PartitionError(f"n={n} leaves an empty block; increase n")
    return BlockPartition(tuple(sizes), "deterministic_from_P", tuple(w))


def risk_partition(sample, categories=None) -> BlockPartition:
    """Empirical blocks: size_k = multiplicity of category k in the sample.

    Every category must be observed at least once. Categories default to the
    sorted distinct labels of the sample.
    """
    labels = list(sample)
    if not labels:
        raise PartitionError("empty sample")
    counts = Counter(labels)
    if categories is None:
        categories = sorted(counts)
    missing = [c for c in categories if counts.get(c, 0) == 0]
    if missing:
        raise PartitionError(f"categories never observed in the sample: {missing}")
    extra = set(counts) - set(categories)
    if extra:
        raise PartitionError(f"sample contains labels outside the categories: {sorted(extra)}")
    sizes = tuple(counts[c] for c in categories)
    n = sum(sizes)
    return BlockPartition(sizes, "empirical_from_sample", tuple(s / n for s in sizes))


def blow_up(partition: BlockPartition, m: int) -> BlockPartition:
    """m-fold partition: every block size multiplied by m."""
    if m < 1:
        raise PartitionError("blow-up factor must be >= 1")
    return BlockPartition(
        tuple(m * s for s in partition.sizes), partition.source, partition.weights
    )


def empirical_weights(partition: BlockPartition) -> np.ndarray:
    return np.array(partition.sizes, dtype=float) / partition.n


# purposes namespace the Philox counter so different draw paths never collide
PURPOSE_CANDIDATE = 1


def block_sum_matrix(
    partition: BlockPartition,
    zeta: ZetaSpec,
    taus,
    seed: int,
    chunk_index: int,
    count: int,
    purpose: int = PURPOSE_CANDIDATE,
) -> np.ndarray:
    """(count, K) matrix of tilted block sums for one replication chunk.

    taus is a length-K vector of tilts (zeros give the plain law). Each
    block's column comes from its own counter-based substream, so the value
    at (replication, block) is a pure function of (seed, purpose, chunk,
    block) and the offset inside the chunk.
    """
    taus = np.asarray(taus, dtype=float)
    out = np.empty((count, partition.k))
    for k, (size, tau) in enumerate(zip(partition.sizes, taus)):
        rng = dists.substream(seed, purpose, k, chunk_index)
        out[:, k] = dists.sample_tilted_core(zeta, float(tau), size, rng, size=count)
    return out


def candidates_from_sums(sums: np.ndarray, n: int, normalized: bool):
    """Map raw block sums to candidate coordinates.

    Plain variants divide by n; normalized variants divide by the total and
    return (values, finite_mask) where rows with exact zero total are the
    infinity sentinel (masked out).
    """
    if not normalized:
        return sums / n, np.ones(len(sums), dtype=bool)
    totals = sums.sum(axis=1)
    finite = totals != 0.0
    vals = np.empty_like(sums)
    vals[finite] = sums[finite] / totals[finite, None]
    # kill the rounding residue so finite rows sum to 1 exactly
    with np.errstate(invalid="ignore"):
        vals[finite] /= vals[finite].sum(axis=1)[:, None]
    vals[~finite] = np.nan
    return vals, finite


def draw_candidate(
    partition: BlockPartition,
    law,
    variant: str,
    scale: float,
    seed: int,
    replication: int,
) -> CandidateVector:
    """One candidate vector for a given replication index.

    law is a ZetaSpec for the plain variants or a sequence of
    TiltedBlockSpec (one per block) for the tilted ones.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown candidate variant {variant!r}")
    tilted = variant in ("tilted_V", "normalized_V")
    if tilted:
        blocks = list(law)
        if len(blocks) != partition.k:
            raise ValueError("need one TiltedBlockSpec per block")
        zeta = blocks[0].zeta
        taus = [b.tau for b in blocks]
        for b, size in zip(blocks, partition.sizes):
            if b.block_size != size:
                raise ValueError("TiltedBlockSpec block sizes must match the partition")
    else:
        zeta = law
        taus = [0.0] * partition.k
    sums = block_sum_matrix(partition, zeta, taus, seed, replication, 1)
    normalized = variant in ("normalized_W", "normalized_V")
    vals, finite = candidates_from_sums(sums, partition.n, normalized)
    if not finite[0]:
        return CandidateVector(None, variant, scale)
    return CandidateVector(vals[0].copy(), variant, scale)
