"""Cluster-based private data aggregation (CPDA): share algebra and recovery.

Each of the m cluster nodes holds a private reading and m-1 secret
polynomial coefficients. Nodes evaluate their masking polynomial at every
node's public seed, exchange the cross shares encrypted, and sum the
shares per seed into aggregate F values. The reading sum is recovered
either by an exact Vandermonde solve over all F values (original mode) or
by repeated integer division of the leader's own F value by its
deliberately large seed (efficient mode). Hardened mode gates the run on
triangle checks over seeds and shares.

All arithmetic is exact arbitrary-precision integer/rational arithmetic;
the recovery routes and the attacks on them depend on exact floor
division. Operation counters follow the protocol's published accounting
granularity (e.g. one matrix inversion per solve, not elementary flops).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    CorruptedTranscriptError,
    NoSecureLinkError,
    SeedCheckError,
    ShareCheckError,
    SingularMatrixError,
)

MODES = ("original", "efficient", "hardened")


@dataclass
class OpCounters:
    """Per-round operation tallies."""

    add: int = 0
    sub: int = 0
    mul: int = 0
    div: int = 0
    exp: int = 0
    enc: int = 0
    mat_mul: int = 0
    mat_inv: int = 0

    def merge(self, other: "OpCounters") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def as_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class ClusterSeeds:
    """Ordered public seeds, one per cluster node (node 0 is the leader)."""

    seeds: tuple[int, ...]

    def __post_init__(self):
        if len(self.seeds) < 2:
            raise ValueError("need at least two seeds")
        if any(s < 1 for s in self.seeds):
            raise ValueError(f"seeds must be >= 1, got {self.seeds}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be distinct, got {self.seeds}")

    def __len__(self) -> int:
        return len(self.seeds)

    def __getitem__(self, i: int) -> int:
        return self.seeds[i]


@dataclass(frozen=True)
class NodeSecret:
    """A node's private reading and its masking-polynomial coefficients.

    ``coefficients[i]`` multiplies seed**(i+1). Zero coefficients are
    accepted so degenerate cases can be exercised directly; the samplers
    used by the simulator draw them from [1, R).
    """

    private_value: int
    coefficients: tuple[int, ...]

    def __post_init__(self):
        if self.private_value < 0:
            raise ValueError("private_value must be non-negative")
        if any(c < 0 for c in self.coefficients):
            raise ValueError("coefficients must be non-negative")


@dataclass(frozen=True)
class ShareVector:
    """One node's polynomial evaluated at every seed, in seed order."""

    values: tuple[int, ...]


@dataclass(frozen=True)
class FValue:
    """Sum of all cluster shares targeted at one seed."""

    seed_index: int
    value: int


@dataclass
class ClusterResult:
    recovered_sum: int
    recovered_coefficient_sums: tuple[int, ...]
    counters: OpCounters
    mode: str


def compute_shares(secret: NodeSecret, seeds: ClusterSeeds, counters: OpCounters) -> ShareVector:
    """Evaluate the node's masking polynomial at every public seed.

    Per share entry of degree d = len(coefficients): d additions, d
    multiplications, d-1 exponentiations (the first power is not counted
    as an exponentiation).
    """
    degree = len(secret.coefficients)
    values = []
    for s in seeds.seeds:
        v = secret.private_value
        power = 1
        for c in secret.coefficients:
            power *= s
            v += c * power
        values.append(v)
        counters.add += degree
        counters.mul += degree
        counters.exp += max(degree - 1, 0)
    return ShareVector(values=tuple(values))


_BLOCK_BITS = 256


def _keystream(pair_key: int, width: int) -> int:
    """Deterministic keystream of ``width`` bits with the top bit set."""
    blocks = []
    for i in range(width // _BLOCK_BITS):
        material = hashlib.sha256(
            b"wsnagg-pairwise:" + str(pair_key).encode() + b":" + str(i).encode()
        ).digest()
        blocks.append(int.from_bytes(material, "big"))
    stream = 0
    for b in blocks:
        stream = (stream << _BLOCK_BITS) | b
    return stream | (1 << (width - 1))


def pairwise_transform(
    value: int, pair_key: int | None, direction: str, counters: OpCounters
) -> int:
    """Keyed invertible stand-in for symmetric encryption.

    XORs the value with a keystream sized in 256-bit blocks; the forced
    top keystream bit makes the ciphertext's bit length identify the
    block width, so decryption is unambiguous for any plaintext size.
    NOT cryptographically secure; it models an encryption black box with
    a per-message cost (the enc counter ticks once per encrypted
    message).
    """
    if pair_key is None:
        raise NoSecureLinkError("no established pair key for this exchange")
    if value < 0:
        raise ValueError("the transform is defined on non-negative integers")
    if direction == "encrypt":
        counters.enc += 1
        width = _BLOCK_BITS * ((value.bit_length() + 1 + _BLOCK_BITS - 1) // _BLOCK_BITS)
    elif direction == "decrypt":
        width = _BLOCK_BITS * ((value.bit_length() + _BLOCK_BITS - 1) // _BLOCK_BITS)
    else:
        raise ValueError(f"direction must be encrypt or decrypt, got {direction!r}")
    return value ^ _keystream(pair_key, max(width, _BLOCK_BITS))


def assemble_F(
    shares_at_seed: Sequence[int],
    seed_index: int,
    cluster_size: int,
    counters: OpCounters,
) -> FValue:
    """Sum the m share values targeted at one seed.

    Counts the m-1 additions of the summation itself; the additional
    coefficient-composition additions of the published accounting are
    applied by run_cluster.
    """
    if len(shares_at_seed) != cluster_size:
        raise ValueError(
            f"expected {cluster_size} shares for seed {seed_index}, got {len(shares_at_seed)}"
        )
    counters.add += cluster_size - 1
    return FValue(seed_index=seed_index, value=sum(shares_at_seed))


def solve_vandermonde(
    seeds: ClusterSeeds | Sequence[int],
    f_values: Sequence[FValue],
    counters: OpCounters,
) -> tuple[int, tuple[int, ...]]:
    """Solve G U = F exactly over the rationals for (sum, r1, ..., r_{m-1}).

    G is the Vandermonde matrix of the seeds. Counted as one matrix
    inversion plus one matrix multiplication. Raises SingularMatrixError
    for repeated seeds and CorruptedTranscriptError if the solution is
    not integral.
    """
    values = seeds.seeds if isinstance(seeds, ClusterSeeds) else tuple(seeds)
    m = len(values)
    if len(f_values) != m:
        raise ValueError(f"expected {m} F values, got {len(f_values)}")
    if len(set(values)) != m:
        raise SingularMatrixError(f"repeated seeds {values}")
    solution = _interpolate(values, [f.value for f in f_values])
    counters.mat_inv += 1
    counters.mat_mul += 1
    out = []
    for x in solution:
        if x.denominator != 1:
            raise CorruptedTranscriptError(f"non-integer recovery {x}")
        out.append(int(x))
    return out[0], tuple(out[1:])


def _interpolate(xs: Sequence[int], ys: Sequence[int]) -> list[Fraction]:
    """Monomial coefficients of the polynomial through (xs, ys), exactly.

    Newton divided differences expanded to the monomial basis; O(m^2)
    exact operations, equivalent to inverting the Vandermonde system.
    """
    m = len(xs)
    dd = [Fraction(y) for y in ys]
    for j in range(1, m):
        for i in range(m - 1, j - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - j])
    coeffs = [Fraction(0)] * m
    basis = [Fraction(1)]  # prod_{k<i} (t - x_k), lowest power first
    for i in range(m):
        for p, b in enumerate(basis):
            coeffs[p] += dd[i] * b
        if i < m - 1:
            # basis *= (t - x_i)
            shifted = [Fraction(0)] + basis
            basis = [s - xs[i] * b for s, b in zip(shifted, basis + [Fraction(0)])]
    return coeffs


def recover_by_division(
    f: FValue, seed: int, counters: OpCounters, degree: int = 2
) -> tuple[int, tuple[int, ...]]:
    """Peel (sum, r1, ..., r_degree) out of one F value by floor division.

    Exact only when the seed dominates: seed**i must exceed everything
    below it (the separation the leader enforces by choosing the seed with
    pick_malicious_seed's bound). The callee cannot verify this; with the
    bound violated the returned triple is simply wrong. Counts degree
    divisions and degree subtractions.
    """
    remainder = f.value
    coeffs = [0] * degree
    for i in range(degree, 0, -1):
        power = seed**i
        coeffs[i - 1] = remainder // power
        remainder -= coeffs[i - 1] * power
        counters.div += 1
        counters.sub += 1
    return remainder, tuple(coeffs)


def validate_seeds(seeds: Iterable[int]) -> None:
    """Hardened check: every seed strictly below the sum of the others.

    Raises SeedCheckError naming the first offending seed. Boundary
    equality rejects (the rule is strict).
    """
    values = list(seeds)
    total = sum(values)
    for s in values:
        if s >= total - s:
            raise SeedCheckError(s)


def validate_shares(shares_at_one_seed: Iterable[int]) -> None:
    """Hardened check: every share strictly below the sum of the others."""
    values = list(shares_at_one_seed)
    total = sum(values)
    for v in values:
        if v >= total - v:
            raise ShareCheckError(v)


def seeds_are_valid(seeds: Iterable[int]) -> bool:
    try:
        validate_seeds(seeds)
    except SeedCheckError:
        return False
    return True


def shares_are_valid(shares: Iterable[int]) -> bool:
    try:
        validate_shares(shares)
    except ShareCheckError:
        return False
    return True


@dataclass(frozen=True)
class Transcript:
    """Everything produced during one in-cluster exchange.

    ``shares[i]`` is node i's ShareVector; ``f_values[j]`` the aggregate
    at seed j. Attack code consumes transcripts read-only.
    """

    seeds: ClusterSeeds
    shares: tuple[ShareVector, ...]
    f_values: tuple[FValue, ...]


def exchange_transcript(secrets: Sequence[NodeSecret], seeds: ClusterSeeds) -> Transcript:
    """Pure share/aggregate algebra of an honest exchange, without counters."""
    scratch = OpCounters()
    shares = tuple(compute_shares(s, seeds, scratch) for s in secrets)
    f_values = tuple(
        FValue(seed_index=j, value=sum(sv.values[j] for sv in shares))
        for j in range(len(seeds))
    )
    return Transcript(seeds=seeds, shares=shares, f_values=f_values)


def _default_pair_key(i: int, j: int) -> int:
    a, b = (i, j) if i < j else (j, i)
    return (a + 1) * 1_000_003 + (b + 1)


def run_cluster(
    secrets: Sequence[NodeSecret],
    seeds: ClusterSeeds,
    mode: str,
    counters: OpCounters | None = None,
    pair_keys: dict[tuple[int, int], int] | None = None,
) -> ClusterResult:
    """Execute one full in-cluster round and recover the reading sum.

    Node 0 is the cluster leader and seeds[0] its seed. Modes:

    * original  - full cross-share exchange, Vandermonde recovery.
    * efficient - shares computed at the leader seed only, recovery by
      integer division (the leader seed must satisfy the separation
      bound; see attack.pick_malicious_seed).
    * hardened  - original plus the seed and share triangle checks;
      any rejection raises ProtocolAbort before recovery. The checks
      need three participants (two values can never each be strictly
      below the other), so clusters of two run the exchange unchecked.

    ``pair_keys`` maps (i, j) node-index pairs to established keys; by
    default synthetic per-pair keys stand in for a completed key
    predistribution. A missing pair raises NoSecureLinkError.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    m = len(secrets)
    if m < 2:
        raise ValueError("a cluster needs at least two nodes")
    if len(seeds) != m:
        raise ValueError(f"need {m} seeds for {m} nodes, got {len(seeds)}")
    if any(len(s.coefficients) != m - 1 for s in secrets):
        raise ValueError("every node needs m-1 coefficients")
    counters = counters if counters is not None else OpCounters()

    def key_for(i: int, j: int) -> int:
        if pair_keys is None:
            return _default_pair_key(i, j)
        p = (i, j) if i < j else (j, i)
        if p not in pair_keys:
            raise NoSecureLinkError(f"no pair key for nodes {p}")
        return pair_keys[p]

    checks_apply = mode == "hardened" and m >= 3
    if checks_apply:
        validate_seeds(seeds.seeds)

    if mode == "efficient":
        return _run_efficient(secrets, seeds, counters, key_for)

    shares = [compute_shares(s, seeds, counters) for s in secrets]

    # Encrypted cross-share exchange: node i sends its share at seed j to
    # node j, for every j != i. Round-trip through the keyed transform.
    received = [[0] * m for _ in range(m)]  # received[j][i] = share of node i at seed j
    for i in range(m):
        for j in range(m):
            if i == j:
                received[j][i] = shares[i].values[j]
                continue
            ct = pairwise_transform(shares[i].values[j], key_for(i, j), "encrypt", counters)
            received[j][i] = pairwise_transform(ct, key_for(i, j), "decrypt", counters)

    if checks_apply:
        for j in range(m):
            validate_shares(received[j])

    f_values = []
    for j in range(m):
        f_values.append(assemble_F(received[j], j, m, counters))
        # Published accounting books each F at 2(m-1) additions: the m-1
        # summation steps above plus m-1 coefficient-composition steps.
        counters.add += m - 1

    total, coeff_sums = solve_vandermonde(seeds, f_values, counters)
    return ClusterResult(
        recovered_sum=total,
        recovered_coefficient_sums=coeff_sums,
        counters=counters,
        mode=mode,
    )


def _run_efficient(secrets, seeds, counters, key_for) -> ClusterResult:
    """Leader-seed-only variant: one share per node, division recovery."""
    m = len(secrets)
    leader_seed = seeds[0]
    degree = m - 1
    own_shares = []
    for s in secrets:
        v = s.private_value
        power = 1
        for c in s.coefficients:
            power *= leader_seed
            v += c * power
        own_shares.append(v)
        counters.add += degree
        counters.mul += degree
        counters.exp += max(degree - 1, 0)

    received = [own_shares[0]]
    for i in range(1, m):
        ct = pairwise_transform(own_shares[i], key_for(0, i), "encrypt", counters)
        received.append(pairwise_transform(ct, key_for(0, i), "decrypt", counters))

    f_leader = assemble_F(received, 0, m, counters)
    counters.add += m - 1
    total, coeff_sums = recover_by_division(f_leader, leader_seed, counters, degree=degree)
    return ClusterResult(
        recovered_sum=total,
        recovered_coefficient_sums=coeff_sums,
        counters=counters,
        mode="efficient",
    )
