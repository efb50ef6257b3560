"""Insider attacks against the original CPDA exchange.

A participant that chooses its public seed far larger than every other
magnitude in play can strip the masking polynomial off any value it
receives by repeated integer division, because each seed power then
dominates everything below it. The cluster leader applies this to the
cross shares it receives; an ordinary member applies it to its own
aggregate and to the share a peer sent it. A second variant needs no
oversized seed at all: it works whenever the victims' coefficients are
small relative to an honestly sized seed.

Attacks are pure functions over a received transcript; they never mutate
protocol state. They raise AttackFailedError only on structural
impossibilities (negative recovered coefficients, inconsistent
aggregates); when the attacker's magnitude assumption is silently wrong
they simply return wrong values, as the real attacker would.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AttackFailedError


@dataclass(frozen=True)
class LeaderView:
    """What a malicious cluster leader holds after an honest exchange.

    The leader chose ``own_seed``; ``share_from_b``/``share_from_c`` are
    the decrypted cross shares targeted at that seed, ``f_from_b``/
    ``f_from_c`` the aggregates broadcast at the public peer seeds.
    """

    own_value: int
    own_coefficients: tuple[int, int]
    own_seed: int
    share_from_b: int
    share_from_c: int
    f_from_b: int
    f_from_c: int
    seed_b: int
    seed_c: int


@dataclass(frozen=True)
class MemberView:
    """What a malicious cluster member holds after an honest exchange.

    The member chose ``own_seed``; it received the leader's and the other
    member's shares at that seed, computed its own aggregate ``f_own``,
    and overheard the other member's aggregate ``f_other`` (aggregates
    travel unencrypted).
    """

    own_value: int
    own_coefficients: tuple[int, int]
    own_seed: int
    share_from_leader: int
    share_from_other: int
    f_own: int
    f_other: int
    seed_leader: int
    seed_other: int


def pick_malicious_seed(value_bound: int, coeff_bound: int, cluster_size: int) -> int:
    """Seed large enough that floor division peels any in-cluster value.

    Returns x = 2*m*(D + R*m). For v = d + r1*x + r2*x**2 with
    d < D*m and r1 < R*m (covering both single shares and m-fold
    aggregates), d + r1*x < x**2 holds, so v // x**2 = r2 and the
    subsequent divisions are exact.
    """
    if value_bound < 1 or coeff_bound < 1:
        raise ValueError("bounds must be >= 1")
    m = cluster_size
    return 2 * m * (value_bound + coeff_bound * m)


def _peel(value: int, seed: int, degree: int = 2) -> tuple[int, list[int]]:
    """Top-down floor-division split of value = d + sum c_i seed**i."""
    remainder = value
    coeffs = [0] * degree
    for i in range(degree, 0, -1):
        power = seed**i
        coeffs[i - 1] = remainder // power
        remainder -= coeffs[i - 1] * power
    return remainder, coeffs


def leader_attack(view: LeaderView) -> tuple[int, int]:
    """Recover both members' private readings from the leader's view.

    Peels each member's coefficients off the share it sent (exact when
    the leader's seed bound holds), forms the coefficient sums with the
    leader's own pair, then uses the two broadcast aggregates: the first
    yields the cluster sum, hence the second member's reading given the
    first's; the second aggregate must agree or the transcript is
    structurally inconsistent.
    """
    b, (r1_b, r2_b) = _peel(view.share_from_b, view.own_seed)
    c_direct, (r1_c, r2_c) = _peel(view.share_from_c, view.own_seed)
    if min(r1_b, r2_b, r1_c, r2_c, b, c_direct) < 0:
        raise AttackFailedError("negative recovered coefficient")
    r1 = view.own_coefficients[0] + r1_b + r1_c
    r2 = view.own_coefficients[1] + r2_b + r2_c
    sum_from_b = view.f_from_b - r1 * view.seed_b - r2 * view.seed_b**2
    sum_from_c = view.f_from_c - r1 * view.seed_c - r2 * view.seed_c**2
    if sum_from_b != sum_from_c:
        raise AttackFailedError("aggregates disagree on the recovered sum")
    c = sum_from_b - view.own_value - b
    return b, c


def member_attack(view: MemberView) -> tuple[int, int]:
    """Recover the leader's and the other member's readings from a member's view.

    The member's own aggregate yields the coefficient sums (and the
    cluster sum) by division against its seed; the other member's share
    yields that member's coefficients and reading the same way. The
    leader's coefficients follow by subtraction, and its reading falls
    out of the share it sent.
    """
    y = view.own_seed
    total, (r1, r2) = _peel(view.f_own, y)
    c, (r1_c, r2_c) = _peel(view.share_from_other, y)
    r1_a = r1 - view.own_coefficients[0] - r1_c
    r2_a = r2 - view.own_coefficients[1] - r2_c
    if min(r1_a, r2_a, r1_c, r2_c, total, c) < 0:
        raise AttackFailedError("negative recovered coefficient")
    a = view.share_from_leader - r1_a * y - r2_a * y**2
    return a, c


def large_coefficient_attack(view: MemberView) -> tuple[int, int]:
    """Recover the leader's and other member's readings without an oversized seed.

    Works when those two nodes drew coefficients that are still below the
    member's (honestly sized) seed while their shares dwarf the member's
    own: the same top-down division peels their coefficients off the
    shares they sent, and the overheard aggregate cross-checks the total.
    The share triangle check exists precisely to catch the skewed share
    magnitudes this attack rides on.
    """
    y = view.own_seed
    a, (r1_a, r2_a) = _peel(view.share_from_leader, y)
    c, (r1_c, r2_c) = _peel(view.share_from_other, y)
    if min(r1_a, r2_a, r1_c, r2_c, a, c) < 0:
        raise AttackFailedError("negative recovered coefficient")
    r1 = r1_a + view.own_coefficients[0] + r1_c
    r2 = r2_a + view.own_coefficients[1] + r2_c
    z = view.seed_other
    total_from_other = view.f_other - r1 * z - r2 * z**2
    if total_from_other != a + view.own_value + c:
        raise AttackFailedError("aggregate disagrees with recovered readings")
    return a, c
