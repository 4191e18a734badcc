"""Prime infrastructure: sieve-backed table, 64-bit primality, Goldbach pairs.

The derivation engine needs three things from this module: fast primality for
integers up to a few times the certification bound, Goldbach decompositions of
even numbers under a deterministic selection policy, and two residue-based
selectors that keep auxiliary quantities odd (so coprime-split inferences
stay available downstream).

The table is a true bitset (one bit per integer) built by a segmented sieve,
so construction memory stays O(segment) on top of the packed result. Queries
above the table limit fall back to deterministic Miller-Rabin, valid for all
64-bit inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SEGMENT_SIZE = 1 << 20
# Refuse tables above this many bits (packed size 1 GiB). Desk-scale runs
# need ~2x the certification bound, far below this.
DEFAULT_MAX_TABLE_BITS = 1 << 33

MAX_Q = "max-q"
MIN_Q = "min-q"
POLICIES = (MAX_Q, MIN_Q)

# Deterministic Miller-Rabin witness tiers. Each entry (bound, witnesses)
# means: for n < bound the listed witnesses decide primality exactly.
# The final tier covers everything below 2^64.
_MR_TIERS: tuple[tuple[int, tuple[int, ...]], ...] = (
    (2047, (2,)),
    (1373653, (2, 3)),
    (9080191, (31, 73)),
    (25326001, (2, 3, 5)),
    (3215031751, (2, 3, 5, 7)),
    (4759123141, (2, 7, 61)),
    (1122004669633, (2, 13, 23, 1662803)),
    (2152302898747, (2, 3, 5, 7, 11)),
    (3474749660383, (2, 3, 5, 7, 11, 13)),
    (341550071728321, (2, 3, 5, 7, 11, 13, 17)),
    (3825123056546413051, (2, 3, 5, 7, 11, 13, 17, 19, 23)),
    (1 << 64, (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)),
)


class GoldbachFailure(RuntimeError):
    """An even number in range admitted no prime pair.

    This would falsify the Goldbach conjecture below the search bound, so it
    must abort the whole run loudly rather than be swallowed.
    """

    def __init__(self, m: int):
        super().__init__(f"no Goldbach pair exists for {m}")
        self.m = m


class SieveBudgetError(RuntimeError):
    """Requested table exceeds the configured memory budget."""


class UnsupportedIntegerError(ValueError):
    """Primality queried beyond the supported 64-bit range."""


@dataclass(frozen=True)
class PrimeTable:
    """Packed primality bitset over 0..limit (bit n set iff n is prime)."""

    limit: int
    _bits: bytes = field(repr=False)

    def __contains__(self, n: int) -> bool:
        if n < 0 or n > self.limit:
            raise ValueError(f"{n} outside table range 0..{self.limit}")
        return bool((self._bits[n >> 3] >> (n & 7)) & 1)

    def as_bool_array(self) -> np.ndarray:
        """Unpacked bool view (index n -> n is prime), length limit+1."""
        raw = np.frombuffer(self._bits, dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.limit + 1].view(bool)

    def primes_array(self) -> np.ndarray:
        return np.flatnonzero(self.as_bool_array())

    def count(self) -> int:
        return int(self.as_bool_array().sum())


def _simple_sieve(limit: int) -> np.ndarray:
    """Plain sieve of Eratosthenes up to limit, bool array, for base primes."""
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


def build_prime_table(
    limit: int,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    max_bits: int = DEFAULT_MAX_TABLE_BITS,
) -> PrimeTable:
    """Segmented sieve of Eratosthenes packed into a bitset.

    segment_size is rounded to a multiple of 8 so segments pack cleanly.
    """
    if limit < 2:
        raise ValueError(f"table limit must be >= 2, got {limit}")
    if limit + 1 > max_bits:
        raise SieveBudgetError(
            f"limit {limit} needs {limit + 1} bits, budget is {max_bits}"
        )
    segment_size = max(8, (segment_size // 8) * 8)
    base_flags = _simple_sieve(math.isqrt(limit))
    base_primes = np.flatnonzero(base_flags)
    chunks: list[np.ndarray] = []
    for low in range(0, limit + 1, segment_size):
        high = min(low + segment_size, limit + 1)
        seg = np.ones(high - low, dtype=bool)
        if low == 0:
            seg[:2] = False
        for p in base_primes:
            p = int(p)
            start = max(p * p, ((low + p - 1) // p) * p)
            if start < high:
                seg[start - low :: p] = False
        chunks.append(np.packbits(seg, bitorder="little"))
    return PrimeTable(limit=limit, _bits=b"".join(c.tobytes() for c in chunks))


def _miller_rabin(n: int) -> bool:
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for bound, witnesses in _MR_TIERS:
        if n < bound:
            break
    for a in witnesses:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_prime(n: int, table: PrimeTable | None = None) -> bool:
    """Exact primality for 0 <= n < 2^64; uses the table when it covers n."""
    if n >= 1 << 64:
        raise UnsupportedIntegerError(f"{n} is beyond the supported 64-bit range")
    if n < 2:
        return False
    if table is not None and n <= table.limit:
        return n in table
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    return _miller_rabin(n)


def primes_upto(limit: int) -> list[int]:
    """Ascending primes <= limit (convenience for small bounds)."""
    if limit < 2:
        return []
    return [int(p) for p in np.flatnonzero(_simple_sieve(limit))]


@dataclass(frozen=True)
class GoldbachPair:
    """Decomposition m = p + q with p >= q, both prime."""

    m: int
    p: int
    q: int
    policy: str


def goldbach_pair(m: int, table: PrimeTable | None = None, policy: str = MAX_Q) -> GoldbachPair:
    """Find m = p + q, p >= q both prime, under a deterministic policy.

    max-q picks the largest prime q <= m/2 with m-q prime (minimizes p-q);
    min-q picks the smallest such q. Raises GoldbachFailure if no pair
    exists, which must abort the caller's run.
    """
    if m < 4 or m % 2:
        raise ValueError(f"Goldbach search needs even m >= 4, got {m}")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}, options: {POLICIES}")
    half = m // 2
    if policy == MAX_Q:
        # Descend over odd candidates from m//2; q = 2 only works for m = 4.
        q = half if half % 2 else half - 1
        while q >= 3:
            if is_prime(q, table) and is_prime(m - q, table):
                return GoldbachPair(m, m - q, q, policy)
            q -= 2
        if is_prime(m - 2, table):
            return GoldbachPair(m, m - 2, 2, policy)
    else:
        if is_prime(m - 2, table):
            return GoldbachPair(m, m - 2, 2, policy)
        q = 3
        while q <= half:
            if is_prime(q, table) and is_prime(m - q, table):
                return GoldbachPair(m, m - q, q, policy)
            q += 2
    raise GoldbachFailure(m)


# Residue selectors. select_r feeds the auxiliary-prime derivation: r is an
# odd prime with p + r ≡ 4 (mod 8), so (p+r)/4 and (p-r)/2 are both odd.
_R_BY_RESIDUE = {1: 3, 3: 17, 5: 7, 7: 5}
# select_q_for_prime feeds the odd-prime derivation: q makes (n+q)/2 odd.
_Q_BY_RESIDUE = {1: 5, 3: 3}


def select_r(p: int) -> int:
    """Prime r in {3,5,7,17} with (p + r) ≡ 4 (mod 8); p must be odd."""
    if p % 2 == 0:
        raise ValueError(f"select_r needs odd p, got {p}")
    return _R_BY_RESIDUE[p % 8]


def select_q_for_prime(n: int) -> int:
    """q in {3,5} with (n + q) ≡ 2 (mod 4), i.e. (n+q)/2 odd; n must be odd."""
    if n % 2 == 0:
        raise ValueError(f"select_q_for_prime needs odd n, got {n}")
    return _Q_BY_RESIDUE[n % 4]


@dataclass
class GoldbachSweepReport:
    """Bulk statistics for every even m in 4..limit under both policies."""

    limit: int
    evens_checked: int
    min_q_max: int
    min_q_max_at: int
    min_q_hist: dict[int, int]
    max_gap_max: int  # largest p-q over the max-q policy witnesses
    max_gap_max_at: int
    max_gap_hist: dict[int, int]
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "limit": self.limit,
            "evens_checked": self.evens_checked,
            "min_q_policy": {
                "largest_min_q": self.min_q_max,
                "at_m": self.min_q_max_at,
                "histogram": {str(k): v for k, v in self.min_q_hist.items()},
            },
            "max_q_policy": {
                "largest_p_minus_q": self.max_gap_max,
                "at_m": self.max_gap_max_at,
                "histogram_p_minus_q": {str(k): v for k, v in self.max_gap_hist.items()},
            },
            "elapsed_s": round(self.elapsed_s, 3),
        }


def goldbach_sweep(limit: int, hist_cap: int = 64) -> GoldbachSweepReport:
    """Verify every even 4 <= m <= limit has a pair under both policies.

    Vectorized: the min-q witness falls out of marking sums p+q for primes q
    ascending; the max-q witness comes from scanning t = (p-q)/2 upward around
    m/2. Both witness arrays are re-verified against the sieve. Histograms
    are exact below hist_cap distinct keys, then bucketed into "other".
    Raises GoldbachFailure on any uncovered m.
    """
    import time as _time

    t0 = _time.monotonic()
    if limit < 4:
        raise ValueError("sweep needs limit >= 4")
    limit -= limit % 2
    table = build_prime_table(limit)
    sieve = table.as_bool_array()
    primes = table.primes_array()
    odd_primes = primes[1:] if primes.size and primes[0] == 2 else primes

    half = limit // 2
    # index h stands for m = 2h, h in 2..half
    min_q = np.zeros(half + 1, dtype=np.int64)
    min_q[2] = 2  # 4 = 2 + 2
    unresolved = (half - 1) - 1
    for q in odd_primes:
        if unresolved <= 0:
            break
        q = int(q)
        ps = odd_primes[(odd_primes >= q) & (odd_primes <= limit - q)]
        if ps.size == 0:
            continue
        h = (ps + q) >> 1
        h = h[min_q[h] == 0]
        if h.size:
            min_q[h] = q
            unresolved -= h.size
    if unresolved > 0:
        first = int(np.flatnonzero(min_q[2:] == 0)[0]) + 2
        raise GoldbachFailure(2 * first)

    # max-q policy: smallest t >= 0 with h-t and h+t both prime (q = h-t).
    t_min = np.zeros(half + 1, dtype=np.int64)
    open_h = np.arange(2, half + 1, dtype=np.int64)
    t = 0
    while open_h.size:
        live = open_h - t >= 2
        if not live.all():
            dead = open_h[~live]
            raise GoldbachFailure(int(2 * dead[0]))
        ok = sieve[open_h - t] & sieve[open_h + t]
        t_min[open_h[ok]] = t
        open_h = open_h[~ok]
        t += 1

    # Independent re-verification of both witness arrays against the sieve.
    h_all = np.arange(2, half + 1, dtype=np.int64)
    q_min_arr = min_q[2:]
    p_min_arr = 2 * h_all - q_min_arr
    if not (sieve[q_min_arr] & sieve[p_min_arr]).all():
        raise AssertionError("min-q witness failed sieve re-verification")
    q_max_arr = h_all - t_min[2:]
    p_max_arr = h_all + t_min[2:]
    if not (sieve[q_max_arr] & sieve[p_max_arr]).all():
        raise AssertionError("max-q witness failed sieve re-verification")

    def _hist(values: np.ndarray) -> dict[int, int]:
        keys, counts = np.unique(values, return_counts=True)
        out: dict[int, int] = {}
        other = 0
        for k, c in zip(keys.tolist(), counts.tolist()):
            if len(out) < hist_cap:
                out[int(k)] = int(c)
            else:
                other += int(c)
        if other:
            out[-1] = other  # key -1 marks the overflow bucket
        return out

    i_minmax = int(np.argmax(q_min_arr))
    gaps = 2 * t_min[2:]
    i_gapmax = int(np.argmax(gaps))
    return GoldbachSweepReport(
        limit=limit,
        evens_checked=int(h_all.size),
        min_q_max=int(q_min_arr[i_minmax]),
        min_q_max_at=int(2 * h_all[i_minmax]),
        min_q_hist=_hist(q_min_arr),
        max_gap_max=int(gaps[i_gapmax]),
        max_gap_max_at=int(2 * h_all[i_gapmax]),
        max_gap_hist=_hist(gaps),
        elapsed_s=_time.monotonic() - t0,
    )
