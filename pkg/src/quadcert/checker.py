"""Independent certificate verification, trusting nothing from the generator.

A certificate file is accepted iff:

  1. every line parses under the JSON-lines contract;
  2. no fact is justified twice;
  3. every prerequisite of a step is fact 0, a base-range fact (<= 20), or
     the fact of an earlier line (line order must be a valid topological
     order; `reorder=True` first applies a topological sort for files
     produced by tools that do not guarantee ordering);
  4. every step passes the core validation rules with primality, gcd, and
     congruence facts recomputed here (never read from the certificate);
  5. every n in 1..claimed_bound has a justifying step.

All violations are collected and reported, never just the first. A
prerequisite that is neither base-range nor previously established is
classified at end of file: if some later line justifies it, the violation is
a "cycle" (forward reference); otherwise "missing_prereq".

The optional numeric spot check re-evaluates a seeded random sample of steps
directly against f(x) = x^2 in exact integer arithmetic: for a parallelogram
step (p+q)^2 + (p-q)^2 = 2p^2 + 2q^2, for products a^2 b^2 = (ab)^2. On an
accepted store these are identities, so any mismatch is a fatal internal
inconsistency rather than a reportable rejection.
"""

from __future__ import annotations

import heapq
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

from .model import (
    BASE_LIMIT,
    COVERAGE_GAP,
    CYCLE,
    DUPLICATE_FACT,
    MISSING_PREREQ,
    Base,
    CertificateStep,
    CoprimeProduct,
    CoprimeQuotient,
    ParallelogramClose,
    Violation,
    demanded_prereqs,
    iter_steps,
    slot_values,
    validate_step,
)
from .primes import is_prime


@dataclass
class CheckReport:
    accepted: bool
    violations: list[Violation]
    coverage_gaps: list[int]
    stats: dict

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "violations": [v.to_dict() for v in self.violations],
            "coverage_gaps": list(self.coverage_gaps),
            "stats": dict(self.stats),
        }


def _base_eligible(v: int) -> bool:
    return 0 <= v <= BASE_LIMIT


def _relabel(deferred: list[Violation], all_facts: set[int]) -> list[Violation]:
    out = []
    for v in deferred:
        if v.value is not None and v.value in all_facts:
            out.append(
                Violation(
                    CYCLE,
                    f"prerequisite {v.value} is justified only on a later line"
                    " (line order must be topological)",
                    line=v.line,
                    fact=v.fact,
                    value=v.value,
                )
            )
        else:
            out.append(
                Violation(
                    MISSING_PREREQ,
                    f"prerequisite {v.value} is never justified",
                    line=v.line,
                    fact=v.fact,
                    value=v.value,
                )
            )
    return out


def _sort_key(v: Violation):
    return (v.line if v.line is not None else 0, v.code, v.detail)


def _sequential_scan(
    steps: Iterable[tuple[int, CertificateStep]],
    *,
    validate_inline: bool,
    collect: bool,
):
    """Single ordered pass: duplicates, establishment, depth; optionally the
    full per-step validation inline (threads == 1) and/or step collection."""
    seen: set[int] = set()
    depth: dict[int, int] = {}
    max_depth = 0
    count = 0
    immediate: list[Violation] = []
    deferred: list[Violation] = []
    collected: list[tuple[int, CertificateStep]] = []

    def established(v: int) -> bool:
        return _base_eligible(v) or v in seen

    for line_no, step in steps:
        count += 1
        if collect:
            collected.append((line_no, step))
        if step.fact in seen:
            immediate.append(
                Violation(
                    DUPLICATE_FACT,
                    f"fact {step.fact} was already justified",
                    line=line_no,
                    fact=step.fact,
                )
            )
        if validate_inline:
            for v in validate_step(step, established, is_prime, line=line_no):
                (deferred if v.establishment else immediate).append(v)
        else:
            listed = set(step.prereqs)
            for d in demanded_prereqs(step):
                if d in listed and not established(d):
                    deferred.append(
                        Violation(
                            MISSING_PREREQ,
                            f"prerequisite {d} not established",
                            line=line_no,
                            fact=step.fact,
                            value=d,
                            establishment=True,
                        )
                    )
        d = 1
        for pv in step.prereqs:
            d = max(d, 1 + depth.get(pv, 1 if _base_eligible(pv) else 0))
        if step.fact not in depth:
            depth[step.fact] = d
        if d > max_depth:
            max_depth = d
        seen.add(step.fact)
    return seen, immediate, deferred, count, max_depth, collected


def _parallel_validate(
    collected: list[tuple[int, CertificateStep]], threads: int
) -> list[Violation]:
    """Per-step logical validation with establishment already handled."""

    def run_chunk(chunk: list[tuple[int, CertificateStep]]) -> list[Violation]:
        out: list[Violation] = []
        for line_no, step in chunk:
            for v in validate_step(step, lambda _: True, is_prime, line=line_no):
                if not v.establishment:
                    out.append(v)
        return out

    if threads <= 1 or len(collected) < 2 * threads:
        return run_chunk(collected)
    size = (len(collected) + threads - 1) // threads
    chunks = [collected[i : i + size] for i in range(0, len(collected), size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run_chunk, chunks))
    return [v for part in parts for v in part]


def _toposort(
    steps: list[tuple[int, CertificateStep]]
) -> list[tuple[int, CertificateStep]]:
    """Kahn's algorithm keyed on first-provider lines; unsortable steps (true
    cycles) are appended in original order so validation reports them."""
    provider: dict[int, int] = {}
    for idx, (_, step) in enumerate(steps):
        provider.setdefault(step.fact, idx)
    adj: list[list[int]] = [[] for _ in steps]
    indeg = [0] * len(steps)
    for idx, (_, step) in enumerate(steps):
        for pv in set(step.prereqs):
            j = provider.get(pv)
            if j is not None and j != idx:
                adj[j].append(idx)
                indeg[idx] += 1
    ready = [i for i, d in enumerate(indeg) if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for k in adj[i]:
            indeg[k] -= 1
            if indeg[k] == 0:
                heapq.heappush(ready, k)
    placed = set(order)
    order.extend(i for i in range(len(steps)) if i not in placed)
    return [steps[i] for i in order]


def check_store(
    path: str,
    claimed_bound: int,
    *,
    threads: int = 1,
    reorder: bool = False,
) -> CheckReport:
    """Verify a certificate file; accept iff no violations and full coverage.

    Raises CertificateFormatError (parse) and OSError (I/O) rather than
    reporting them as logical violations. `threads` parallelizes the
    arithmetic validation after a sequential dependency pass (the steps are
    then held in memory); `reorder` topologically sorts first.
    """
    if claimed_bound < 0:
        raise ValueError(f"claimed bound must be >= 0, got {claimed_bound}")
    t0 = time.monotonic()
    source: Iterator[tuple[int, CertificateStep]] | list = iter_steps(path)
    if reorder:
        source = _toposort(list(source))
    inline = threads <= 1
    seen, immediate, deferred, count, max_depth, collected = _sequential_scan(
        source, validate_inline=inline, collect=not inline
    )
    if not inline:
        immediate.extend(_parallel_validate(collected, threads))
    violations = immediate + _relabel(deferred, seen)
    violations.sort(key=_sort_key)
    gaps = [n for n in range(1, claimed_bound + 1) if n not in seen]
    for n in gaps:
        violations.append(
            Violation(COVERAGE_GAP, f"no step justifies fact {n}", value=n)
        )
    stats = {
        "steps": count,
        "distinct_facts": len(seen),
        "topological_depth": max_depth,
        "claimed_bound": claimed_bound,
        "coverage_gap_count": len(gaps),
        "threads": threads,
        "reordered": reorder,
        "elapsed_s": round(time.monotonic() - t0, 3),
    }
    return CheckReport(
        accepted=not violations,
        violations=violations,
        coverage_gaps=gaps,
        stats=stats,
    )


def spot_check_numeric(path: str, sample_size: int, seed: int = 0) -> dict:
    """Re-evaluate a seeded sample of non-base steps against f(x) = x^2.

    These are exact integer identities on any structurally accepted store, so
    a mismatch raises RuntimeError (it would mean the validator itself is
    inconsistent, not that the certificate is merely invalid).
    """
    rng = random.Random(seed)
    sample: list[tuple[int, CertificateStep]] = []
    eligible = 0
    for line_no, step in iter_steps(path):
        if isinstance(step.just, Base):
            continue
        eligible += 1
        if len(sample) < sample_size:
            sample.append((line_no, step))
        else:
            j = rng.randrange(eligible)
            if j < sample_size:
                sample[j] = (line_no, step)
    for line_no, step in sample:
        j = step.just
        n = step.fact
        if isinstance(j, CoprimeProduct):
            ok = j.a * j.b == n and (j.a**2) * (j.b**2) == (j.a * j.b) ** 2
        elif isinstance(j, CoprimeQuotient):
            ok = (
                j.divisor * n == j.product
                and (n**2) * (j.divisor**2) == j.product**2
            )
        elif isinstance(j, ParallelogramClose):
            vals = slot_values(j.p, j.q)
            s, d = vals["sum"], vals["diff"]
            ok = (
                vals[j.target] == n
                and s * s + d * d == 2 * j.p * j.p + 2 * j.q * j.q
            )
        else:  # pragma: no cover - sample excludes Base
            ok = False
        if not ok:
            raise RuntimeError(
                f"numeric spot check failed on line {line_no}: step for fact"
                f" {n} does not satisfy the f(x) = x^2 identities"
            )
    return {
        "sampled": len(sample),
        "eligible": eligible,
        "seed": seed,
        "mismatches": 0,
    }
