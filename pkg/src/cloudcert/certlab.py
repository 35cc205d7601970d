"""Executable verification of the certificate's guarantees.

Two tools live here: a brute-force oracle that exhaustively enumerates every
attack within the certified budget on closed-world small instances (the vote
must never flip), and a constructive tightness check that, for any certified
instance, builds an adversarial cloud of size t+1 together with a base
classifier under which the vote does flip.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .classifier import LookupClassifier, cloud_key
from .core import AttackType, Point, PointCloud, canonical_encode, perturbation_size
from .errors import ConstructionError, NoEvidenceError, ScaleError
from .ensemble import LabelFrequencies, certify, label_frequencies, vote
from .partition import HashRule, assign, partition

_MAX_ENUMERATION = 10**7
_MAX_SAMPLE_ATTEMPTS = 10**6


@dataclass(frozen=True)
class SmallInstance:
    """Closed world: every cloud reachable by in-universe attacks has a
    defined label, so exhaustive verification is total."""

    universe: tuple[Point, ...]
    cloud: PointCloud
    m: int
    c: int
    rule: HashRule
    clf: LookupClassifier


def random_small_instance(seed: int, rule: HashRule = HashRule.MD5) -> SmallInstance:
    """Seeded instance: <= 12 universe points, m <= 6, c <= 3, and a lookup
    classifier defined on every subcloud any subset of the universe can form."""
    rng = np.random.default_rng(seed)
    n_universe = int(rng.integers(6, 11))
    m = int(rng.integers(2, 7))
    c = int(rng.integers(2, 4))

    seen: set[bytes] = set()
    universe: list[Point] = []
    while len(universe) < n_universe:
        pt = tuple(round(float(v), 2) for v in rng.uniform(-1, 1, size=3))
        enc = canonical_encode(pt)
        if enc not in seen:
            seen.add(enc)
            universe.append(pt)

    n_cloud = int(rng.integers(2, n_universe + 1))
    chosen = rng.choice(n_universe, size=n_cloud, replace=False)
    cloud = PointCloud(universe[i] for i in chosen)

    # Label every non-empty subset of each bucket's universe members.
    table: dict[bytes, int] = {}
    members: dict[int, list[Point]] = {}
    for pt in universe:
        members.setdefault(assign(pt, m, rule), []).append(pt)
    for pts in members.values():
        for size in range(1, len(pts) + 1):
            for combo in itertools.combinations(pts, size):
                key = cloud_key(PointCloud(combo))
                table[key] = int(rng.integers(1, c + 1))
    clf = LookupClassifier(table, default=1, classes=c)
    return SmallInstance(
        universe=tuple(universe), cloud=cloud, m=m, c=c, rule=rule, clf=clf
    )


@dataclass(frozen=True)
class OracleReport:
    label: int
    budget: int
    attacks_enumerated: int
    violations: int


def _count_states(n_del: int, n_add: int, budget: int, kind: AttackType) -> int:
    del_counts = [math.comb(n_del, k) for k in range(budget + 1)]
    add_counts = [math.comb(n_add, j) for j in range(budget + 1)]
    if kind is AttackType.DELETION:
        return sum(del_counts)
    if kind is AttackType.ADDITION:
        return sum(add_counts)
    if kind is AttackType.MODIFICATION:
        return sum(d * a for d, a in zip(del_counts, add_counts))
    return sum(del_counts) * sum(add_counts)


def oracle_check(
    inst: SmallInstance, kind: AttackType, tmax: int = 3
) -> OracleReport:
    """Enumerate every adversarial cloud within min(tmax, t(P)) and verify
    the vote never changes."""
    cert = certify(
        label_frequencies(partition(inst.cloud, inst.m, inst.rule), inst.clf)
    )
    budget = min(tmax, cert.certified_size[kind])
    y = cert.label

    in_cloud = inst.cloud.sorted_encodings()
    outside = sorted(
        canonical_encode(pt)
        for pt in inst.universe
        if pt not in inst.cloud
    )
    universe_by_enc = {canonical_encode(pt): pt for pt in inst.universe}

    total = _count_states(len(in_cloud), len(outside), budget, kind)
    if total > _MAX_ENUMERATION:
        raise ScaleError(f"{total} states exceed the {_MAX_ENUMERATION} cap")

    if kind is AttackType.DELETION:
        pairs = (
            (dels, ())
            for k in range(budget + 1)
            for dels in itertools.combinations(in_cloud, k)
        )
    elif kind is AttackType.ADDITION:
        pairs = (
            ((), adds)
            for j in range(budget + 1)
            for adds in itertools.combinations(outside, j)
        )
    elif kind is AttackType.MODIFICATION:
        pairs = (
            (dels, adds)
            for k in range(budget + 1)
            for dels in itertools.combinations(in_cloud, k)
            for adds in itertools.combinations(outside, k)
        )
    else:  # perturbation: any mix of deletions and additions
        pairs = (
            (dels, adds)
            for k in range(budget + 1)
            for dels in itertools.combinations(in_cloud, k)
            for j in range(budget + 1)
            for adds in itertools.combinations(outside, j)
        )

    enumerated = 0
    violations = 0
    for dels, adds in pairs:
        enumerated += 1
        perturbed = inst.cloud.without_encodings(dels)
        for enc in adds:
            perturbed = perturbed.with_point(universe_by_enc[enc])
        if len(perturbed) == 0:
            violations += 1  # the vote vanished inside the certified budget
            continue
        freq = label_frequencies(partition(perturbed, inst.m, inst.rule), inst.clf)
        if freq.nonempty_total == 0 or vote(freq) != y:
            violations += 1
    return OracleReport(
        label=y, budget=budget, attacks_enumerated=enumerated, violations=violations
    )


@dataclass(frozen=True)
class TightnessWitness:
    fprime: LookupClassifier
    pprime: PointCloud
    original_label: int
    flipped_label: int
    attack_type: AttackType
    budget: int  # perturbation size of pprime, equals t(P) + 1


def _sample_point_for_bucket(
    target: int,
    m: int,
    rule: HashRule,
    dim: int,
    forbidden: set[bytes],
    rng: np.random.Generator,
    attempts: list[int],
) -> Point:
    while attempts[0] < _MAX_SAMPLE_ATTEMPTS:
        attempts[0] += 1
        pt = tuple(round(float(v), 6) for v in rng.uniform(-1, 1, size=dim))
        enc = canonical_encode(pt)
        if enc in forbidden:
            continue
        if assign(pt, m, rule) == target:
            forbidden.add(enc)
            return pt
    raise ConstructionError(f"no fresh point found for bucket {target}")


def construct_tightness_witness(
    cloud: PointCloud,
    m: int,
    rule: HashRule,
    freq: LabelFrequencies,
    kind: AttackType,
    seed: int = 0,
) -> TightnessWitness:
    """Build (f', P') with perturbation size t(P)+1 whose vote flips.

    Non-empty buckets are ordered largest-first; the first M_y get the
    winning label, remaining buckets absorb the other labels. Adversarial
    moves touch winning buckets and f' relabels every touched bucket's new
    content with the strongest rival label.
    """
    y = vote(freq)
    cert = certify(freq)
    t = cert.certified_size[kind]
    part = partition(cloud, m, rule)
    nonempty = sorted(
        part.nonempty_indices(), key=lambda i: (-len(part.subclouds[i]), i)
    )
    if len(nonempty) != freq.nonempty_total:
        raise ConstructionError("frequencies do not match the partition")

    # Deal bucket labels: winner first, then the others in label order.
    assignment: dict[int, int] = {}
    cursor = 0
    for label in [y] + [l for l in range(1, freq.classes + 1) if l != y]:
        for _ in range(freq.counts[label - 1]):
            assignment[nonempty[cursor]] = label
            cursor += 1
    rival_scores = {
        l: freq.counts[l - 1] + (1 if y > l else 0)
        for l in range(1, freq.classes + 1)
        if l != y
    }
    best_rival_score = max(rival_scores.values())
    rival = min(l for l, s in rival_scores.items() if s == best_rival_score)

    y_buckets = [i for i in nonempty if assignment[i] == y]
    if len(y_buckets) < t + 1:
        raise ConstructionError("not enough winning buckets to touch")

    dim = cloud.dim or 3
    rng = np.random.default_rng(seed)
    forbidden = set(cloud.encodings())
    attempts = [0]
    deletions: list[bytes] = []
    additions: dict[int, list[Point]] = {}

    def add_fresh(bucket: int) -> None:
        pt = _sample_point_for_bucket(bucket, m, rule, dim, forbidden, rng, attempts)
        additions.setdefault(bucket, []).append(pt)

    def delete_one(bucket: int) -> None:
        deletions.append(part.subclouds[bucket].sorted_encodings()[0])

    touched: set[int] = set()
    if kind is AttackType.ADDITION:
        for b in y_buckets[: t + 1]:
            add_fresh(b)
            touched.add(b)
    elif kind is AttackType.DELETION:
        for b in y_buckets[: t + 1]:
            delete_one(b)
            touched.add(b)
    else:
        # t+1 deletions and t+1 additions, spread over distinct winning
        # buckets when there are enough; otherwise buckets are reused up to
        # their deletion capacity.
        moves = t + 1
        del_counts: dict[int, int] = {}
        remaining = moves
        guard = 0
        while remaining > 0:
            progressed = False
            for b in y_buckets:
                if remaining == 0:
                    break
                if del_counts.get(b, 0) < len(part.subclouds[b]):
                    del_counts[b] = del_counts.get(b, 0) + 1
                    remaining -= 1
                    progressed = True
            guard += 1
            if not progressed or guard > moves + 1:
                raise ConstructionError("not enough points to delete from winning buckets")
        add_order = [b for b in y_buckets if b not in del_counts] or y_buckets
        for i in range(moves):
            add_fresh(add_order[i % len(add_order)])
        for b, cnt in del_counts.items():
            for enc in part.subclouds[b].sorted_encodings()[:cnt]:
                deletions.append(enc)
        touched.update(del_counts)
        touched.update(additions)

    pprime = cloud.without_encodings(deletions)
    for pts in additions.values():
        for pt in pts:
            pprime = pprime.with_point(pt)
    if perturbation_size(cloud, pprime) != t + 1:
        raise ConstructionError("constructed cloud has the wrong perturbation size")

    deleted = set(deletions)
    table = {
        cloud_key(part.subclouds[i]): assignment[i] for i in nonempty
    }
    for b in touched:
        survivors = [
            cloud.point_for(enc)
            for enc in part.subclouds[b].sorted_encodings()
            if enc not in deleted
        ]
        new_content = PointCloud(survivors + additions.get(b, []))
        if len(new_content) > 0:
            table[cloud_key(new_content)] = rival

    fprime = LookupClassifier(table, default=rival, classes=freq.classes)
    try:
        new_freq = label_frequencies(partition(pprime, m, rule), fprime)
        flipped = vote(new_freq)
    except NoEvidenceError as exc:
        raise ConstructionError("adversarial cloud left no evidence") from exc
    if flipped == y:
        raise ConstructionError("constructed classifier failed to flip the vote")
    return TightnessWitness(
        fprime=fprime,
        pprime=pprime,
        original_label=y,
        flipped_label=flipped,
        attack_type=kind,
        budget=t + 1,
    )


def verify_witness(
    witness: TightnessWitness, cloud: PointCloud, m: int, rule: HashRule
) -> bool:
    """Recompute both predictions under f' and the metric; true iff the
    witness flips at exactly one past the certified size."""
    try:
        freq = label_frequencies(partition(cloud, m, rule), witness.fprime)
        cert = certify(freq)
    except NoEvidenceError:
        return False
    if cert.label != witness.original_label:
        return False
    if perturbation_size(cloud, witness.pprime) != cert.certified_size[witness.attack_type] + 1:
        return False
    if witness.budget != cert.certified_size[witness.attack_type] + 1:
        return False
    try:
        flipped = vote(
            label_frequencies(partition(witness.pprime, m, rule), witness.fprime)
        )
    except NoEvidenceError:
        return False
    return flipped == witness.flipped_label and flipped != witness.original_label


def random_certified_instance(
    seed: int, rule: HashRule = HashRule.MD5
) -> tuple[PointCloud, int, LabelFrequencies]:
    """Seeded (cloud, m, frequencies) with every bucket label drawn at
    random; used to exercise the tightness construction."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(48, 90))
    m = int(rng.integers(3, 7))
    c = int(rng.integers(2, 4))
    pts = [tuple(round(float(v), 4) for v in rng.uniform(-1, 1, size=3)) for _ in range(n)]
    cloud = PointCloud(pts)
    part = partition(cloud, m, rule)
    counts = [0] * c
    for _ in part.nonempty_indices():
        counts[int(rng.integers(1, c + 1)) - 1] += 1
    return cloud, m, LabelFrequencies(counts=tuple(counts), m=m)


def run_oracle_suite(
    instances: int, tmax: int = 3, seed0: int = 0, rule: HashRule = HashRule.MD5
) -> dict:
    """Summary over seeded small instances and all four attack types."""
    enumerated = 0
    violations = 0
    for i in range(instances):
        inst = random_small_instance(seed0 + i, rule=rule)
        for kind in AttackType:
            report = oracle_check(inst, kind, tmax=tmax)
            enumerated += report.attacks_enumerated
            violations += report.violations
    return {
        "instances": instances,
        "attacks_enumerated": enumerated,
        "violations": violations,
    }


def run_tightness_suite(
    instances: int, seed0: int = 0, rule: HashRule = HashRule.MD5
) -> dict:
    """Summary of constructed-and-verified witnesses per attack type."""
    constructed = 0
    verified = 0
    for i in range(instances):
        cloud, m, freq = random_certified_instance(seed0 + i, rule=rule)
        for kind in AttackType:
            witness = construct_tightness_witness(
                cloud, m, rule, freq, kind, seed=seed0 + i
            )
            constructed += 1
            if verify_witness(witness, cloud, m, rule):
                verified += 1
    return {
        "instances": instances,
        "witnesses_constructed": constructed,
        "witnesses_verified": verified,
    }
