"""Empirical attacks on the ensemble: greedy critical-point deletion,
seeded candidate-search addition, and their delete-then-add combination.

These are search-based attackers that work with any (possibly
non-differentiable) base classifier. They give Empirical Accuracy@t, an
upper bound complementing the certified lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import BaseClassifier
from .core import AttackType, PointCloud, perturbation_size
from .errors import BudgetError, ConfigError
from .partition import HashRule, assign, partition
from .ensemble import LabelFrequencies, challenger_score, label_frequencies, vote


@dataclass(frozen=True)
class AttackBudget:
    type: AttackType
    t: int
    candidate_pool_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise ConfigError(f"attack budget must be >= 0, got {self.t}")
        if self.candidate_pool_size < 1:
            raise ConfigError("candidate pool must hold at least 1 point")


@dataclass(frozen=True)
class AttackResult:
    adversarial: PointCloud
    achieved_size: int
    original_label: int | None
    attacked_label: int | None
    success: bool


def _ensemble_label(cloud: PointCloud, m: int, rule: HashRule, clf: BaseClassifier) -> int | None:
    """Vote winner, or None when no bucket has evidence (empty cloud)."""
    if len(cloud) == 0:
        return None
    freq = label_frequencies(partition(cloud, m, rule), clf)
    if freq.nonempty_total == 0:
        return None
    return vote(freq)


def _result(
    original: PointCloud,
    adversarial: PointCloud,
    m: int,
    rule: HashRule,
    clf: BaseClassifier,
    budget_t: int,
    true_label: int,
    original_label: int | None = None,
) -> AttackResult:
    achieved = perturbation_size(original, adversarial)
    assert achieved <= budget_t
    if original_label is None:
        original_label = _ensemble_label(original, m, rule, clf)
    attacked = _ensemble_label(adversarial, m, rule, clf)
    return AttackResult(
        adversarial=adversarial,
        achieved_size=achieved,
        original_label=original_label,
        attacked_label=attacked,
        # A wiped-out vote (None) counts against the defender.
        success=(attacked is None or attacked != true_label),
    )


def deletion_scores(cloud: PointCloud, m: int, rule: HashRule, clf: BaseClassifier) -> dict[bytes, int]:
    """Criticality per point: 1 if removing it alone flips (or voids) its
    bucket's predicted label, else 0."""
    scores: dict[bytes, int] = {}
    part = partition(cloud, m, rule)
    for sub in part.subclouds:
        if len(sub) == 0:
            continue
        base_label = clf.classify(sub)
        for enc in sub.sorted_encodings():
            reduced = sub.without_encodings([enc])
            if len(reduced) == 0:
                changed = True  # bucket's vote disappears entirely
            else:
                changed = clf.classify(reduced) != base_label
            scores[enc] = 1 if changed else 0
    return scores


def attack_delete(
    cloud: PointCloud,
    m: int,
    rule: HashRule,
    clf: BaseClassifier,
    budget: AttackBudget,
    true_label: int,
    scores: dict[bytes, int] | None = None,
    original_label: int | None = None,
) -> AttackResult:
    """Delete the t points with the highest criticality counts. Precomputed
    scores (budget-independent) may be passed in when sweeping budgets."""
    if budget.type is not AttackType.DELETION:
        raise ConfigError(f"deletion attack got budget type {budget.type}")
    if budget.t > len(cloud):
        raise BudgetError(f"cannot delete {budget.t} of {len(cloud)} points")
    if budget.t == 0:
        return _result(cloud, cloud, m, rule, clf, 0, true_label, original_label)
    if scores is None:
        scores = deletion_scores(cloud, m, rule, clf)
    ranked = sorted(scores, key=lambda enc: (-scores[enc], enc))
    adversarial = cloud.without_encodings(ranked[: budget.t])
    return _result(cloud, adversarial, m, rule, clf, budget.t, true_label, original_label)


def _bounding_box(cloud: PointCloud) -> tuple[np.ndarray, np.ndarray]:
    if len(cloud) == 0:
        dim = cloud.dim or 3
        return -np.ones(dim), np.ones(dim)
    arr = cloud.to_array()
    return arr.min(axis=0), arr.max(axis=0)


def attack_add(
    cloud: PointCloud,
    m: int,
    rule: HashRule,
    clf: BaseClassifier,
    budget: AttackBudget,
    true_label: int,
    original_label: int | None = None,
) -> AttackResult:
    """Greedily insert t points drawn from the data bounding box, each chosen
    from a seeded candidate pool to maximize damage to the vote margin."""
    if budget.type is not AttackType.ADDITION:
        raise ConfigError(f"addition attack got budget type {budget.type}")
    rng = np.random.default_rng(budget.seed)
    lo, hi = _bounding_box(cloud)

    buckets = list(partition(cloud, m, rule).subclouds)
    labels: list[int | None] = [
        clf.classify(sub) if len(sub) > 0 else None for sub in buckets
    ]
    counts = [0] * clf.classes
    for lab in labels:
        if lab is not None:
            counts[lab - 1] += 1

    # Damage is measured against the clean vote winner so progress keeps
    # accumulating after the vote first flips.
    clean_freq = LabelFrequencies(counts=tuple(counts), m=m)
    y0 = vote(clean_freq) if clean_freq.nonempty_total > 0 else None

    def damage(counts_after: list[int]) -> int:
        freq = LabelFrequencies(counts=tuple(counts_after), m=m)
        if freq.nonempty_total == 0 or y0 is None:
            return -(10**9)
        return challenger_score(freq, y0) - counts_after[y0 - 1]

    adversarial = cloud
    for _ in range(budget.t):
        best = None  # (score, pool index, point, bucket, new label)
        pool = rng.uniform(lo, hi, size=(budget.candidate_pool_size, len(lo)))
        for idx in range(budget.candidate_pool_size):
            cand = tuple(round(float(v), 6) for v in pool[idx])
            if cand in adversarial:
                continue
            r = assign(cand, m, rule)
            new_label = clf.classify(buckets[r].with_point(cand))
            trial = counts.copy()
            if labels[r] is not None:
                trial[labels[r] - 1] -= 1
            trial[new_label - 1] += 1
            score = damage(trial)
            if best is None or score > best[0]:  # strict: ties keep first-drawn
                best = (score, idx, cand, r, new_label)
        if best is None:
            continue
        _, _, cand, r, new_label = best
        buckets[r] = buckets[r].with_point(cand)
        if labels[r] is not None:
            counts[labels[r] - 1] -= 1
        labels[r] = new_label
        counts[new_label - 1] += 1
        adversarial = adversarial.with_point(cand)

    return _result(cloud, adversarial, m, rule, clf, budget.t, true_label, original_label)


def attack_modify(
    cloud: PointCloud,
    m: int,
    rule: HashRule,
    clf: BaseClassifier,
    budget: AttackBudget,
    true_label: int,
    scores: dict[bytes, int] | None = None,
    original_label: int | None = None,
) -> AttackResult:
    """Delete t critical points, then add t adversarial points. The set metric
    makes the combined move cost max(t, t) = t."""
    if budget.type not in (AttackType.MODIFICATION, AttackType.PERTURBATION):
        raise ConfigError(f"modification attack got budget type {budget.type}")
    if budget.t > len(cloud):
        raise BudgetError(f"cannot modify {budget.t} of {len(cloud)} points")
    del_budget = AttackBudget(
        AttackType.DELETION, budget.t, budget.candidate_pool_size, budget.seed
    )
    deleted = attack_delete(
        cloud, m, rule, clf, del_budget, true_label, scores=scores, original_label=original_label
    )
    add_budget = AttackBudget(
        AttackType.ADDITION, budget.t, budget.candidate_pool_size, budget.seed
    )
    added = attack_add(
        deleted.adversarial, m, rule, clf, add_budget, true_label, original_label=original_label
    )
    return _result(
        cloud, added.adversarial, m, rule, clf, budget.t, true_label, original_label
    )


def run_attack(
    cloud: PointCloud,
    m: int,
    rule: HashRule,
    clf: BaseClassifier,
    budget: AttackBudget,
    true_label: int,
    scores: dict[bytes, int] | None = None,
    original_label: int | None = None,
) -> AttackResult:
    if budget.type is AttackType.ADDITION:
        return attack_add(cloud, m, rule, clf, budget, true_label, original_label)
    if budget.type is AttackType.DELETION:
        return attack_delete(cloud, m, rule, clf, budget, true_label, scores, original_label)
    return attack_modify(cloud, m, rule, clf, budget, true_label, scores, original_label)


def empirical_accuracy(
    dataset: list[tuple[PointCloud, int]],
    m: int,
    rule: HashRule,
    clf: BaseClassifier,
    attack_type: AttackType,
    t_values: list[int],
    candidate_pool_size: int = 8,
    seed: int = 0,
) -> dict[int, float]:
    """Fraction of clouds still correctly classified after attacks of each
    budget t. Budgets above |P| are clamped for deletion-based attacks."""
    correct = {t: 0 for t in t_values}
    for idx, (cloud, label) in enumerate(dataset):
        original_label = _ensemble_label(cloud, m, rule, clf)
        scores = None
        if attack_type is not AttackType.ADDITION:
            scores = deletion_scores(cloud, m, rule, clf)
        for t in t_values:
            t_eff = t
            if attack_type is not AttackType.ADDITION:
                t_eff = min(t, len(cloud))
            budget = AttackBudget(
                attack_type,
                t_eff,
                candidate_pool_size=candidate_pool_size,
                seed=seed * 1_000_003 + idx * 7919 + t,
            )
            result = run_attack(
                cloud, m, rule, clf, budget, label, scores=scores, original_label=original_label
            )
            if not result.success:
                correct[t] += 1
    return {t: correct[t] / len(dataset) for t in t_values}
