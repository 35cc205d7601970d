import numpy as np
import pytest

import cloudcert.certlab as certlab
from cloudcert.certlab import (
    construct_tightness_witness,
    oracle_check,
    random_certified_instance,
    random_small_instance,
    run_oracle_suite,
    run_tightness_suite,
    verify_witness,
)
from cloudcert.classifier import LookupClassifier, cloud_key
from cloudcert.core import AttackType, PointCloud, perturbation_size
from cloudcert.ensemble import LabelFrequencies, certify, label_frequencies, vote
from cloudcert.errors import ConstructionError, ScaleError
from cloudcert.partition import HashRule, partition

RULE = HashRule.MD5


def crafted_instance(seed=0, m=4, want_labels=(1, 1, 1, 2)):
    """Cloud whose m buckets are all non-empty, with a lookup classifier
    assigning the requested labels and defaulting to the winner."""
    rng = np.random.default_rng(seed)
    while True:
        pts = [tuple(round(float(v), 2) for v in row) for row in rng.uniform(-1, 1, (40, 3))]
        cloud = PointCloud(pts)
        part = partition(cloud, m, RULE)
        if len(part.nonempty_indices()) == m and min(len(s) for s in part.subclouds) >= 2:
            break
    table = {cloud_key(part.subclouds[i]): want_labels[i] for i in range(m)}
    clf = LookupClassifier(table, default=1, classes=max(want_labels))
    return cloud, clf


class TestOracle:
    def test_zero_certificate_is_vacuous(self):
        cloud, clf = crafted_instance(1, m=2, want_labels=(1, 2))
        inst = certlab.SmallInstance(
            universe=tuple(cloud), cloud=cloud, m=2, c=2, rule=RULE, clf=clf
        )
        report = oracle_check(inst, AttackType.DELETION)
        assert report.budget == 0
        assert report.attacks_enumerated == 1
        assert report.violations == 0

    def test_three_one_split_survives_single_deletions(self):
        cloud, clf = crafted_instance(2)
        inst = certlab.SmallInstance(
            universe=tuple(cloud), cloud=cloud, m=4, c=2, rule=RULE, clf=clf
        )
        cert = certify(label_frequencies(partition(cloud, 4, RULE), clf))
        assert cert.frequencies.counts == (3, 1)
        assert cert.certified_size[AttackType.DELETION] == 1
        report = oracle_check(inst, AttackType.DELETION)
        assert report.budget == 1
        assert report.violations == 0
        assert report.attacks_enumerated == 1 + len(cloud)

    @pytest.mark.parametrize("kind", list(AttackType))
    def test_random_instances_have_no_violations(self, kind):
        for seed in range(30):
            inst = random_small_instance(seed)
            report = oracle_check(inst, kind)
            assert report.violations == 0

    def test_scale_guard(self, monkeypatch):
        monkeypatch.setattr(certlab, "_MAX_ENUMERATION", 0)
        inst = random_small_instance(0)
        with pytest.raises(ScaleError):
            oracle_check(inst, AttackType.PERTURBATION, tmax=3)

    def test_suite_summary(self):
        summary = run_oracle_suite(10, seed0=100)
        assert summary["violations"] == 0
        assert summary["instances"] == 10


class TestTightness:
    def test_three_one_split_flips_at_two(self):
        cloud, clf = crafted_instance(3)
        freq = label_frequencies(partition(cloud, 4, RULE), clf)
        assert freq.counts == (3, 1)
        witness = construct_tightness_witness(
            cloud, 4, RULE, freq, AttackType.ADDITION, seed=0
        )
        assert witness.budget == 2  # t(P)=1, flips one past it
        assert witness.flipped_label == 2
        assert perturbation_size(cloud, witness.pprime) == 2
        new_freq = label_frequencies(partition(witness.pprime, 4, RULE), witness.fprime)
        assert new_freq.counts == (1, 3)
        assert verify_witness(witness, cloud, 4, RULE)

    def test_single_bucket_single_point(self):
        cloud = PointCloud([(0.5, 0.5, 0.5)])
        clf = LookupClassifier({cloud_key(cloud): 1}, default=1, classes=2)
        freq = label_frequencies(partition(cloud, 1, RULE), clf)
        assert freq.counts == (1, 0)
        for kind in (AttackType.ADDITION, AttackType.MODIFICATION):
            witness = construct_tightness_witness(cloud, 1, RULE, freq, kind, seed=1)
            assert witness.budget == 1
            assert verify_witness(witness, cloud, 1, RULE)

    @pytest.mark.parametrize("kind", list(AttackType))
    def test_random_instances_all_verify(self, kind):
        for seed in range(25):
            cloud, m, freq = random_certified_instance(seed)
            witness = construct_tightness_witness(cloud, m, RULE, freq, kind, seed=seed)
            assert verify_witness(witness, cloud, m, RULE)

    def test_rival_margin_arithmetic(self):
        # after the flip, the rival label beats the old winner by the
        # tie-break-adjusted margin used in the certificate derivation
        for seed in range(10):
            cloud, m, freq = random_certified_instance(seed + 500)
            y = vote(freq)
            witness = construct_tightness_witness(
                cloud, m, RULE, freq, AttackType.PERTURBATION, seed=seed
            )
            new_freq = label_frequencies(
                partition(witness.pprime, m, RULE), witness.fprime
            )
            lprime = witness.flipped_label
            assert (
                new_freq.counts[lprime - 1] + (1 if y > lprime else 0)
                > new_freq.counts[y - 1]
            )

    def test_witness_with_unchanged_cloud_fails_verification(self):
        cloud, m, freq = random_certified_instance(42)
        witness = construct_tightness_witness(cloud, m, RULE, freq, AttackType.ADDITION)
        forged = certlab.TightnessWitness(
            fprime=witness.fprime,
            pprime=cloud,
            original_label=witness.original_label,
            flipped_label=witness.flipped_label,
            attack_type=witness.attack_type,
            budget=witness.budget,
        )
        assert not verify_witness(forged, cloud, m, RULE)

    def test_corrupted_classifier_detected(self):
        cloud, m, freq = random_certified_instance(43)
        witness = construct_tightness_witness(cloud, m, RULE, freq, AttackType.ADDITION)
        part = partition(cloud, m, RULE)
        # relabel one untouched original bucket to a different label
        table = dict(witness.fprime.table)
        for i in part.nonempty_indices():
            key = cloud_key(part.subclouds[i])
            old = table[key]
            table[key] = 1 + (old % witness.fprime.classes)
            break
        corrupted = certlab.TightnessWitness(
            fprime=LookupClassifier(table, witness.fprime.default, witness.fprime.classes),
            pprime=witness.pprime,
            original_label=witness.original_label,
            flipped_label=witness.flipped_label,
            attack_type=witness.attack_type,
            budget=witness.budget,
        )
        assert not verify_witness(corrupted, cloud, m, RULE)

    def test_frequency_mismatch_rejected(self):
        cloud, m, freq = random_certified_instance(44)
        wrong = LabelFrequencies(
            counts=tuple(c + 1 for c in freq.counts), m=freq.m
        )
        with pytest.raises(ConstructionError):
            construct_tightness_witness(cloud, m, RULE, wrong, AttackType.ADDITION)

    def test_suite_summary(self):
        summary = run_tightness_suite(10, seed0=300)
        assert summary["witnesses_verified"] == summary["witnesses_constructed"] == 40
