import numpy as np
import pytest

from cloudcert.classifier import CentroidClassifier, ConstantClassifier
from cloudcert.completion import (
    CentroidUpsample,
    CompletedClassifier,
    CompletionPair,
    IdentityCompletion,
    chamfer,
    classification_loss,
    combined_loss,
    reconstruction_loss,
)
from cloudcert.core import PointCloud
from cloudcert.errors import EmptyInputError


def brute_chamfer(a, b):
    """O(n*m) reference: mean min-distance in each direction, summed."""
    arr_a = a.to_array()
    arr_b = b.to_array()
    d = np.linalg.norm(arr_a[:, None, :] - arr_b[None, :, :], axis=2)
    return float(d.min(axis=1).mean() + d.min(axis=0).mean())


def random_cloud(rng, n, dim=3):
    return PointCloud(
        tuple(round(float(v), 4) for v in row) for row in rng.uniform(-1, 1, (n, dim))
    )


class TestChamfer:
    def test_identical_clouds_are_zero(self):
        cloud = random_cloud(np.random.default_rng(0), 30)
        assert chamfer(cloud, cloud) == 0.0

    def test_known_value(self):
        a = PointCloud([(0.0, 0.0, 0.0)])
        b = PointCloud([(3.0, 4.0, 0.0)])
        assert chamfer(a, b) == pytest.approx(10.0)  # 5 each way

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a, b = random_cloud(rng, 25), random_cloud(rng, 40)
        assert chamfer(a, b) == pytest.approx(chamfer(b, a), rel=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = random_cloud(rng, int(rng.integers(1, 65)))
            b = random_cloud(rng, int(rng.integers(1, 65)))
            assert chamfer(a, b) == pytest.approx(brute_chamfer(a, b), rel=1e-9)

    def test_translation_invariant(self):
        rng = np.random.default_rng(3)
        a, b = random_cloud(rng, 20), random_cloud(rng, 20)
        shift = (0.25, -0.5, 0.125)
        a2 = PointCloud(tuple(x + s for x, s in zip(p, shift)) for p in a)
        b2 = PointCloud(tuple(x + s for x, s in zip(p, shift)) for p in b)
        assert chamfer(a2, b2) == pytest.approx(chamfer(a, b), abs=1e-12)

    def test_empty_rejected(self):
        cloud = random_cloud(np.random.default_rng(4), 5)
        with pytest.raises(EmptyInputError):
            chamfer(PointCloud(), cloud)
        with pytest.raises(EmptyInputError):
            chamfer(cloud, PointCloud())


class TestCompletionFns:
    def test_identity(self):
        cloud = random_cloud(np.random.default_rng(5), 10)
        assert IdentityCompletion().complete(cloud) == cloud

    def test_upsample_adds_points_and_keeps_originals(self):
        cloud = random_cloud(np.random.default_rng(6), 10)
        out = CentroidUpsample(8).complete(cloud)
        assert len(out) >= len(cloud)
        assert set(cloud.encodings()) <= set(out.encodings())

    def test_upsample_deterministic(self):
        cloud = random_cloud(np.random.default_rng(7), 10)
        up = CentroidUpsample(16)
        assert up.complete(cloud) == up.complete(cloud)

    def test_upsample_points_lie_toward_centroid(self):
        rng = np.random.default_rng(8)
        cloud = random_cloud(rng, 12)
        centroid = np.asarray(cloud.mean_point())
        out = CentroidUpsample(12).complete(cloud)
        originals = set(cloud.encodings())
        added = [pt for enc, pt in out.items() if enc not in originals]
        assert added
        radius = max(np.linalg.norm(np.asarray(p) - centroid) for p in cloud)
        for pt in added:
            # every synthesized point sits strictly inside the original radius
            assert np.linalg.norm(np.asarray(pt) - centroid) < radius


class TestLosses:
    def test_reconstruction_with_identity_is_mean_chamfer(self):
        rng = np.random.default_rng(9)
        pairs = [
            CompletionPair(sub=random_cloud(rng, 15), source=random_cloud(rng, 30))
            for _ in range(5)
        ]
        got = reconstruction_loss(pairs, IdentityCompletion())
        want = sum(chamfer(p.sub, p.source) for p in pairs) / len(pairs)
        assert got == pytest.approx(want, rel=1e-12)

    def test_classification_loss_counts_mistakes(self):
        rng = np.random.default_rng(10)
        labeled = [(random_cloud(rng, 8), 1), (random_cloud(rng, 8), 2)]
        clf = ConstantClassifier(1, classes=2)
        assert classification_loss(labeled, IdentityCompletion(), clf) == 0.5

    def test_combined_reduces_at_lambda_zero(self):
        rng = np.random.default_rng(11)
        pairs = [CompletionPair(sub=random_cloud(rng, 10), source=random_cloud(rng, 20))]
        labeled = [(random_cloud(rng, 10), 2)]
        clf = ConstantClassifier(1, classes=2)
        comp = IdentityCompletion()
        assert combined_loss(pairs, labeled, comp, clf, 0.0) == pytest.approx(
            reconstruction_loss(pairs, comp)
        )

    def test_combined_is_affine_in_lambda(self):
        rng = np.random.default_rng(12)
        pairs = [CompletionPair(sub=random_cloud(rng, 10), source=random_cloud(rng, 20))]
        labeled = [(random_cloud(rng, 10), 2), (random_cloud(rng, 10), 1)]
        clf = ConstantClassifier(1, classes=2)
        comp = IdentityCompletion()
        rec = reconstruction_loss(pairs, comp)
        cls = classification_loss(labeled, comp, clf)
        for lam in (5e-4, 0.1, 3.0):
            assert combined_loss(pairs, labeled, comp, clf, lam) == pytest.approx(
                rec + lam * cls, rel=1e-12
            )

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            combined_loss([], [], IdentityCompletion(), ConstantClassifier(1, classes=2), -1.0)

    def test_empty_inputs_rejected(self):
        clf = ConstantClassifier(1, classes=2)
        with pytest.raises(EmptyInputError):
            reconstruction_loss([], IdentityCompletion())
        with pytest.raises(EmptyInputError):
            classification_loss([], IdentityCompletion(), clf)


class TestCompletedClassifier:
    def test_completion_runs_before_classification(self):
        # one far-off point pulls the completed centroid toward prototype 2
        base = CentroidClassifier(np.array([[0.0, 0, 0], [1.0, 1, 1]]))
        cloud = PointCloud([(0.4, 0.4, 0.4)])

        class Shift(IdentityCompletion):
            def complete(self, c):
                return c.with_point((2.0, 2.0, 2.0))

        assert base.classify(cloud) == 1
        assert CompletedClassifier(base, Shift()).classify(cloud) == 2

    def test_identity_completion_matches_base(self):
        rng = np.random.default_rng(13)
        base = CentroidClassifier(rng.normal(size=(3, 3)))
        wrapped = CompletedClassifier(base, IdentityCompletion())
        for _ in range(20):
            cloud = random_cloud(rng, 12)
            assert wrapped.classify(cloud) == base.classify(cloud)
