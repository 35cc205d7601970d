"""Dataset ingestion, synthetic benchmark generation, the evaluation
harness (certified / empirical accuracy curves), and results persistence.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackBudget, deletion_scores, run_attack
from .classifier import BaseClassifier, FullClouds, SubClouds, fit_centroid
from .completion import CentroidUpsample, CompletedClassifier, CompletionFn
from .core import AttackType, PointCloud, dedupe
from .errors import ConfigError, FormatError, IoError
from .ensemble import predict_and_certify
from .partition import HashRule


def load_cloud(path: str | Path, fmt: str | None = None) -> tuple[PointCloud, int]:
    """Read a cloud from an xyz or csv file; returns (cloud, duplicates_dropped)."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "xyz"
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    points = []
    lines = text.splitlines()
    start = 1 if fmt == "csv" else 0  # csv carries a header row
    for lineno, line in enumerate(lines[start:], start=start + 1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",") if fmt == "csv" else line.split()
        try:
            points.append([float(v) for v in fields])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return dedupe(points)


def save_cloud(cloud: PointCloud, path: str | Path, fmt: str = "xyz") -> None:
    path = Path(path)
    lines = []
    if fmt == "csv":
        dim = cloud.dim or 3
        lines.append(",".join(f"c{i}" for i in range(dim)))
        sep = ","
    else:
        sep = " "
    for pt in cloud:
        lines.append(sep.join(f"{v:.6f}" for v in pt))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    classes: int
    entries: tuple[ManifestEntry, ...]
    root: Path = Path(".")

    def load(self) -> list[tuple[PointCloud, int]]:
        out = []
        for entry in self.entries:
            cloud, _ = load_cloud(self.root / entry.path)
            out.append((cloud, entry.label))
        return out


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    doc = {
        "name": manifest.name,
        "classes": manifest.classes,
        "entries": [{"path": e.path, "label": e.label} for e in manifest.entries],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse manifest {path}: {exc}") from exc
    entries = tuple(
        ManifestEntry(path=e["path"], label=int(e["label"])) for e in doc["entries"]
    )
    classes = int(doc["classes"])
    if any(not 1 <= e.label <= classes for e in entries):
        raise FormatError(f"manifest {path} has labels outside [1, {classes}]")
    return DatasetManifest(
        name=doc.get("name", path.stem),
        classes=classes,
        entries=entries,
        root=path.parent,
    )


def _class_anchor(label: int, classes: int) -> np.ndarray:
    if classes > 8:
        raise ConfigError("synthetic anchors support at most 8 classes")
    bits = [(label - 1) >> b & 1 for b in range(3)]
    return np.array([0.6 if b else -0.6 for b in bits])


def gen_synthetic(
    out_dir: str | Path,
    classes: int,
    clouds_per_class: int,
    n_points: int,
    spread: float,
    seed: int,
    name: str = "synthetic",
) -> DatasetManifest:
    """Gaussian clusters around well-separated cube-corner anchors, clamped
    to [-1, 1]. Byte-deterministic given the seed."""
    if classes < 2 or clouds_per_class < 1 or n_points < 1 or spread < 0:
        raise ConfigError("synthetic generation parameters must be positive")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for label in range(1, classes + 1):
        anchor = _class_anchor(label, classes)
        for idx in range(clouds_per_class):
            pts = np.clip(
                anchor + rng.normal(0.0, spread, size=(n_points, 3)), -1.0, 1.0
            )
            cloud, _ = dedupe(pts.tolist())
            rel = f"{name}_c{label}_{idx:04d}.xyz"
            save_cloud(cloud, out_dir / rel)
            entries.append(ManifestEntry(path=rel, label=label))
    manifest = DatasetManifest(
        name=name, classes=classes, entries=tuple(entries), root=out_dir
    )
    write_manifest(manifest, out_dir / f"{name}_manifest.json")
    return manifest


@dataclass(frozen=True)
class EvalConfig:
    m: int = 400
    rule: HashRule = HashRule.MD5
    attack_type: AttackType = AttackType.ADDITION
    t_grid: tuple[int, ...] = tuple(range(0, 11))
    scenario: int = 1
    seed: int = 0
    eta: float = 2.0 * math.sqrt(3.0)
    lam: float = 5e-4
    run_attacks: bool = False
    candidate_pool_size: int = 8
    jobs: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if list(self.t_grid) != sorted(self.t_grid):
            raise ConfigError("t grid must be sorted ascending")
        if self.scenario not in (1, 2, 3):
            raise ConfigError(f"scenario must be 1, 2 or 3, got {self.scenario}")

    def echo(self) -> dict:
        return {
            "m": self.m,
            "hash": self.rule.value,
            "attack": self.attack_type.value,
            "t_grid": list(self.t_grid),
            "scenario": self.scenario,
            "seed": self.seed,
            "eta": self.eta,
            "lambda": self.lam,
            "run_attacks": self.run_attacks,
            "candidate_pool_size": self.candidate_pool_size,
        }


@dataclass(frozen=True)
class CurveRow:
    t: int
    certified_accuracy: float
    empirical_accuracy: float | None = None


@dataclass(frozen=True)
class AccuracyCurve:
    rows: tuple[CurveRow, ...]
    metadata: dict = field(default_factory=dict, compare=True, hash=False)


def _eval_one(
    args: tuple[PointCloud, int, EvalConfig, BaseClassifier, int]
) -> tuple[bool, int, list[bool] | None]:
    cloud, label, config, clf, index = args
    cert = predict_and_certify(cloud, config.m, config.rule, clf)
    clean_correct = cert.label == label
    size = cert.certified_size[config.attack_type]
    empirical: list[bool] | None = None
    if config.run_attacks:
        scores = None
        if config.attack_type is not AttackType.ADDITION:
            scores = deletion_scores(cloud, config.m, config.rule, clf)
        empirical = []
        for t in config.t_grid:
            t_eff = t
            if config.attack_type is not AttackType.ADDITION:
                t_eff = min(t, len(cloud))
            budget = AttackBudget(
                config.attack_type,
                t_eff,
                candidate_pool_size=config.candidate_pool_size,
                seed=config.seed * 1_000_003 + index * 7919 + t,
            )
            result = run_attack(
                cloud,
                config.m,
                config.rule,
                clf,
                budget,
                label,
                scores=scores,
                original_label=cert.label,
            )
            empirical.append(not result.success)
    return clean_correct, size, empirical


def evaluate(
    config: EvalConfig,
    clf: BaseClassifier,
    test: list[tuple[PointCloud, int]],
) -> AccuracyCurve:
    """Certified Accuracy@t (and optionally Empirical Accuracy@t) over the
    test clouds. Results are assembled in dataset order, so serial and
    parallel runs are byte-identical."""
    if not test:
        raise ConfigError("empty test set")
    jobs_args = [
        (cloud, label, config, clf, idx) for idx, (cloud, label) in enumerate(test)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_eval_one, jobs_args, chunksize=8))
    else:
        results = [_eval_one(a) for a in jobs_args]

    n = len(test)
    rows = []
    for pos, t in enumerate(config.t_grid):
        certified = (
            sum(1 for ok, size, _ in results if ok and size >= t) / n
        )
        empirical = None
        if config.run_attacks:
            empirical = sum(1 for _, _, emp in results if emp[pos]) / n
        rows.append(
            CurveRow(t=t, certified_accuracy=certified, empirical_accuracy=empirical)
        )
    metadata = {"config": config.echo(), "version": __version__}
    return AccuracyCurve(rows=tuple(rows), metadata=metadata)


def fit_scenario_classifier(
    scenario: int,
    train: list[tuple[PointCloud, int]],
    classes: int,
    m: int,
    rule: HashRule,
    completion: CompletionFn | None = None,
) -> BaseClassifier:
    """Scenario 1: prototypes from full training clouds, applied to buckets
    as-is. Scenario 2: prototypes fit on hashed sub-point clouds. Scenario 3:
    a completion step in front of the scenario-1 classifier."""
    if scenario == 1:
        return fit_centroid(train, classes, FullClouds())
    if scenario == 2:
        return fit_centroid(train, classes, SubClouds(m, rule))
    if scenario == 3:
        base = fit_centroid(train, classes, FullClouds())
        return CompletedClassifier(base, completion or CentroidUpsample(32))
    raise ConfigError(f"unknown scenario: {scenario}")


def write_results(curve: AccuracyCurve, path: str | Path, fmt: str = "csv") -> None:
    """CSV columns are exactly t,certified_accuracy,empirical_accuracy; JSON
    mirrors the curve including metadata. Byte-deterministic."""
    path = Path(path)
    try:
        if fmt == "csv":
            lines = ["t,certified_accuracy,empirical_accuracy"]
            for row in curve.rows:
                emp = "" if row.empirical_accuracy is None else repr(row.empirical_accuracy)
                lines.append(f"{row.t},{row.certified_accuracy!r},{emp}")
            path.write_text("\n".join(lines) + "\n")
        elif fmt == "json":
            doc = {
                "metadata": curve.metadata,
                "rows": [
                    {
                        "t": row.t,
                        "certified_accuracy": row.certified_accuracy,
                        "empirical_accuracy": row.empirical_accuracy,
                    }
                    for row in curve.rows
                ],
            }
            path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        else:
            raise ConfigError(f"unknown results format: {fmt}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_results(path: str | Path) -> AccuracyCurve:
    """Parse a JSON results file back into an AccuracyCurve."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse results {path}: {exc}") from exc
    rows = tuple(
        CurveRow(
            t=int(r["t"]),
            certified_accuracy=float(r["certified_accuracy"]),
            empirical_accuracy=(
                None if r["empirical_accuracy"] is None else float(r["empirical_accuracy"])
            ),
        )
        for r in doc["rows"]
    )
    return AccuracyCurve(rows=rows, metadata=doc["metadata"])
