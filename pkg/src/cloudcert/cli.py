"""Command-line entry point.

Subcommands: gen-data, partition, predict, certify, attack, eval, oracle,
tightness, baseline. Exit codes: 0 success, 1 input error, 2 backend error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import shlex
import sys
from pathlib import Path

from .attacks import AttackBudget, run_attack
from .baselines import RsConversion, SubsampleBaseline, det_subsample_certify, rs_to_perturbation_size
from .certlab import run_oracle_suite, run_tightness_suite
from .classifier import (
    BaseClassifier,
    ConstantClassifier,
    LookupClassifier,
    cloud_key,
    open_external,
)
from .core import AttackType, PointCloud
from .errors import ClassifierBackendError, CloudCertError, ConfigError, FormatError
from .ensemble import predict_and_certify
from .partition import HashRule, balance_stats, partition
from .pipeline import (
    EvalConfig,
    evaluate,
    fit_scenario_classifier,
    gen_synthetic,
    load_cloud,
    load_manifest,
    write_results,
)

_HASH = {"md5": HashRule.MD5, "mean": HashRule.MEAN_DIGITS}
_ATTACK = {
    "add": AttackType.ADDITION,
    "delete": AttackType.DELETION,
    "modify": AttackType.MODIFICATION,
    "perturb": AttackType.PERTURBATION,
}


def load_lookup_file(path: str, classes_hint: int | None = None) -> LookupClassifier:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse lookup file {path}: {exc}") from exc
    classes = int(doc.get("classes", classes_hint or 2))
    table = {}
    for entry in doc.get("entries", []):
        key = cloud_key(PointCloud(entry["points"]))
        table[key] = int(entry["label"])
    return LookupClassifier(table, default=int(doc.get("default", 1)), classes=classes)


def build_classifier(spec: str, classes: int | None, args: argparse.Namespace) -> BaseClassifier:
    """Parse --classifier: centroid | constant:<l> | lookup:<file> | external:<cmd>."""
    if spec == "centroid":
        train_path = getattr(args, "train", None)
        if train_path is None:
            raise ConfigError("centroid classifier needs --train <manifest>")
        manifest = load_manifest(train_path)
        train = manifest.load()
        return fit_scenario_classifier(
            getattr(args, "scenario", 1),
            train,
            manifest.classes,
            args.m,
            _HASH[args.hash],
        )
    if spec.startswith("constant:"):
        if classes is None:
            raise ConfigError("constant classifier needs --classes")
        return ConstantClassifier(int(spec.split(":", 1)[1]), classes)
    if spec.startswith("lookup:"):
        return load_lookup_file(spec.split(":", 1)[1], classes)
    if spec.startswith("external:"):
        if classes is None:
            raise ConfigError("external classifier needs --classes")
        return open_external(shlex.split(spec.split(":", 1)[1]), classes)
    raise ConfigError(f"unknown classifier spec: {spec}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=400)
    p.add_argument("--hash", choices=sorted(_HASH), default="md5")
    p.add_argument("--classifier", default="centroid")
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--train", default=None, help="training manifest for centroid fits")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--lambda", dest="lam", type=float, default=5e-4)
    p.add_argument("--eta", type=float, default=RsConversion.ETA_CUBE)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cloudcert")
    parser.add_argument("--config", default=None, help="flat key=value config file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic benchmark")
    _add_common(p)
    p.add_argument("--classes-gen", type=int, default=3)
    p.add_argument("--clouds-per-class", type=int, default=10)
    p.add_argument("--points", type=int, default=1024)
    p.add_argument("--spread", type=float, default=0.1)
    p.add_argument("--name", default="synthetic")

    p = sub.add_parser("partition", help="bucket statistics for one cloud")
    _add_common(p)
    p.add_argument("input")

    p = sub.add_parser("predict", help="ensemble prediction for one cloud")
    _add_common(p)
    p.add_argument("input")

    p = sub.add_parser("certify", help="certificate for one cloud")
    _add_common(p)
    p.add_argument("input")

    p = sub.add_parser("attack", help="run an empirical attack on one cloud")
    _add_common(p)
    p.add_argument("input")
    p.add_argument("--attack", choices=sorted(_ATTACK), default="add")
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--true-label", type=int, required=True)
    p.add_argument("--pool", type=int, default=8)

    p = sub.add_parser("eval", help="certified/empirical accuracy curve")
    _add_common(p)
    p.add_argument("--test", required=True, help="test manifest")
    p.add_argument("--attack", choices=sorted(_ATTACK), default="add")
    p.add_argument("--t-max", type=int, default=10)
    p.add_argument("--with-attacks", action="store_true")
    p.add_argument("--pool", type=int, default=8)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("oracle", help="exhaustive soundness check on small instances")
    _add_common(p)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--tmax", type=int, default=3)

    p = sub.add_parser("tightness", help="construct and verify flip witnesses")
    _add_common(p)
    p.add_argument("--instances", type=int, default=50)

    p = sub.add_parser("baseline", help="radius conversion or subsample baseline")
    _add_common(p)
    p.add_argument("input", nargs="?")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--n-subsamples", type=int, default=32)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Read --config key=value pairs as parser defaults; flags still win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    defaults = {}
    try:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            defaults[key.replace("-", "_")] = value
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        known = {a.dest: a for a in action._actions}
        action.set_defaults(
            **{
                k: (known[k].type(v) if known[k].type else v)
                for k, v in defaults.items()
                if k in known
            }
        )
    return argv


def _emit(doc: dict, args: argparse.Namespace) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _run(args: argparse.Namespace) -> None:
    rule = _HASH[args.hash]
    if args.command == "gen-data":
        out_dir = args.out or "."
        manifest = gen_synthetic(
            out_dir,
            classes=args.classes_gen,
            clouds_per_class=args.clouds_per_class,
            n_points=args.points,
            spread=args.spread,
            seed=args.seed,
            name=args.name,
        )
        print(str(Path(out_dir) / f"{manifest.name}_manifest.json"))
        return

    if args.command == "partition":
        cloud, dropped = load_cloud(args.input)
        stats = balance_stats(partition(cloud, args.m, rule))
        _emit({"duplicates_dropped": dropped, **dataclasses.asdict(stats)}, args)
        return

    if args.command in ("predict", "certify", "attack", "baseline") and args.input:
        cloud, _ = load_cloud(args.input)

    if args.command == "predict":
        clf = build_classifier(args.classifier, args.classes, args)
        cert = predict_and_certify(cloud, args.m, rule, clf)
        _emit({"label": cert.label}, args)
        return

    if args.command == "certify":
        clf = build_classifier(args.classifier, args.classes, args)
        cert = predict_and_certify(cloud, args.m, rule, clf)
        _emit(
            {
                "label": cert.label,
                "counts": list(cert.frequencies.counts),
                "certified_size": {
                    kind.value: size for kind, size in cert.certified_size.items()
                },
            },
            args,
        )
        return

    if args.command == "attack":
        clf = build_classifier(args.classifier, args.classes, args)
        budget = AttackBudget(
            _ATTACK[args.attack], args.t, candidate_pool_size=args.pool, seed=args.seed
        )
        result = run_attack(cloud, args.m, rule, clf, budget, args.true_label)
        _emit(
            {
                "original_label": result.original_label,
                "attacked_label": result.attacked_label,
                "achieved_size": result.achieved_size,
                "success": result.success,
            },
            args,
        )
        return

    if args.command == "eval":
        clf = build_classifier(args.classifier, args.classes, args)
        test = load_manifest(args.test).load()
        config = EvalConfig(
            m=args.m,
            rule=rule,
            attack_type=_ATTACK[args.attack],
            t_grid=tuple(range(args.t_max + 1)),
            scenario=args.scenario,
            seed=args.seed,
            eta=args.eta,
            lam=args.lam,
            run_attacks=args.with_attacks,
            candidate_pool_size=args.pool,
            jobs=args.jobs,
        )
        curve = evaluate(config, clf, test)
        out = args.out or f"results.{args.format}"
        write_results(curve, out, fmt=args.format)
        print(out)
        return

    if args.command == "oracle":
        _emit(run_oracle_suite(args.instances, tmax=args.tmax, seed0=args.seed, rule=rule), args)
        return

    if args.command == "tightness":
        _emit(run_tightness_suite(args.instances, seed0=args.seed, rule=rule), args)
        return

    if args.command == "baseline":
        if args.gamma is not None:
            size = rs_to_perturbation_size(RsConversion(gamma=args.gamma, eta=args.eta))
            _emit({"gamma": args.gamma, "eta": args.eta, "certified_size": size}, args)
            return
        if not args.input:
            raise ConfigError("baseline needs an input cloud or --gamma")
        clf = build_classifier(args.classifier, args.classes, args)
        record = det_subsample_certify(
            cloud, SubsampleBaseline(k=args.k, n_subsamples=args.n_subsamples, seed=args.seed), clf
        )
        _emit(
            {
                "label": record.label,
                "counts": list(record.frequencies.counts),
                "max_containment": record.max_containment,
                "certified_size": {
                    kind.value: size for kind, size in record.certified_size.items()
                },
            },
            args,
        )
        return


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        _run(args)
    except ClassifierBackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except CloudCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
