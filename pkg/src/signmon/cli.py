"""Command line entry point: ``signmon {gen,check,eval,bench,render}``.

Settings come from a flat JSON config file (``--config``) overridden by
flags.  Results go to stdout as one JSON document; logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels, raster
from .evalharness import DEFAULT_ERROR_MODEL, ErrorModel, format_tables, run_experiment
from .monitor import (
    CertificateError,
    batch_check,
    certificate_to_json,
    check_certificate,
    make_certificate,
    parse_certificate,
)
from .ontology import ConfigError, SignClass, ToleranceConfig, validate_config
from .scenegen import DatasetManifest, GenerationConfig, generate_dataset, make_scene, render_sign

log = logging.getLogger("signmon")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_REJECTED = 3

TOLERANCE_KEYS = ("delta1", "delta2", "delta3", "delta4", "delta5", "area_mode", "angle_mode", "angle_floor_deg")
GENERATION_KEYS = ("scenes", "master_seed", "background", "background_size", "sign_side_range", "perturbations")
ERROR_KEYS = ("miss_rate", "fp_rate", "confusion_rate", "bbox_jitter")
OTHER_KEYS = ("seed", "iou_threshold", "out", "dataset")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _common(p):
    p.add_argument("--config", type=Path, help="flat JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    for i in range(1, 6):
        p.add_argument(f"--delta{i}", type=float)
    p.add_argument("--area-mode", choices=("literal", "area-fraction"))
    p.add_argument("--angle-mode", choices=("paper-literal", "robust"))
    p.add_argument("--iou-threshold", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="signmon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic scene dataset")
    _common(p)
    p.add_argument("--scenes", type=int)
    p.add_argument("--background", help="'procedural' or a directory of photos")

    p = sub.add_parser("check", help="check one certificate; exit 0 accepted, 3 rejected")
    _common(p)
    p.add_argument("certificate", type=Path)
    p.add_argument("--timing", action="store_true", help="report measured elapsed_us instead of 0")

    p = sub.add_parser("eval", help="run the with/without-monitor experiment on a dataset")
    _common(p)
    p.add_argument("--dataset", type=Path)
    p.add_argument("--scenes", type=int, help="generate this many scenes under --out first")
    p.add_argument("--timing", action="store_true", help="include latency percentiles")
    for key in ERROR_KEYS:
        p.add_argument("--" + key.replace("_", "-"), type=float)

    p = sub.add_parser("bench", help="monitor latency over a batch of certificates")
    _common(p)
    p.add_argument("--n", type=int, default=1000, help="number of certificates")
    p.add_argument("--dataset", type=Path)

    p = sub.add_parser("render", help="write a sign template PNG")
    _common(p)
    p.add_argument("sign_class", choices=[c.value for c in SignClass])
    p.add_argument("--side", type=int, default=206)
    p.add_argument("--cert", type=Path, help="also write a certificate for the whole template")
    p.add_argument("--claim", choices=[c.value for c in SignClass], help="class claimed in --cert")
    return parser


def load_settings(args) -> dict:
    """Config file values overridden by any flag that was given."""
    settings = {}
    if args.config is not None:
        try:
            settings = json.loads(args.config.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError([f"cannot read config {args.config}: {exc}"]) from None
        if not isinstance(settings, dict):
            raise ConfigError(["config file must hold a JSON object"])
        known = set(TOLERANCE_KEYS + GENERATION_KEYS + ERROR_KEYS + OTHER_KEYS)
        unknown = sorted(set(settings) - known)
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
    for key, value in vars(args).items():
        if value is None or key in ("config", "command", "verbose", "certificate", "sign_class"):
            continue
        settings[key] = value
    if "seed" in settings and args.command == "gen":
        settings["master_seed"] = settings.pop("seed")
    return settings


def tolerance_config(settings) -> ToleranceConfig:
    try:
        return validate_config(ToleranceConfig(**{k: settings[k] for k in TOLERANCE_KEYS if k in settings}))
    except TypeError as exc:
        raise ConfigError([str(exc)]) from None


def generation_config(settings) -> GenerationConfig:
    try:
        return GenerationConfig(**{k: settings[k] for k in GENERATION_KEYS if k in settings})
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None


def error_model(settings) -> ErrorModel:
    base = DEFAULT_ERROR_MODEL.to_dict()
    base.update({k: settings[k] for k in ERROR_KEYS if k in settings})
    try:
        return ErrorModel(**base)
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None


def _emit(doc):
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def _require_out(settings):
    if "out" not in settings:
        raise UsageError("--out is required")
    return Path(settings["out"])


def cmd_gen(args, settings):
    out = _require_out(settings)
    cfg = generation_config(settings)
    manifest = generate_dataset(cfg, out)
    _emit({"scenes": len(manifest.entries), "signs": manifest.sign_count, "manifest": str(out / "manifest.jsonl")})
    return EXIT_OK


def cmd_check(args, settings):
    cfg = tolerance_config(settings)
    path = args.certificate
    try:
        doc = path.read_bytes()
    except OSError as exc:
        raise ConfigError([f"cannot read certificate {path}: {exc}"]) from None
    try:
        cert = parse_certificate(doc, base_dir=path.parent)
    except CertificateError as exc:
        _emit({"accepted": False, "reason": "invalid-certificate", "error": type(exc).__name__,
               "detail": str(exc), "failing_conditions": [], "elapsed_us": 0})
        return EXIT_REJECTED
    verdict = check_certificate(cert, cfg)
    _emit(verdict.to_json(timing=args.timing))
    return EXIT_OK if verdict.accepted else EXIT_REJECTED


def cmd_eval(args, settings):
    cfg = tolerance_config(settings)
    em = error_model(settings)
    out = Path(settings["out"]) if "out" in settings else None
    if "dataset" in settings:
        root = Path(settings["dataset"])
    elif out is not None and "scenes" in settings:
        root = out / "dataset"
        generate_dataset(generation_config(settings), root)
    else:
        raise UsageError("eval needs --dataset, or --scenes with --out")
    try:
        manifest = DatasetManifest.load(root)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError([f"cannot load dataset {root}: {exc}"]) from None
    result = run_experiment(manifest, em, cfg, settings.get("seed", 0), settings.get("iou_threshold", 0.5))
    report = result.to_dict(timing=args.timing)
    report["tolerances"] = cfg.to_dict()
    report["error_model"] = em.to_dict()
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        (out / "report.txt").write_text(format_tables(result, timing=args.timing))
    log.info("\n%s", format_tables(result, timing=args.timing))
    _emit(report)
    return EXIT_OK


def _bench_certificates(settings, n):
    seed = settings.get("seed", 0)
    certs = []
    if "dataset" in settings:
        manifest = DatasetManifest.load(settings["dataset"])
        scenes = ((raster.read_image(manifest.root / e.image), e.truths) for e in manifest.entries)
    else:
        cfg = GenerationConfig(scenes=0, master_seed=seed)

        def scenes_gen():
            i = 0
            while True:
                s = make_scene(cfg, i)
                yield s.image, s.truths
                i += 1

        scenes = scenes_gen()
    # mixed batch: true claims and wrong-class claims alternate
    classes = list(SignClass)
    for image, truths in scenes:
        for t in truths:
            claim = t.cls if len(certs) % 2 == 0 else classes[(classes.index(t.cls) + 1) % 3]
            certs.append(make_certificate(image, claim, t.bbox))
            if len(certs) >= n:
                return certs
    return certs


def cmd_bench(args, settings):
    cfg = tolerance_config(settings)
    certs = _bench_certificates(settings, args.n)
    if not certs:
        raise ConfigError(["no certificates to benchmark"])
    batch_check(certs[:5], cfg)  # jit warm-up
    t0 = time.perf_counter()
    verdicts = batch_check(certs, cfg)
    wall = time.perf_counter() - t0
    lat = np.asarray([v.elapsed_us for v in verdicts], dtype=np.float64)
    report = {
        "backend": kernels.BACKEND,
        "certificates": len(certs),
        "accepted": sum(v.accepted for v in verdicts),
        "latency_us": {
            "p50": int(np.percentile(lat, 50)),
            "p95": int(np.percentile(lat, 95)),
            "mean": int(lat.mean()),
            "max": int(lat.max()),
        },
        "wall_s": round(wall, 3),
    }
    if "out" in settings:
        out = Path(settings["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(report)
    return EXIT_OK


def cmd_render(args, settings):
    out = _require_out(settings)
    tpl = render_sign(SignClass.parse(args.sign_class), args.side, settings.get("seed", 0))
    out.parent.mkdir(parents=True, exist_ok=True)
    raster.write_image(out, tpl.face)
    doc = {"image": str(out), "class": args.sign_class, "side": args.side}
    if args.cert is not None:
        claim = args.claim or args.sign_class
        cert = make_certificate(tpl.face, claim, (0.5, 0.5, 1.0, 1.0))
        args.cert.parent.mkdir(parents=True, exist_ok=True)
        args.cert.write_text(certificate_to_json(cert) + "\n")
        doc["certificate"] = str(args.cert)
    _emit(doc)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "check": cmd_check, "eval": cmd_eval, "bench": cmd_bench, "render": cmd_render}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        settings = load_settings(args)
        return COMMANDS[args.command](args, settings)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"signmon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, OSError, raster.ImageDecodeError) as exc:
        print(f"signmon: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
