"""Command-line interface.

Subcommands: train, sweep-beta, verify, probe, dump-config. Flags mirror the
training config in kebab-case; `--config FILE` reads a JSON file with the
same (snake_case) keys, and explicit flags override file values. Exit codes:
0 success, 1 property/numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .data import GenConfig, ViewPairGenerator, linear_probe
from .encoder import load_model, save_model
from .kernels import KernelSpec
from .losses import BaselineConfig
from .stein import SteinConfig
from .train import (
    TrainConfig,
    TrainingDiverged,
    beta_sweep,
    default_stein_config,
    format_metrics,
    format_summary,
    train,
)
from .verify import VerifyOverrides, verify_suite

__all__ = ["main"]


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=str, help="JSON config file; flags override its values")
    g = p.add_argument_group("training")
    g.add_argument("--beta", type=float)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--steps", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--sgd-momentum", type=float)
    g.add_argument("--weight-decay", type=float)
    g.add_argument("--wiring", choices=["symmetric", "momentum_target"])
    g.add_argument("--ema-base", type=float)
    g.add_argument("--loss-kind", choices=["mveb", "infonce", "decorrelation"])
    g.add_argument("--seed", type=int)
    g.add_argument("--embed-dim", type=int)
    g.add_argument("--log-every", type=int)
    g.add_argument("--probe-every", type=int)
    s = p.add_argument_group("score estimator")
    s.add_argument("--stein-ridge-eta", type=float)
    s.add_argument("--kernel-family", choices=["vmf", "rbf"])
    s.add_argument("--kernel-bandwidth", type=float)
    s.add_argument("--bandwidth-mode", choices=["fixed", "median_heuristic"])
    s.add_argument("--bandwidth-floor", type=float)
    d = p.add_argument_group("data")
    d.add_argument("--num-classes", type=int)
    d.add_argument("--latent-dim", type=int)
    d.add_argument("--input-dim", type=int)
    d.add_argument("--shared-scale", type=float)
    d.add_argument("--nuisance-scale", type=float)
    d.add_argument("--noise-scale", type=float)
    d.add_argument("--data-seed", type=int)
    b = p.add_argument_group("baselines")
    b.add_argument("--temperature", type=float)
    b.add_argument("--decorrelation-lambda", type=float)


_TRAIN_KEYS = (
    "beta",
    "batch_size",
    "steps",
    "lr",
    "sgd_momentum",
    "weight_decay",
    "wiring",
    "ema_base",
    "loss_kind",
    "seed",
    "embed_dim",
    "log_every",
    "probe_every",
)
_STEIN_FLAG_KEYS = {
    "stein_ridge_eta": ("stein", "ridge_eta"),
    "kernel_family": ("kernel", "family"),
    "kernel_bandwidth": ("kernel", "bandwidth"),
    "bandwidth_mode": ("kernel", "bandwidth_mode"),
    "bandwidth_floor": ("kernel", "bandwidth_floor"),
}
_DATA_KEYS = ("num_classes", "latent_dim", "input_dim", "shared_scale", "nuisance_scale", "noise_scale")
_BASELINE_KEYS = ("temperature", "decorrelation_lambda")


_TOP_LEVEL_SECTIONS = ("stein", "data", "baseline")


def build_config(args: argparse.Namespace) -> TrainConfig:
    """Assemble TrainConfig from dataclass defaults, then file, then flags."""
    file_cfg: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            file_cfg = json.load(f)
        if not isinstance(file_cfg, dict):
            raise ValueError("config file must hold a JSON object")
        known = set(_TRAIN_KEYS) | set(_TOP_LEVEL_SECTIONS) | {"hidden_dims"}
        unknown = sorted(set(file_cfg) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")

    def merged(section: str, keys, flag_map=None) -> dict:
        out = dict(file_cfg.get(section, {})) if section else {
            k: v for k, v in file_cfg.items() if k in keys
        }
        for key in keys:
            flag = key if flag_map is None else flag_map.get(key, key)
            val = getattr(args, flag, None)
            if val is not None:
                out[key] = val
        return out

    top = merged(None, _TRAIN_KEYS)
    data_kw = merged("data", _DATA_KEYS)
    if getattr(args, "data_seed", None) is not None:
        data_kw["seed"] = args.data_seed
    elif "seed" in file_cfg.get("data", {}):
        data_kw["seed"] = file_cfg["data"]["seed"]
    baseline_kw = merged("baseline", _BASELINE_KEYS)

    stein_file = file_cfg.get("stein", {})
    kernel_kw = dict(stein_file.get("kernel", {}))
    stein_kw = {k: v for k, v in stein_file.items() if k != "kernel"}
    for flag, (section, key) in _STEIN_FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            (kernel_kw if section == "kernel" else stein_kw)[key] = val

    if "hidden_dims" in file_cfg:
        top["hidden_dims"] = tuple(file_cfg["hidden_dims"])
    try:
        default_kernel = default_stein_config().kernel
        kernel = dataclasses.replace(default_kernel, **kernel_kw) if kernel_kw else default_kernel
        stein = (
            SteinConfig(kernel=kernel, **stein_kw) if (kernel_kw or stein_kw) else default_stein_config()
        )
        return TrainConfig(
            **top,
            stein=stein,
            data=GenConfig(**data_kw),
            baseline=BaselineConfig(**baseline_kw),
        )
    except TypeError as e:  # unknown nested key surfaces as a config error
        raise ValueError(str(e)) from e


def config_to_json(cfg: TrainConfig) -> str:
    def unpack(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: unpack(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, tuple):
            return list(obj)
        return obj

    return json.dumps(unpack(cfg), indent=2)


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _cmd_train(args) -> int:
    cfg = build_config(args)
    try:
        result = train(cfg)
    except TrainingDiverged as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    lines = format_metrics(result.records)
    summary = format_summary([result.final])
    _emit(lines + "\n" + summary, args.out)
    if args.save_model:
        save_model(result.model, args.save_model)
    return 0


def _cmd_sweep(args) -> int:
    cfg = build_config(args)
    betas = [float(b) for b in args.betas.split(",") if b != ""]
    if not betas:
        raise ValueError("--betas must list at least one value")
    try:
        rows = beta_sweep(cfg, betas)
    except TrainingDiverged as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    header = "beta\t" + format_summary([]).strip()
    body = [f"{row.beta!r}\t" + format_summary([row.final]).splitlines()[1] for row in rows]
    _emit("\n".join([header, *body]), args.out)
    return 0


def _cmd_verify(args) -> int:
    report = verify_suite(include_slow=not args.fast)
    lines = []
    for c in report.checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    for err in report.config_errors:
        lines.append(f"CONFIG-ERROR {err}")
    failed = [c for c in report.checks if not c.passed]
    lines.append(
        f"{len(report.checks) - len(failed)}/{len(report.checks)} checks passed"
        + (f", {len(report.config_errors)} config errors" if report.config_errors else "")
    )
    _emit("\n".join(lines), args.out)
    if report.config_errors:
        return 2
    return 1 if failed else 0


def _cmd_probe(args) -> int:
    cfg = build_config(args)
    gen = ViewPairGenerator(cfg.data)
    rng = gen.fresh_rng()
    train_batch = gen.batch(args.probe_train_size, rng)
    test_batch = gen.batch(args.probe_test_size, rng)
    if args.model:
        model = load_model(args.model)
        feats_train, _ = model.forward(train_batch.v1)
        feats_test, _ = model.forward(test_batch.v1)
        source = "encoder embeddings"
    else:
        feats_train, feats_test = train_batch.v1, test_batch.v1
        source = "raw view-1 features"
    acc = linear_probe(feats_train, train_batch.labels, feats_test, test_batch.labels)
    _emit(f"probe_accuracy={acc!r} source={source}", args.out)
    return 0


def _cmd_dump_config(args) -> int:
    cfg = build_config(args)
    _emit(config_to_json(cfg), args.out)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mveb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the training loop, emit metrics")
    _add_train_flags(p_train)
    p_train.add_argument("--out", type=str, help="write output here instead of stdout")
    p_train.add_argument("--save-model", type=str, help="write an encoder checkpoint")
    p_train.set_defaults(fn=_cmd_train)

    p_sweep = sub.add_parser("sweep-beta", help="train once per beta, emit a comparison table")
    _add_train_flags(p_sweep)
    p_sweep.add_argument("--betas", type=str, required=True, help="comma-separated beta values")
    p_sweep.add_argument("--out", type=str)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the cross-module property suite")
    p_verify.add_argument("--fast", action="store_true", help="skip the slow training checks")
    p_verify.add_argument("--out", type=str)
    p_verify.set_defaults(fn=_cmd_verify)

    p_probe = sub.add_parser("probe", help="linear-probe raw views or a saved encoder")
    _add_train_flags(p_probe)
    p_probe.add_argument("--model", type=str, help="encoder checkpoint to embed with")
    p_probe.add_argument("--probe-train-size", type=int, default=2048)
    p_probe.add_argument("--probe-test-size", type=int, default=1024)
    p_probe.add_argument("--out", type=str)
    p_probe.set_defaults(fn=_cmd_probe)

    p_dump = sub.add_parser("dump-config", help="print the resolved config as JSON")
    _add_train_flags(p_dump)
    p_dump.add_argument("--out", type=str)
    p_dump.set_defaults(fn=_cmd_dump_config)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
