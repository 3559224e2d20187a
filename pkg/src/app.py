"""Command handlers and argument parser for the ``orient8`` executable."""
import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from src.d4.group import TableDerivationError, compare_tables, derive_tables, format_tables, verify_group
from src.data.dataset import Split, expand_orientations, split_by_patient
from src.data.phantoms import PhantomSpec, generate_phantoms
from src.file_io.file_handler import (
    ImageFormatError, UnsupportedFormatError, read_image, write_image, write_preview_png,
)
from src.file_io.manifest import ManifestError, load_volumes, save_volumes
from src.imgops.augment import AugmentConfig
from src.nn.checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from src.nn.gradcheck import check_layer_gradients, gradient_check
from src.nn.layers import ShapeError
from src.nn.network import Network, NetworkConfig
from src.nn.optim import NonFiniteGradientError
from src.pipeline.evaluation import Method, evaluate
from src.pipeline.predictor import COMBINE_MODES, reorient
from src.pipeline.reports import generate_report, write_eval_report, write_jsonl, write_sweep_grid
from src.pipeline.simulation import simulate_noisy_voting
from src.pipeline.sweep import sensitivity_sweep
from src.pipeline.trainer import TrainConfig, TrainingDivergedError, train, transfer
from src.utils.config import Config, ConfigError
from src.utils.constants import (
    APP_NAME, APP_VERSION, DEFAULT_IN_CHANNELS, DEFAULT_SWEEP_FRACTIONS, EXIT_DIVERGED,
    EXIT_FAILURE, EXIT_FORMAT_ERROR, EXIT_MISSING_FILE, EXIT_OK, MODALITIES,
    REFERENCE_COMPOSE, REFERENCE_INVERSE_ACTION,
)
from src.utils.log import configure_logging

logger = logging.getLogger(APP_NAME)

# ── Error → exit code ────────────────────────────────────────────────────────
EXIT_CODES = [
    (TrainingDivergedError, EXIT_DIVERGED),
    (NonFiniteGradientError, EXIT_DIVERGED),
    (ConfigError, EXIT_MISSING_FILE),
    (FileNotFoundError, EXIT_MISSING_FILE),
    (ShapeError, EXIT_FORMAT_ERROR),
    (CheckpointFormatError, EXIT_FORMAT_ERROR),
    (ImageFormatError, EXIT_FORMAT_ERROR),
    (UnsupportedFormatError, EXIT_FORMAT_ERROR),
    (ManifestError, EXIT_FORMAT_ERROR),
    (TableDerivationError, EXIT_FAILURE),
    (ValueError, EXIT_FAILURE),
]


def exit_code_for(exc: BaseException) -> int | None:
    for kind, code in EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return None


# ── Shared helpers ───────────────────────────────────────────────────────────
def _resolve_config(args) -> Config:
    cfg = Config(args.config) if args.config else Config()
    overrides = {key: getattr(args, key, None) for key in Config.DEFAULTS}
    cfg.merge(overrides)
    logger.info("command %s, resolved config: %s", args.command, cfg.describe())
    return cfg


def _train_config(cfg: Config, network: NetworkConfig | None = None, **changes) -> TrainConfig:
    if network is None:
        network = NetworkConfig(input_size=cfg.input_size, in_channels=DEFAULT_IN_CHANNELS, seed=cfg.seed)
    base = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch, lr=cfg.lr, seed=cfg.seed,
                       train_fraction=cfg.get("fraction"), freeze_conv=cfg.freeze_conv,
                       network=network, augment=AugmentConfig())
    return replace(base, **changes)


def _splits(data_dir: str, modality: str, seed: int):
    volumes = load_volumes(data_dir, modality)
    if not volumes:
        raise ValueError(f"no {modality} volumes in {data_dir}")
    return split_by_patient(volumes, seed=seed)


def _checkpoint_seed(cfg: Config, net: Network) -> int:
    """Split seed for a run that starts from a checkpoint.

    Defaults to the seed the checkpoint was trained with, so its test
    patients stay unseen; an explicit seed overrides it.
    """
    seed = cfg.seed if cfg.given("seed") else net.config.seed
    logger.info("patient split seed %d", seed)
    return seed


def _log_path(checkpoint_path: str) -> str:
    return os.path.splitext(checkpoint_path)[0] + "_log.csv"


def _config_path(checkpoint_path: str) -> str:
    return os.path.splitext(checkpoint_path)[0] + "_config.cfg"


# ── Subcommands ──────────────────────────────────────────────────────────────
def cmd_tables(args) -> int:
    _resolve_config(args)
    tables = derive_tables()
    print(format_tables(tables))
    problems = verify_group(tables)
    mismatches = compare_tables(tables, REFERENCE_COMPOSE, REFERENCE_INVERSE_ACTION)
    for problem in problems:
        print(f"group check failed: {problem}", file=sys.stderr)
    for mismatch in mismatches:
        print(f"mismatch: {mismatch}", file=sys.stderr)
    return EXIT_FAILURE if problems or mismatches else EXIT_OK


def cmd_gen(args) -> int:
    cfg = _resolve_config(args)
    modalities = [args.modality] if args.modality else MODALITIES
    for modality in modalities:
        spec = PhantomSpec(n_patients=cfg.get("patients"), slices_per_patient=cfg.get("slices"),
                           image_size=cfg.get("size"), modality=modality, seed=cfg.seed,
                           noise=not args.no_noise)
        volumes = generate_phantoms(spec)
        save_volumes(volumes, args.out)
        if args.png:
            for volume in volumes:
                for s in volume.slices:
                    write_preview_png(s, os.path.join(args.out, "previews", modality,
                                                      f"{s.patient_id}_slice_{s.slice_index:03d}.png"))
        print(f"{modality}: {len(volumes)} volumes x {spec.slices_per_patient} slices -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    train_ds, val_ds, _ = _splits(args.data, cfg.modality, cfg.seed)
    tcfg = _train_config(cfg, snapshot_dir=args.snapshots)
    net = train(expand_orientations(train_ds), expand_orientations(val_ds), tcfg,
                log_path=_log_path(args.out))
    save_checkpoint(net, args.out)
    cfg.save(_config_path(args.out))
    print(f"checkpoint={args.out}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    cfg = _resolve_config(args)
    pretrained = load_checkpoint(args.ckpt)
    seed = _checkpoint_seed(cfg, pretrained)
    cfg.set("seed", seed)
    network = replace(pretrained.config, seed=seed)
    if args.input_size is not None:
        network = replace(network, input_size=args.input_size)
    tcfg = _train_config(cfg, network=network, seed=seed, snapshot_dir=args.snapshots).for_transfer()
    if args.epochs is not None:
        tcfg = replace(tcfg, epochs=args.epochs)
    if args.lr is not None:
        tcfg = replace(tcfg, lr=args.lr)
    train_ds, val_ds, _ = _splits(args.data, cfg.modality, seed)
    net = transfer(pretrained, expand_orientations(train_ds), tcfg, expand_orientations(val_ds),
                   log_path=_log_path(args.out))
    net = Network(network, net.state_dict())
    save_checkpoint(net, args.out)
    cfg.save(_config_path(args.out))
    print(f"checkpoint={args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    net = load_checkpoint(args.ckpt)
    datasets = dict(zip(Split, _splits(args.data, cfg.modality, _checkpoint_seed(cfg, net))))
    ds = expand_orientations(datasets[Split(args.split)])
    report = evaluate(net, ds, cfg.method, combine=cfg.get("combine"))
    report_path = args.report or os.path.splitext(args.ckpt)[0] + f"_{report.method.value}_eval.csv"
    write_eval_report(report, report_path)
    print(report.summary())
    logger.info("%s", generate_report(report))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    fractions = [float(f) for f in args.fractions.split(",")] if args.fractions else DEFAULT_SWEEP_FRACTIONS
    seeds = [cfg.seed + k for k in range(args.seeds)]
    volumes = {m: load_volumes(args.data, m) for m in MODALITIES}
    volumes = {m: v for m, v in volumes.items() if v}
    if not volumes:
        raise ValueError(f"no volumes in {args.data}")
    result = sensitivity_sweep(volumes, fractions, _train_config(cfg), seeds)
    os.makedirs(args.out, exist_ok=True)
    write_sweep_grid(result, os.path.join(args.out, "sweep_grid.csv"))
    write_jsonl(result.records, os.path.join(args.out, "sweep_cells.jsonl"))
    print(result.grid.to_string(float_format=lambda v: f"{v:.4f}"))
    return EXIT_OK


def cmd_reorient(args) -> int:
    cfg = _resolve_config(args)
    net = load_checkpoint(args.ckpt)
    slice_ = read_image(args.input)
    corrected = reorient(net, slice_, derive_tables(), cfg.get("combine"))
    write_image(corrected, args.output)
    print(f"predicted_orientation={corrected.predicted_orientation}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    result = simulate_noisy_voting(args.error_rate, args.trials, cfg.seed)
    print(result.summary())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = _resolve_config(args)
    dtype = np.dtype(args.dtype)
    tolerance = 1e-2 if dtype == np.float32 else 1e-5
    failed = False
    for layer, results in check_layer_gradients(dtype, args.coords, cfg.seed).items():
        worst = max(r.max_rel_error for r in results)
        failed |= worst > tolerance
        print(f"{layer:<11} max_rel_error={worst:.3e}")

    # the whole stack in float64 on a small network
    net = Network(NetworkConfig(input_size=16, in_channels=1, conv_channels=(2, 3, 4), hidden_units=8,
                                seed=cfg.seed), dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    batch = rng.normal(size=(2, 1, 16, 16))
    results = gradient_check(net, batch, rng.integers(0, 8, size=2), n_coords=args.coords,
                             step=1e-6, seed=cfg.seed)
    worst = max(r.max_rel_error for r in results.values())
    # looser than the per-layer bound: a ReLU kink can fall inside the step
    failed |= worst > 1e-4
    print(f"{'network':<11} max_rel_error={worst:.3e}")
    return EXIT_FAILURE if failed else EXIT_OK


COMMANDS = {
    "tables": cmd_tables,
    "gen": cmd_gen,
    "train": cmd_train,
    "transfer": cmd_transfer,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "reorient": cmd_reorient,
    "simulate": cmd_simulate,
    "gradcheck": cmd_gradcheck,
}


# ── Parser ───────────────────────────────────────────────────────────────────
def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    """Flags accepted before and after the subcommand.

    Subcommand copies use SUPPRESS defaults so they never overwrite a value
    given before the subcommand name.
    """
    flags = argparse.ArgumentParser(add_help=False)
    none = argparse.SUPPRESS if suppress else None
    zero = argparse.SUPPRESS if suppress else 0
    flags.add_argument("--seed", type=int, default=none, help="random seed for every stochastic step")
    flags.add_argument("--config", default=none, help="key=value file merged under explicit flags")
    flags.add_argument("-v", "--verbose", action="count", default=zero, help="more log output")
    flags.add_argument("-q", "--quiet", action="count", default=zero, help="less log output")
    return flags


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--data", required=True, help="directory written by 'gen'")
    training.add_argument("--out", required=True, help="checkpoint path (.or8w)")
    training.add_argument("--epochs", type=int, default=None)
    training.add_argument("--lr", type=float, default=None)
    training.add_argument("--batch", type=int, default=None)
    training.add_argument("--input-size", dest="input_size", type=int, default=None)
    training.add_argument("--modality", choices=MODALITIES, default=None)
    training.add_argument("--snapshots", default=None, help="directory for rolling epoch snapshots")

    parser = argparse.ArgumentParser(prog=APP_NAME, parents=[_global_flags(suppress=False)],
                                     description="Recognise and correct the orientation of cardiac MR slices.")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("tables", parents=[common], help="print the derived transform tables")

    p = sub.add_parser("gen", parents=[common], help="generate synthetic phantom volumes")
    p.add_argument("--patients", type=int, default=None)
    p.add_argument("--slices", type=int, default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--modality", choices=MODALITIES, default=None, help="default: all modalities")
    p.add_argument("--out", required=True)
    p.add_argument("--png", action="store_true", help="also write PNG previews")
    p.add_argument("--no-noise", dest="no_noise", action="store_true")

    p = sub.add_parser("train", parents=[common, training], help="train from scratch")
    p.add_argument("--fraction", type=float, default=None, help="share of training patients to use")

    p = sub.add_parser("transfer", parents=[common, training], help="fine-tune a checkpoint on another modality")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--freeze-conv", dest="freeze_conv", action="store_true", default=None)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=[m.value for m in Method], default=None)
    p.add_argument("--combine", choices=COMBINE_MODES, default=None)
    p.add_argument("--modality", choices=MODALITIES, default=None)
    p.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)
    p.add_argument("--report", default=None, help="CSV report path")

    p = sub.add_parser("sweep", parents=[common], help="training-fraction sensitivity sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--fractions", default=None, help="comma separated, e.g. 0.6,0.4,0.2")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to average")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--input-size", dest="input_size", type=int, default=None)

    p = sub.add_parser("reorient", parents=[common], help="write the upright version of an image")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--combine", choices=COMBINE_MODES, default=None)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo voting vs direct prediction")
    p.add_argument("--error-rate", dest="error_rate", type=float, default=0.2)
    p.add_argument("--trials", type=int, default=10_000)

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient checks")
    p.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    p.add_argument("--coords", type=int, default=100)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 for --help/--version
        return int(exc.code or 0)
    configure_logging(args.verbose - args.quiet)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        code = exit_code_for(exc)
        if code is None:
            raise
        print(f"error: {exc}", file=sys.stderr)
        logger.debug("details", exc_info=True)
        return code
