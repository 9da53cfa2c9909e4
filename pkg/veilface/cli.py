import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import torch
from pydantic import ValidationError

from veilface.client import VeilClient, VeilClientContextOpts, create_veil_client
from veilface.client.apis.protection import resolve_att_b
from veilface.data.datasets import FaceDataset, SyntheticFaceDataset
from veilface.data.ingest import ingest_dataset, load_index
from veilface.data.types import Split
from veilface.evaluation.report import similarity_rows, write_similarity_csv
from veilface.trainer.config import SEED_ENV, load_config
from veilface.trainer.types import ExperimentConfig
from veilface.utils.exceptions import (
    CheckpointIntegrityError,
    CheckpointVersionError,
    ConfigMismatchError,
    DatasetError,
    EmptySetError,
    InsufficientDataError,
    InvalidAttributeError,
    MissingComponentError,
    OverwriteRefusedError,
    StageDependencyError,
    VeilException,
)

logger = logging.getLogger("veilface")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEPENDENCY = 3

EXIT_CODES: list[tuple[tuple[type, ...], int]] = [
    ((ValidationError, ValueError, OverwriteRefusedError), EXIT_USAGE),
    (
        (DatasetError, EmptySetError, InsufficientDataError, InvalidAttributeError),
        EXIT_DATA,
    ),
    (
        (
            StageDependencyError,
            CheckpointVersionError,
            CheckpointIntegrityError,
            ConfigMismatchError,
            MissingComponentError,
        ),
        EXIT_DEPENDENCY,
    ),
]


def exit_code_for(error: BaseException) -> int:
    """Maps an exception to the command's exit status."""
    for kinds, code in EXIT_CODES:
        if isinstance(error, kinds):
            return code
    return EXIT_DEPENDENCY if isinstance(error, (VeilException, OSError)) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veilface",
        description="Erasable semantic face protection: train, protect, erase, score.",
    )
    parser.add_argument("--seed", type=int, default=None, help="overrides `seed`")
    parser.add_argument(
        "--force", action="store_true", help="allow overwriting outputs"
    )
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="index a directory of cropped faces")
    ingest.add_argument("--images", required=True, help="image directory")
    ingest.add_argument("--attributes", required=True, help="attribute CSV")
    ingest.add_argument("--out", required=True, help="index file to write")

    def with_config(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument(
            "--synthetic",
            action="store_true",
            help="use the synthetic toy faces instead of `dataset_index`",
        )
        return p

    calibrate = with_config(sub.add_parser("calibrate", help="calibrate thresholds"))
    calibrate.add_argument("--far-attack", type=float, default=None)
    calibrate.add_argument("--far-erasion", type=float, default=None)
    calibrate.add_argument("--split", default=Split.TEST.value)

    train = with_config(sub.add_parser("train", help="run the training curriculum"))
    train.add_argument("--stage", type=int, choices=[1, 2, 3], default=None)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--no-resume", action="store_true")
    train.add_argument("--progress", action="store_true")

    protect = sub.add_parser("protect", help="protect face images")
    protect.add_argument("--config", required=True)
    protect.add_argument("--checkpoint", required=True)
    protect.add_argument("--images", nargs="+", required=True)
    protect.add_argument(
        "--att-b",
        required=True,
        help='target attributes: a bit string, or "flip:<attr_name>"',
    )
    protect.add_argument("--out-dir", required=True)

    erase = sub.add_parser("erase", help="restore protected face images")
    erase.add_argument("--config", required=True)
    erase.add_argument("--checkpoint", required=True)
    erase.add_argument("--images", nargs="+", required=True)
    erase.add_argument("--out-dir", required=True)

    evaluate = with_config(sub.add_parser("evaluate", help="score a trained pipeline"))
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--out-report", required=True)
    evaluate.add_argument("--split", default=Split.TEST.value)
    evaluate.add_argument("--csv", default=None, help="per-image similarity CSV")
    evaluate.add_argument("--no-baselines", action="store_true")
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    env = dict(os.environ)
    if args.seed is not None:
        env[SEED_ENV] = str(args.seed)
    return load_config(args.config, env)


def _dataset(config: ExperimentConfig, split: str, synthetic: bool):
    if synthetic:
        return SyntheticFaceDataset(
            n_attributes=config.n_attributes,
            image_size=config.image_size,
            seed=config.seed,
        )
    if not config.dataset_index:
        raise MissingComponentError(
            "Set `dataset_index` in the config or pass --synthetic"
        )
    index = load_index(config.dataset_index)
    return FaceDataset(index, Split(split), config.image_size)


def _source_attributes(config: ExperimentConfig, image: str) -> Optional[list[int]]:
    if not config.dataset_index:
        return None
    name = Path(image).name
    for entry in load_index(config.dataset_index).entries:
        if Path(entry.file).name == name:
            return entry.attributes
    return None


def cmd_ingest(args: argparse.Namespace) -> int:
    index = ingest_dataset(
        args.images,
        args.attributes,
        out_index=args.out,
        seed=args.seed or 0,
        overwrite=args.force,
    )
    logger.info(f"indexed {len(index.entries)} images into {args.out}")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace, client: VeilClient) -> int:
    dataset = _dataset(client.context.config, args.split, args.synthetic)
    results = client.surrogates.calibrate(
        dataset, far_attack=args.far_attack, far_erasion=args.far_erasion
    )
    for model_id, (attack, erasion) in results.items():
        logger.info(
            f"{model_id}: tau_attack={attack.tau:.4f} tau_erasion={erasion.tau:.4f}"
        )
    return EXIT_OK


def cmd_train(args: argparse.Namespace, client: VeilClient) -> int:
    dataset = _dataset(client.context.config, Split.TRAIN.value, args.synthetic)
    path = client.training.train(
        dataset,
        stage=args.stage,
        epochs=args.epochs,
        resume=not args.no_resume,
        overwrite=args.force,
        progress=args.progress,
    )
    logger.info(f"wrote {path}")
    return EXIT_OK


def cmd_protect(args: argparse.Namespace, client: VeilClient) -> int:
    config = client.context.config
    pipeline = client.protection.load(args.checkpoint)
    names = config.attribute_names or [
        str(i) for i in range(pipeline.generator.config.n_attributes)
    ]
    att_b = [
        resolve_att_b(args.att_b, names, _source_attributes(config, image))
        for image in args.images
    ]
    client.protection.protect_files(args.images, att_b, args.out_dir, args.force)
    return EXIT_OK


def cmd_erase(args: argparse.Namespace, client: VeilClient) -> int:
    client.protection.load(args.checkpoint)
    client.protection.erase_files(args.images, args.out_dir, args.force)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, client: VeilClient) -> int:
    dataset = _dataset(client.context.config, args.split, args.synthetic)
    client.protection.load(args.checkpoint)
    report = client.evaluation.evaluate_dataset(
        dataset,
        out_report=args.out_report,
        baselines=not args.no_baselines,
        overwrite=args.force,
    )
    logger.info(
        f"evaluated {report.n} images: "
        + ", ".join(f"{k} asr={v.asr:.3f}" for k, v in report.rates.items())
    )
    if args.csv:
        x_cov, att_b = client.evaluation.dataset_inputs(dataset)
        x_adv = client.protection.protect(x_cov, att_b)
        rows = []
        for model in client.context.models:
            rows += similarity_rows(
                model, x_adv, dataset.image_ids(), client.context.x_target
            )
        write_similarity_csv(args.csv, rows, args.force)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "train": cmd_train,
    "protect": cmd_protect,
    "erase": cmd_erase,
    "evaluate": cmd_evaluate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the `veilface` command.

    Returns:
        int: 0 on success, 1 for usage errors, 2 for data errors and 3 for
        missing dependencies or broken checkpoints.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        config = _config(args)
        torch.manual_seed(config.seed)
        opts = VeilClientContextOpts(load_target=args.command != "erase")
        client = create_veil_client(config, opts)
        return COMMANDS[args.command](args, client)
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{type(e).__name__}: {getattr(e, 'message', e)}")
        return code


if __name__ == "__main__":
    sys.exit(main())
