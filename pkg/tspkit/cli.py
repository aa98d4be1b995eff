"""
Command Line
============

``tspkit <command>``: every command reads a dataset directory and writes its
artifact plus ``manifest_<command>.json`` into ``--out``.

Usage:
    tspkit datagen --out data/family --seed 7
    tspkit partition --dataset data/family --out runs/family
    tspkit train kge --dataset data/family --out runs/family --model hake
    tspkit predict gpht --dataset data/family --out runs/family --theta-ht 0.3
    tspkit evaluate cwa --dataset data/family --out runs/family

Exit codes: 0 success, 1 failed command or missing prerequisite, 2 invalid
configuration, 130 interrupted.
"""

import argparse
import asyncio
import sys
from typing import Any, Dict, List, Optional

import torch
from loguru import logger

from .config import SWEEP_VALUES, VERSION, RunConfig, load_run_config
from .errors import ConfigError, MissingArtifactError
from .log import setup_logging
from .store import ChainStore, JsonStore, MemoryStore, RunManifest
from .task import (
    METHODS,
    DatagenTask,
    EvaluateTask,
    PartitionTask,
    PredictTask,
    RunPipelineTask,
    SweepTask,
    TrainHtemTask,
    TrainKgeTask,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTERRUPTED = 130

EPILOG = """
Examples:
  # Generate a family dataset (~2,000 people)
  tspkit datagen --out data/family --seed 7

  # Full pipeline on generated data, evaluated under both assumptions
  tspkit run --out runs/family --seed 7

  # Step by step
  tspkit partition --dataset data/family --out runs/family
  tspkit train kge --dataset data/family --out runs/family --model pairre --dim 200
  tspkit train htem --dataset data/family --out runs/family --model pairre
  tspkit predict gpht --dataset data/family --out runs/family --model pairre --theta-hrt 10
  tspkit evaluate powa --dataset data/family --out runs/family --theta-sim 0.8

  # Baselines and threshold sweeps
  tspkit predict ruletensor --dataset data/family --out runs/family --theta-conf 0.85
  tspkit sweep theta-hrt --dataset data/family --out runs/family --values 5 1 0.5

  # Settings from a key=value file, flags take precedence
  tspkit run --config config_template.env --threads 4

Log verbosity: TSPKIT_LOG=error|warn|info|debug
"""

# (flag, RunConfig field, type, help)
VALUE_FLAGS = [
    ('--dataset', 'dataset', str, 'Dataset directory with train.txt, valid.txt and test.txt'),
    ('--out', 'out', str, 'Output directory for artifacts and manifests (default: output)'),
    ('--seed', 'seed', int, 'Root random seed (default: 0)'),
    ('--threads', 'threads', int, 'Worker thread cap (default: 1)'),
    ('--theta-ht', 'theta_ht', float, 'Pair threshold in [0, 1]'),
    ('--theta-hrt', 'theta_hrt', float, 'GPHT relation threshold, divided by the candidate count'),
    ('--theta-kge', 'theta_kge', float, 'KGE-TSP threshold, divided by the candidate-space size'),
    ('--theta-conf', 'theta_conf', float, 'Minimum rule confidence'),
    ('--theta-hc', 'theta_hc', float, 'Minimum rule head coverage'),
    ('--theta-sim', 'theta_sim', float, 'RS-POWA relation similarity threshold'),
    ('--dim', 'dim', int, 'Embedding dimension (default: 500)'),
    ('--lr', 'lr', float, 'Embedding learning rate (default: 0.001)'),
    ('--epochs', 'epochs', int, 'Embedding training epochs'),
    ('--htem-dim', 'htem_dim', int, 'Head-tail model dimension'),
    ('--htem-lr', 'htem_lr', float, 'Head-tail model learning rate (default: 3e-5)'),
    ('--htem-passes', 'htem_passes', int, 'Passes over the subgraphs'),
    ('--hops', 'hops', int, 'Neighborhood hops'),
    ('--nmin', 'nmin', int, 'Minimum subgraph size'),
    ('--nmax', 'nmax', int, 'Maximum subgraph size'),
    ('--max-iter', 'max_iter', int, 'Rule inference iterations (default: 40)'),
    ('--n-people', 'n_people', int, 'People to generate'),
    ('--n-families', 'n_families', int, 'Families to generate'),
]


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--config', type=str, default=None, help='key=value settings file')
    for flag, dest, kind, text in VALUE_FLAGS:
        parent.add_argument(flag, dest=dest, type=kind, default=None, help=text)

    parent.add_argument('--model', choices=['hake', 'pairre'], default=None, help='Embedding model (default: hake)')
    parent.add_argument(
        '--normalization', choices=['pair', 'global'], default=None,
        help='Relation softmax per pair (default) or over all candidates'
    )
    parent.add_argument(
        '--no-entity-attn', dest='entity_attn', action='store_const', const=False, default=None,
        help='Disable entity attention in the pair decoder'
    )
    parent.add_argument(
        '--no-relation-attn', dest='relation_attn', action='store_const', const=False, default=None,
        help='Disable relation attention in the pair decoder'
    )
    parent.add_argument(
        '--use-valid', dest='use_valid', action='store_const', const=True, default=None,
        help='Let valid triples join the training graph'
    )
    parent.add_argument(
        '--adversarial-grad', dest='adversarial_grad', action='store_const', const=True, default=None,
        help='Backpropagate through the self-adversarial weights'
    )
    parent.add_argument(
        '--drop-reflexive', dest='drop_reflexive', action='store_const', const=True, default=None,
        help='Never infer (e, r, e) triples from rules'
    )
    parent.add_argument(
        '--progress', dest='progress', action='store_const', const=True, default=None,
        help='Show progress bars'
    )
    parent.add_argument('--log-file', type=str, default=None, help='Also log to this file at debug level')
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tspkit',
        description="Triple set prediction: datasets, partitioning, models, prediction and evaluation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {VERSION}')
    commands = parser.add_subparsers(dest='command', required=True)
    common = _common_options()

    commands.add_parser('datagen', parents=[common], help='Generate a family dataset')
    commands.add_parser('partition', parents=[common], help='Partition the training graph')

    train = commands.add_parser('train', parents=[common], help='Train a model')
    train.add_argument('target', choices=['kge', 'htem'])

    predict = commands.add_parser('predict', parents=[common], help='Predict a triple set')
    predict.add_argument('method', choices=list(METHODS))

    evaluate = commands.add_parser('evaluate', parents=[common], help='Evaluate a prediction file')
    evaluate.add_argument('mode', choices=['cwa', 'powa'])
    evaluate.add_argument(
        '--predictions', type=str, default=None,
        help='Prediction file (default: <out>/predictions_gpht.tsv)'
    )

    sweep = commands.add_parser('sweep', parents=[common], help='Evaluate a range of threshold values')
    sweep.add_argument('parameter', choices=list(SWEEP_VALUES))
    sweep.add_argument('--values', type=float, nargs='+', default=None, help='Threshold values to try')

    commands.add_parser('run', parents=[common], help='Full pipeline, generating data when --dataset is absent')
    return parser


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    names = [dest for _, dest, _, _ in VALUE_FLAGS] + [
        'model', 'normalization', 'entity_attn', 'relation_attn', 'use_valid', 'adversarial_grad',
        'drop_reflexive', 'progress'
    ]
    overrides = {name: getattr(args, name) for name in names}
    overrides['command'] = args.command
    return overrides


def build_task(args: argparse.Namespace, config: RunConfig, store):
    if args.command == 'datagen':
        return DatagenTask(config, store=store)
    if args.command == 'partition':
        return PartitionTask(config, store=store)
    if args.command == 'train':
        return (TrainKgeTask if args.target == 'kge' else TrainHtemTask)(config, store=store)
    if args.command == 'predict':
        return PredictTask(config, args.method, store=store)
    if args.command == 'evaluate':
        return EvaluateTask(config, args.mode, args.predictions, store=store)
    if args.command == 'sweep':
        return SweepTask(config, args.parameter, values=args.values, store=store)
    return RunPipelineTask(config, store=store)


def log_run_summary(records: MemoryStore):
    """One line per command finished in this invocation, in completion order."""
    manifests = records.get_alldata(RunManifest)
    if len(manifests) < 2:
        return
    logger.info(f"Run summary ({len(manifests)} commands):")
    for manifest in manifests:
        seconds = manifest.timings.get("total", 0.0)
        logger.info(f"  {manifest.key_command:<18} {manifest.key_artifact} ({seconds:.1f}s)")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(log_file=args.log_file)

    try:
        config = load_run_config(args.config, config_overrides(args))
    except ConfigError as e:
        logger.error(f"✗ {e}")
        return EXIT_CONFIG

    torch.set_num_threads(config.threads)
    records = MemoryStore()
    task = build_task(args, config, ChainStore(records, JsonStore(config.out)))

    try:
        ok = asyncio.run(task.run(progress=True))
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_INTERRUPTED

    log_run_summary(records)
    if ok:
        return EXIT_OK
    if isinstance(task.error, MissingArtifactError):
        logger.error(f"✗ Missing prerequisite: {task.error.path}")
        logger.info(f"  Hint: {task.error.hint}")
    elif isinstance(task.error, ConfigError):
        return EXIT_CONFIG
    return EXIT_FAILED


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
