"""
Configuration for tspkit
========================

Experimental defaults, validated parameter models and configuration layering.

Precedence: built-in defaults < key=value config file < command-line flags.

Usage:
    from tspkit.config import load_run_config

    config = load_run_config("run.env", overrides={"theta_hrt": 0.5})
    params = config.partition_params()
"""

import zlib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

# Embedding models
DEFAULT_MODEL = "hake"
DEFAULT_DIM = 500
KGE_LEARNING_RATE = 0.001
KGE_EPOCHS = 200
KGE_BATCH_SIZE = 512
KGE_NEGATIVES = 16
ADVERSARIAL_TEMPERATURE = 1.0
HAKE_PHASE_WEIGHT = 0.5
PAIRRE_NORM = 1
LR_DECAY_FACTOR = 0.8
LR_DECAY_PATIENCE = 5
KGE_EVAL_EVERY = 10

# Head-tail entity modeling
HTEM_DIM = 96
HTEM_LEARNING_RATE = 3e-5
HTEM_PASSES = 100
HTEM_EVAL_EVERY = 10
QUERY_FRACTION = 0.2
NEGATIVE_PAIR_RATIO = 1
N_BASES = 4
N_LAYERS = 1
MLP_HIDDEN = 64
MLP_LAYERS = 2
DROPOUT = 0.1
LEAKY_SLOPE = 0.01

# Graph partition
HOPS = 2
N_MIN = 30
N_MAX = 150
CANDIDATES_PER_DRAW = 20

# Thresholds
THETA_SIM = 0.8
THETA_HT = 0.3
THETA_HRT = 2.0
THETA_KGE = 5000.0
THETA_CONF = 0.85
THETA_HC = 0.05

# Rule baseline
RULE_LENGTH = 3
RULE_WALKS = 20000
MAX_ITER = 40
STOP_RATIO = 0.2

# Synthetic family data
N_PEOPLE = 2378
N_FAMILIES = 24
TRAIN_RATIO = 0.72
VALID_RATIO = 0.08
TEST_RATIO = 0.20

DEFAULT_OUTPUT = "output"
VERSION = "0.1.0"

# Threshold sweeps
SWEEP_VALUES = {
    "theta-hrt": {"hake": (5, 3, 1, 0.5, 0.1, 0.05, 0.01), "pairre": (100, 50, 30, 20, 10, 5, 1)},
    "theta-ht": (0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4),
    "theta-kge": (1000, 2000, 5000, 10000, 20000),
}


KgeKind = Literal["hake", "pairre"]


class Assumption(str, Enum):
    CWA = "cwa"
    RS_POWA = "powa"


class _Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", protected_namespaces=())


class AssumptionConfig(_Params):
    """Labeling assumption used by evaluation."""
    mode: Assumption = Assumption.CWA
    similarity_threshold: float = Field(THETA_SIM, ge=0.0, le=1.0)


class PartitionParams(_Params):
    """
    Inputs of the soft vertex-cut partition.

    Attributes:
        hops: Neighborhood depth L
        n_min: Minimum group size (a draw must be strictly larger)
        n_max: Maximum size of merged small components
        candidates_per_draw: Draws per grouping step; the most balanced is kept
        seed: RNG seed
        force_full_expansion: Test hook forcing every hop probability to 1
    """
    hops: int = Field(HOPS, ge=1)
    n_min: int = Field(N_MIN, gt=0)
    n_max: int = Field(N_MAX, gt=0)
    candidates_per_draw: int = Field(CANDIDATES_PER_DRAW, ge=1)
    seed: int = 0
    force_full_expansion: bool = False

    @model_validator(mode="after")
    def _check_sizes(self):
        if self.n_min >= self.n_max:
            raise ValueError(f"n_min ({self.n_min}) must be smaller than n_max ({self.n_max})")
        return self

    @property
    def target_size(self) -> float:
        return (self.n_min + self.n_max) / 2


class SplitRatios(_Params):
    """Train/valid/test fractions; ratios of 0 are accepted (everything to train)."""
    train: float = Field(TRAIN_RATIO, ge=0.0, le=1.0)
    valid: float = Field(VALID_RATIO, ge=0.0, le=1.0)
    test: float = Field(TEST_RATIO, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_sum(self):
        if abs(self.train + self.valid + self.test - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        return self


class KgeTrainConfig(_Params):
    """Hyperparameters of HAKE / PairRE training."""
    kind: KgeKind = DEFAULT_MODEL
    dim: int = Field(DEFAULT_DIM, ge=1)
    lr: float = Field(KGE_LEARNING_RATE, gt=0.0)
    epochs: int = Field(KGE_EPOCHS, ge=1)
    batch_size: int = Field(KGE_BATCH_SIZE, ge=1)
    negatives: int = Field(KGE_NEGATIVES, ge=1)
    alpha: float = Field(ADVERSARIAL_TEMPERATURE, ge=0.0)
    lam: float = Field(HAKE_PHASE_WEIGHT, ge=0.0)
    norm_p: Literal[1, 2] = PAIRRE_NORM
    decay_factor: float = Field(LR_DECAY_FACTOR, gt=0.0, le=1.0)
    decay_patience: int = Field(LR_DECAY_PATIENCE, ge=0)
    eval_every: int = Field(KGE_EVAL_EVERY, ge=1)
    optimizer: Literal["adam", "sgd"] = "adam"
    adversarial_grad: bool = False
    max_retries: int = Field(100, ge=1)
    valid_limit: int = Field(2000, ge=1)
    seed: int = 0
    progress: bool = False


class HtemTrainConfig(_Params):
    """Hyperparameters of the head-tail entity model."""
    kind: KgeKind = DEFAULT_MODEL
    dim: int = Field(HTEM_DIM, ge=1)
    lr: float = Field(HTEM_LEARNING_RATE, gt=0.0)
    passes: int = Field(HTEM_PASSES, ge=1)
    eval_every: int = Field(HTEM_EVAL_EVERY, ge=1)
    query_fraction: float = Field(QUERY_FRACTION, gt=0.0, lt=1.0)
    negative_ratio: float = Field(NEGATIVE_PAIR_RATIO, ge=0.0)
    n_bases: int = Field(N_BASES, ge=1)
    n_layers: int = Field(N_LAYERS, ge=0)
    hidden: int = Field(MLP_HIDDEN, ge=1)
    mlp_layers: int = Field(MLP_LAYERS, ge=1)
    dropout: float = Field(DROPOUT, ge=0.0, lt=1.0)
    slope: float = Field(LEAKY_SLOPE, ge=0.0)
    composition: Literal["sub", "mult"] = "sub"
    entity_attention: bool = True
    relation_attention: bool = True
    lam: float = Field(HAKE_PHASE_WEIGHT, ge=0.0)
    seed: int = 0
    progress: bool = False

    @model_validator(mode="after")
    def _check_split(self):
        parts = 3 if self.kind == "hake" else 2
        if self.dim % parts:
            raise ValueError(f"{self.kind} decoder needs dim divisible by {parts}, got {self.dim}")
        return self


class RunConfig(_Params):
    """
    Every setting of a command-line run.

    Defaults follow the published experimental settings where those exist.
    """
    command: Optional[str] = None
    dataset: Optional[Path] = None
    out: Path = Path(DEFAULT_OUTPUT)
    seed: int = 0
    threads: int = Field(1, ge=1)

    model: KgeKind = DEFAULT_MODEL
    theta_sim: float = Field(THETA_SIM, ge=0.0, le=1.0)
    theta_ht: float = Field(THETA_HT, ge=0.0, le=1.0)
    theta_hrt: float = Field(THETA_HRT, gt=0.0)
    theta_kge: float = Field(THETA_KGE, gt=0.0)
    theta_conf: float = Field(THETA_CONF, ge=0.0, le=1.0)
    theta_hc: float = Field(THETA_HC, ge=0.0, le=1.0)
    normalization: Literal["pair", "global"] = "pair"

    hops: int = Field(HOPS, ge=1)
    nmin: int = Field(N_MIN, gt=0)
    nmax: int = Field(N_MAX, gt=0)
    candidates: int = Field(CANDIDATES_PER_DRAW, ge=1)

    dim: int = Field(DEFAULT_DIM, ge=1)
    lr: float = Field(KGE_LEARNING_RATE, gt=0.0)
    epochs: int = Field(KGE_EPOCHS, ge=1)
    batch_size: int = Field(KGE_BATCH_SIZE, ge=1)
    negatives: int = Field(KGE_NEGATIVES, ge=1)
    alpha: float = Field(ADVERSARIAL_TEMPERATURE, ge=0.0)
    lam: float = Field(HAKE_PHASE_WEIGHT, ge=0.0)
    norm_p: Literal[1, 2] = PAIRRE_NORM
    optimizer: Literal["adam", "sgd"] = "adam"
    adversarial_grad: bool = False
    use_valid: bool = False

    htem_dim: int = Field(HTEM_DIM, ge=1)
    htem_lr: float = Field(HTEM_LEARNING_RATE, gt=0.0)
    htem_passes: int = Field(HTEM_PASSES, ge=1)
    query_fraction: float = Field(QUERY_FRACTION, gt=0.0, lt=1.0)
    entity_attn: bool = True
    relation_attn: bool = True

    rule_length: int = Field(RULE_LENGTH, ge=1)
    rule_walks: int = Field(RULE_WALKS, ge=1)
    max_iter: int = Field(MAX_ITER, ge=1)
    stop_ratio: float = Field(STOP_RATIO, ge=0.0, le=1.0)
    drop_reflexive: bool = False

    n_people: int = Field(N_PEOPLE, ge=4)
    n_families: int = Field(N_FAMILIES, ge=1)
    valid_ratio: float = Field(VALID_RATIO, ge=0.0, le=1.0)
    test_ratio: float = Field(TEST_RATIO, ge=0.0, le=1.0)

    progress: bool = False

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.nmin >= self.nmax:
            raise ValueError(f"nmin ({self.nmin}) must be smaller than nmax ({self.nmax})")
        if self.valid_ratio + self.test_ratio > 1.0:
            raise ValueError("valid_ratio + test_ratio exceeds 1")
        parts = 3 if self.model == "hake" else 2
        if self.htem_dim % parts:
            raise ValueError(f"htem_dim must be divisible by {parts} for {self.model}")
        return self

    def module_seed(self, module: str) -> int:
        return derive_seed(self.seed, module)

    def partition_params(self) -> PartitionParams:
        return PartitionParams(
            hops=self.hops,
            n_min=self.nmin,
            n_max=self.nmax,
            candidates_per_draw=self.candidates,
            seed=self.module_seed("partition"),
        )

    def kge_config(self) -> KgeTrainConfig:
        return KgeTrainConfig(
            kind=self.model,
            dim=self.dim,
            lr=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            negatives=self.negatives,
            alpha=self.alpha,
            lam=self.lam,
            norm_p=self.norm_p,
            optimizer=self.optimizer,
            adversarial_grad=self.adversarial_grad,
            seed=self.module_seed("kge"),
            progress=self.progress,
        )

    def htem_config(self) -> HtemTrainConfig:
        return HtemTrainConfig(
            kind=self.model,
            dim=self.htem_dim,
            lr=self.htem_lr,
            passes=self.htem_passes,
            query_fraction=self.query_fraction,
            entity_attention=self.entity_attn,
            relation_attention=self.relation_attn,
            lam=self.lam,
            seed=self.module_seed("htem"),
            progress=self.progress,
        )

    def assumption(self, mode: Union[str, Assumption]) -> AssumptionConfig:
        return AssumptionConfig(mode=Assumption(mode), similarity_threshold=self.theta_sim)

    def split_ratios(self) -> SplitRatios:
        return SplitRatios(
            train=1.0 - self.valid_ratio - self.test_ratio,
            valid=self.valid_ratio,
            test=self.test_ratio,
        )

    def to_manifest(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def derive_seed(root_seed: int, module: str) -> int:
    """Split the root seed into an independent, stable per-module seed."""
    sequence = np.random.SeedSequence([root_seed, zlib.crc32(module.encode("utf-8"))])
    return int(sequence.generate_state(1)[0])


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Read a line-oriented key=value file.

    Raises:
        ConfigError: If the file is missing or names an unknown key
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    values = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lower().replace("-", "_")
        if name not in RunConfig.model_fields:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        if value is not None:
            values[name] = value
    return values


def load_run_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional config file and overrides.

    Args:
        config_file: key=value file (python-dotenv syntax)
        overrides: Values taking precedence over the file; None values are ignored

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(read_config_file(config_file))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from e
