"""
Metrics
=======

Labeling of a predicted triple set under the closed-world assumption (CWA) or the
relation-similarity partial open-world assumption (RS-POWA), and the four
triple-set-prediction metrics: JPrecision, STRecall, F_TSP and the ranking score RS_TSP.

Usage:
    from tspkit.metrics import evaluate
    from tspkit.config import AssumptionConfig, Assumption

    report = evaluate(predicted, split, AssumptionConfig(mode=Assumption.RS_POWA))
    print(report.model_dump_json(indent=2))
"""

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Sequence, Set, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel

from .config import Assumption, AssumptionConfig
from .errors import MetricError, UnknownIdentifierError
from .kg import DatasetSplit, Triple, as_triple_array

Pair = Tuple[int, int]

POSITIVE = 1
NEGATIVE = -1
UNKNOWN = 0


@dataclass(frozen=True)
class LabeledPrediction:
    """Predicted triples split into positives, negatives and unknowns (empty under CWA)."""
    positives: FrozenSet[Triple]
    negatives: FrozenSet[Triple]
    unknowns: FrozenSet[Triple] = frozenset()

    @property
    def n_predict(self) -> int:
        return len(self.positives) + len(self.negatives) + len(self.unknowns)

    @property
    def n_wa(self) -> int:
        return len(self.positives) + len(self.negatives)

    @property
    def n_wa_pos(self) -> int:
        return len(self.positives)

    def label_of(self, triple) -> int:
        triple = tuple(triple)
        if triple in self.positives:
            return POSITIVE
        if triple in self.negatives:
            return NEGATIVE
        return UNKNOWN


class EvaluationReport(BaseModel):
    n_predict: int
    n_wa: int
    n_wa_pos: int
    jprecision: float
    strecall: float
    f_tsp: float
    rs_tsp: float
    assumption: Assumption
    theta: float


def ordered_triples(predict) -> List[Triple]:
    """Triples of a PredictedTripleSet (score order) or of any iterable of triples."""
    if hasattr(predict, "triples"):
        return list(predict.triples())
    return [tuple(t) for t in as_triple_array(list(predict)).tolist()]


def relation_pairs(triples, n_relations: int) -> Dict[int, FrozenSet[Pair]]:
    """Entity pairs linked by each relation; every relation id gets an entry."""
    pairs: Dict[int, Set[Pair]] = {r: set() for r in range(n_relations)}
    for h, r, t in as_triple_array(triples).tolist():
        pairs[r].add((h, t))
    return {r: frozenset(p) for r, p in pairs.items()}


def relation_similarity(pairs_by_relation: Mapping[int, FrozenSet[Pair]], r: int, r2: int) -> float:
    """
    Overlap of the entity pairs of two relations, normalized by the smaller set.

    Raises:
        UnknownIdentifierError: If either relation id is not in ``pairs_by_relation``
    """
    try:
        first, second = pairs_by_relation[r], pairs_by_relation[r2]
    except KeyError as e:
        raise UnknownIdentifierError(f"unknown relation id {e.args[0]}") from None
    if not first or not second:
        return 0.0
    shared = len(first & second)
    return max(shared / len(first), shared / len(second))


def label_predictions(predict, split: DatasetSplit, cfg: AssumptionConfig) -> LabeledPrediction:
    """
    Label predicted triples against the test set.

    Under RS-POWA a non-test triple (h, r, t) is negative when some other relation
    r' already links h to t in train or test with similarity below the threshold;
    otherwise it is unknown.
    """
    triples = ordered_triples(predict)
    test = split.test_set
    positives = {t for t in triples if t in test}
    rest = [t for t in triples if t not in test]

    if cfg.mode == Assumption.CWA:
        return LabeledPrediction(frozenset(positives), frozenset(rest), frozenset())

    known = np.concatenate([split.train.triples, split.test])
    pairs_by_relation = relation_pairs(known, split.train.n_relations)
    pair_relations: Dict[Pair, Set[int]] = {}
    for h, r, t in known.tolist():
        pair_relations.setdefault((h, t), set()).add(r)

    similarity: Dict[Tuple[int, int], float] = {}
    negatives, unknowns = set(), set()
    for h, r, t in rest:
        is_negative = False
        for other in pair_relations.get((h, t), ()):
            if other == r:
                continue
            key = (min(r, other), max(r, other))
            if key not in similarity:
                similarity[key] = relation_similarity(pairs_by_relation, r, other)
            if similarity[key] < cfg.similarity_threshold:
                is_negative = True
                break
        (negatives if is_negative else unknowns).add((h, r, t))

    return LabeledPrediction(frozenset(positives), frozenset(negatives), frozenset(unknowns))


def jprecision(label: LabeledPrediction) -> float:
    """Mean of precision over recognized triples and precision over all predictions."""
    if label.n_predict == 0 or label.n_wa == 0:
        return 0.0
    return 0.5 * (label.n_wa_pos / label.n_wa + label.n_wa_pos / label.n_predict)


def strecall(label: LabeledPrediction, test_size: int) -> float:
    """
    Square-rooted recall over the test set.

    Raises:
        MetricError: If the test set is empty
    """
    if test_size <= 0:
        raise MetricError("strecall needs a non-empty test set")
    return math.sqrt(label.n_wa_pos / test_size)


def f_tsp(jp: float, sr: float) -> float:
    if jp + sr == 0:
        return 0.0
    return 2.0 * jp * sr / (jp + sr)


def rs_tsp(ordered_predict: Sequence, label: LabeledPrediction) -> float:
    """+1/rank for positives, -1/rank for negatives; unknowns keep their rank."""
    terms = []
    for rank, triple in enumerate(ordered_predict, start=1):
        sign = label.label_of(triple)
        if sign:
            terms.append(sign / rank)
    return math.fsum(terms)


def evaluate(predict, split: DatasetSplit, cfg: AssumptionConfig) -> EvaluationReport:
    """Label a prediction and compute all metrics."""
    ordered = ordered_triples(predict)
    label = label_predictions(ordered, split, cfg)
    jp = jprecision(label)
    sr = strecall(label, len(split.test))
    report = EvaluationReport(
        n_predict=label.n_predict,
        n_wa=label.n_wa,
        n_wa_pos=label.n_wa_pos,
        jprecision=jp,
        strecall=sr,
        f_tsp=f_tsp(jp, sr),
        rs_tsp=rs_tsp(ordered, label),
        assumption=cfg.mode,
        theta=cfg.similarity_threshold,
    )
    logger.info(
        f"✓ {cfg.mode.value.upper()}: JPrecision={report.jprecision:.4f} "
        f"STRecall={report.strecall:.4f} F_TSP={report.f_tsp:.4f} RS_TSP={report.rs_tsp:.4f} "
        f"({report.n_wa_pos}/{report.n_wa}/{report.n_predict})"
    )
    return report


def sample_random_prediction(split: DatasetSplit, size: int, rng: np.random.Generator) -> List[Triple]:
    """Uniformly random non-training triples, the reference point for a trivial predictor."""
    kg = split.train
    n_candidates = kg.n_entities * kg.n_relations * kg.n_entities - len(kg)
    size = min(size, n_candidates)
    chosen: Set[Triple] = set()
    while len(chosen) < size:
        draw = np.column_stack([
            rng.integers(kg.n_entities, size=size),
            rng.integers(kg.n_relations, size=size),
            rng.integers(kg.n_entities, size=size),
        ])
        draw = draw[~kg.contains_many(draw)]
        for triple in map(tuple, draw.tolist()):
            if len(chosen) == size:
                break
            chosen.add(triple)
    return sorted(chosen)
