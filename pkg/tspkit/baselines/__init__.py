"""
Baselines
=========

RuleTensor-TSP (random-walk rule mining with sparse fixpoint inference) and
KGE-TSP (exhaustive two-pass softmax scoring).
"""

from .kge_tsp import StreamingLogSumExp, candidate_scores, kge_tsp_predict, log_normalizer
from .rules import (
    RelationMatrices,
    Rule,
    binarize,
    build_relation_matrices,
    load_rules,
    mine_rules,
    rule_inference,
    rule_quality,
    ruletensor_predict,
    sample_rules,
    save_rules,
)

BASELINES = {
    "ruletensor": ruletensor_predict,
    "kgetsp": kge_tsp_predict,
}

__all__ = [
    'BASELINES',
    'StreamingLogSumExp',
    'candidate_scores',
    'kge_tsp_predict',
    'log_normalizer',
    'RelationMatrices',
    'Rule',
    'binarize',
    'build_relation_matrices',
    'load_rules',
    'mine_rules',
    'rule_inference',
    'rule_quality',
    'ruletensor_predict',
    'sample_rules',
    'save_rules',
]
