"""The three base recommenders: content-based, user-based CF, association rules."""

from .cf import (
    IMPLICIT_RATINGS,
    Neighborhood,
    RatingMatrix,
    UnknownUserError,
    build_neighborhood,
    cosine_sim,
    pearson_sim,
    predict_all,
    predict_cf,
    recommend_cf,
)
from .content import recommend_content, score_content
from .rules import (
    AssociationRule,
    frequent_itemsets,
    mine_rules,
    recommend_rules,
    rules_from_csv,
    rules_to_csv,
)
from .scored import ScoredItem, rank

__all__ = [
    "AssociationRule",
    "IMPLICIT_RATINGS",
    "Neighborhood",
    "RatingMatrix",
    "ScoredItem",
    "UnknownUserError",
    "build_neighborhood",
    "cosine_sim",
    "frequent_itemsets",
    "mine_rules",
    "pearson_sim",
    "predict_all",
    "predict_cf",
    "rank",
    "recommend_cf",
    "recommend_content",
    "recommend_rules",
    "rules_from_csv",
    "rules_to_csv",
    "score_content",
]
