import json

from ._core import (
    ConfigError,
    DataError,
    Error,
    cosine,
    positive_bias,
    select_source,
    smote,
    stratified_kfold,
    synth_data,
    train_skipgram,
)
from ._core import evaluate as _evaluate


def evaluate(config, users, reviews, manual=None, stopwords=None, r=500, dimension=100, seed=1):
    """Run one k-fold experiment and return the report as a dict."""
    text = _evaluate(json.dumps(config), str(users), str(reviews),
                     None if manual is None else str(manual),
                     None if stopwords is None else str(stopwords), r, dimension, seed)
    return json.loads(text)


__all__ = [
    "ConfigError", "DataError", "Error", "cosine", "evaluate", "positive_bias",
    "select_source", "smote", "stratified_kfold", "synth_data", "train_skipgram",
]
