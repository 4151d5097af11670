"""Python access to the ProLoNet toolkit."""

import json

from ._prolonet import InvalidInput, leaf_entropy, mistake_cap
from . import _prolonet as _ext

__all__ = [
    "InvalidInput",
    "compile_request",
    "compile_source",
    "evaluate",
    "forward",
    "leaf_entropy",
    "mistake_cap",
    "train",
    "vocabulary",
]


def compile_source(domain, source):
    return json.loads(_ext.compile_source(domain, source))


def compile_request(body):
    status, text = _ext.compile_request(json.dumps(body))
    return status, json.loads(text)


def forward(model, x):
    if not isinstance(model, str):
        model = json.dumps(model)
    raw, probs = _ext.forward(model, list(x))
    return raw, probs


def evaluate(domain, agent="heuristic", episodes=10, seed=0, tree_source="", model=None):
    model_text = json.dumps(model) if model is not None else ""
    return json.loads(_ext.evaluate(domain, agent, episodes, seed, tree_source, model_text))


def train(config, out_dir=""):
    return json.loads(_ext.train(json.dumps(config), str(out_dir)))


def vocabulary(domain):
    return json.loads(_ext.vocabulary(domain))
