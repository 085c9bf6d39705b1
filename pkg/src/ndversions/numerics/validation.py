"""The shipped quadrature validation corpus: integrals with closed-form or high-precision truths."""

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

_NAMES = {"np": np, "pi": math.pi, "inf": math.inf, "__builtins__": {}}


def _expr(text, var):
    code = compile(str(text), "<corpus>", "eval")
    return lambda x: eval(code, _NAMES, {var: x})


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    integrand: Callable
    a: float
    b: float
    truth: float
    endpoint_eps: float | None = None
    tail_bound: Callable | None = None


def load_corpus():
    """Entries of ``data/quadrature_corpus.json`` with the integrands compiled to numpy callables."""
    raw = json.loads(resources.files(__package__).joinpath("data/quadrature_corpus.json").read_text())
    entries = []
    for row in raw:
        entries.append(CorpusEntry(
            row["id"],
            _expr(row["integrand"], "t"),
            float(_expr(row["a"], "_")(None)),
            float(_expr(row["b"], "_")(None)),
            float(row["truth"]),
            row["endpoint_eps"],
            _expr(row["tail_bound"], "T") if row["tail_bound"] else None,
        ))
    return entries
