"""Builders for the models shipped in ``fgqmf/data/models``.

Run ``python -m fgqmf.catalog DIR`` to regenerate the files.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import gates
from .graph import FactorGraph
from .measure import kappa_graph, one_shot_family, random_family, undo_graph
from .modelfile import dump_model
from .models import (
    classicable_example,
    elementary_system,
    fr_model,
    fr_table1_graph,
    fr_table2_graph,
    separation_example,
)
from .tensor import NamedTensor

__all__ = ["CATALOG", "broken_model", "minimal_model", "write_catalog"]


def minimal_model() -> FactorGraph:
    """One variable pair joined by a builtin equality factor."""
    g = FactorGraph("minimal")
    g.add_pair("X", 2)
    g.add_gate("eq", "f_eq", ["X", "X'"], kind="equality", n=2, M=2)
    return g


def broken_model() -> FactorGraph:
    """A single non-Hermitian kernel over ``(X, X')``: certification must fail."""
    g = FactorGraph("broken")
    g.add_pair("X", 2)
    g.add_factor("q", NamedTensor(["X", "X'"], np.array([[0.5, 0.3], [0.0, 0.5]])))
    g.measurements = ["X"]
    return g


def _elementary() -> FactorGraph:
    th = 0.3
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    return elementary_system([0.75, 0.25], gates.hadamard(), rot, np.eye(2))


def _cnot_undo() -> FactorGraph:
    return undo_graph(gates.cnot(2).reshape(4, 4), [1.0, 0.0], refeed=True)


CATALOG: dict[str, Callable[[], FactorGraph]] = {
    "minimal": minimal_model,
    "broken": broken_model,
    "elementary": _elementary,
    "classicable-uniform": lambda: classicable_example([0.5, 0.5], gates.hadamard(), gates.hadamard()),
    "classicable-skewed": lambda: classicable_example([0.7, 0.3], gates.hadamard(), gates.hadamard()),
    "kappa-one-shot": lambda: kappa_graph(one_shot_family(3)),
    "kappa-random": lambda: kappa_graph(random_family(3, 2, np.random.default_rng(7))),
    "cnot-undo": _cnot_undo,
    "separation": lambda: separation_example(False),
    "separation-violated": lambda: separation_example(True),
    "fr": lambda: fr_model().graph,
    "fr-agent-F": lambda: fr_model().agent_F,
    "fr-agent-Wbar": lambda: fr_model().agent_Wbar,
    "fr-agent-W": lambda: fr_model().agent_W,
    "table1": lambda: fr_table1_graph(),
    "table2": lambda: fr_table2_graph(),
}


def write_catalog(directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for name, build in CATALOG.items():
        p = d / f"{name}.model.json"
        dump_model(build(), p)
        out.append(p)
    return out


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data" / "models"
    for p in write_catalog(target):
        print(p)
