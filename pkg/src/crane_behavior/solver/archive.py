"""Matrix archive for handing problems to other solvers.

An archive is a NumPy ``.npz`` file with the arrays ``P``, ``q``, ``A_eq``,
``b_eq``, ``A_in`` and ``b_in``, and the scalars ``lam`` and ``offset``. The problem
it stores is the one documented in :mod:`crane_behavior.solver.problem`.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .problem import CompositeQP

ARCHIVE_KEYS = ("P", "q", "lam", "A_eq", "b_eq", "A_in", "b_in", "offset")


def save_problem(problem: CompositeQP, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        np.savez_compressed(
            handle,
            P=problem.P,
            q=problem.q,
            lam=np.array(problem.lam),
            A_eq=problem.A_eq,
            b_eq=problem.b_eq,
            A_in=problem.A_in,
            b_in=problem.b_in,
            offset=np.array(problem.offset),
        )
    return path


def load_problem(path: Path) -> CompositeQP:
    with np.load(Path(path)) as archive:
        missing = [key for key in ARCHIVE_KEYS if key not in archive.files]
        if missing:
            raise KeyError(f"problem archive {path} lacks {missing}")
        return CompositeQP(
            P=archive["P"],
            q=archive["q"],
            lam=float(archive["lam"]),
            A_eq=archive["A_eq"],
            b_eq=archive["b_eq"],
            A_in=archive["A_in"],
            b_in=archive["b_in"],
            offset=float(archive["offset"]),
        )
