"""JSON schema for families and permutations, atomic file output, provenance."""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidParameterError
from .families import (
    CappedIndicatorContrast,
    ExplicitMatrices,
    ExplicitVectors,
    FromVectors,
    SingletonMatrix,
)
from .sampling import PermutationSample

# Index sets and permutations are 1-based in every file format.


def family_to_dict(fam) -> dict:
    if isinstance(fam, ExplicitVectors):
        return {"type": "vector_family", "n": fam.n, "kind": "explicit",
                "entries": fam.vectors.tolist(), "bound_box": [fam.lo, fam.hi]}
    if isinstance(fam, CappedIndicatorContrast):
        return {"type": "vector_family", "n": fam.n, "kind": "capped_indicator_contrast",
                "A": (fam.A + 1).tolist(), "B": (fam.B + 1).tolist(), "l": fam.l, "b_sign": fam.b_sign}
    if isinstance(fam, SingletonMatrix):
        return {"type": "matrix_family", "n": fam.n, "kind": "singleton", "entries": fam.a.tolist()}
    if isinstance(fam, ExplicitMatrices):
        return {"type": "matrix_family", "n": fam.n, "kind": "explicit", "entries": fam.matrices.tolist()}
    if isinstance(fam, FromVectors):
        return {"type": "matrix_family", "n": fam.n, "kind": "from_vectors", "m": fam.m,
                "family": family_to_dict(fam.family)}
    raise InvalidParameterError(f"cannot serialize {type(fam).__name__}")


def family_from_dict(d: dict):
    kind = d.get("kind")
    n = d.get("n")
    if kind == "explicit" and d.get("type", "vector_family") == "vector_family":
        lo, hi = d.get("bound_box", [-1.0, 1.0])
        fam = ExplicitVectors(np.asarray(d["entries"], dtype=float), lo=lo, hi=hi)
    elif kind == "capped_indicator_contrast":
        fam = CappedIndicatorContrast(int(n), np.asarray(d["A"], dtype=np.int64) - 1,
                                      np.asarray(d["B"], dtype=np.int64) - 1, int(d["l"]), int(d.get("b_sign", -1)))
    elif kind == "singleton":
        fam = SingletonMatrix(np.asarray(d["entries"], dtype=float))
    elif kind == "explicit":
        fam = ExplicitMatrices(np.asarray(d["entries"], dtype=float))
    elif kind == "from_vectors":
        fam = FromVectors(family_from_dict(d["family"]), int(d["m"]))
    else:
        raise InvalidParameterError(f"unknown family kind {kind!r}")
    if n is not None and fam.n != int(n):
        raise InvalidParameterError(f"declared n={n} but entries have n={fam.n}")
    return fam


def permutation_to_list(perm: PermutationSample) -> list[int]:
    return perm.one_based()


def permutation_from_list(values) -> PermutationSample:
    return PermutationSample.from_one_based(values)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def provenance() -> str:
    """'permconc <version>' plus the git revision of the source tree, if any."""
    src = Path(__file__).resolve().parent
    try:
        rev = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=src, capture_output=True,
                             text=True, timeout=5).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"permconc {__version__}" + (f" (git {rev})" if rev else "")
