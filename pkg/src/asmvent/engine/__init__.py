"""Step-evaluation backends and symbolic input expansion.

The compiled Cython kernel is used when its extension built; the
pure-Python kernel is the drop-in fallback. ``ASMVENT_PURE_ENGINE=1``
forces the fallback. Both kernels share one contract, so everything
here is backend-agnostic.
"""
from __future__ import annotations

import os
from typing import Dict, List, Optional, Tuple

from ..errors import InconsistentUpdateSet
from ..syntax import Machine, Value
from . import _core_py
from .program import (
    Program,
    STATUS_CLASH,
    STATUS_NEED_ATOM,
    STATUS_OK,
    compile_program,
)


def _load_default():
    if os.environ.get("ASMVENT_PURE_ENGINE") == "1":
        return _core_py
    try:
        from . import _core  # compiled extension, if it built
        return _core
    except ImportError:
        return _core_py


_default_backend = _load_default()


def get_backend(name: Optional[str] = None):
    """Return a kernel module: None/'default', 'python' or 'compiled'."""
    if name in (None, "default"):
        return _default_backend
    if name == "python":
        return _core_py
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return _default_backend.BACKEND_NAME


Cube = Tuple[int, ...]
StateVec = Tuple[int, ...]


def expand(prog: Program, state: StateVec, clock: int = 0,
           kernel=None) -> List[Tuple[Cube, StateVec]]:
    """All successors of ``state`` over the free atoms, as disjoint cubes.

    A cube is the atom vector with -1 for atoms the step never read; the
    cubes partition the full input product, so enumerating them is
    observationally the full Cartesian-product enumeration. Deterministic:
    depth-first in atom read order, smaller values first.
    """
    kernel = kernel or _default_backend
    results: List[Tuple[Cube, StateVec]] = []
    stack: List[Cube] = [tuple([-1] * prog.n_atoms)]
    sizes = prog.atom_sizes
    while stack:
        atoms = stack.pop()
        status, detail, succ = kernel.eval_step(prog, state, atoms, clock)
        if status == STATUS_NEED_ATOM:
            for v in range(sizes[detail] - 1, -1, -1):
                assigned = list(atoms)
                assigned[detail] = v
                stack.append(tuple(assigned))
        elif status == STATUS_CLASH:
            loc = prog.state_locs[detail]
            raise InconsistentUpdateSet(loc, "?", "?")
        else:
            results.append((atoms, tuple(succ)))
    return results


def concrete_step(prog: Program, state: StateVec, env: Dict[str, Value],
                  clock: int = 0, kernel=None) -> StateVec:
    """One fully-assigned step; raises on clash or missing input."""
    kernel = kernel or _default_backend
    atoms = prog.encode_atoms(env)
    if any(v < 0 for v in atoms):
        missing = prog.atom_names[atoms.index(-1)]
        raise ValueError(f"input '{missing}' missing from environment")
    status, detail, succ = kernel.eval_step(prog, state, atoms, clock)
    if status == STATUS_CLASH:
        raise InconsistentUpdateSet(prog.state_locs[detail], "?", "?")
    assert status == STATUS_OK
    return tuple(succ)


def zero_completion(cube: Cube) -> Cube:
    """Smallest full valuation inside a cube (unread atoms -> first value)."""
    return tuple(0 if v < 0 else v for v in cube)


__all__ = [
    "Program",
    "backend_name",
    "compile_program",
    "concrete_step",
    "expand",
    "get_backend",
    "zero_completion",
]
