"""Stuttering-refinement checking between two machines.

Verified means: there is a stuttering simulation relation R over the two
reachable transition systems, containing the initial pair, such that
every refined transition from a related pair either leaves the glue
projection unchanged and stays related (a stutter), or is matched by
some abstract transition with the same target projection. R is computed
as a greatest fixpoint over equal-projection pairs; no progress
condition is imposed, so infinite stuttering is allowed.

A Refuted verdict optionally carries a witness: a refined input sequence
whose stutter-collapsed glue projection no abstract run produces, found
by a bounded determinised (subset) search. Simulation is stronger than
trace inclusion, so a Refuted verdict may come without a witness.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .errors import EmptyGlue, UnresolvedSymbol
from .interpreter import run
from .syntax import CLOCK_FUNCTION, Machine, Trace, Value
from .verify import (
    AbstractionConfig,
    TransitionSystem,
    _concretize_clock,
    build_ts,
    free_boolean,
    zero_completion,
)


@dataclass(frozen=True)
class GlueMap:
    linked: Tuple[str, ...]

    def __post_init__(self):
        if not self.linked:
            raise EmptyGlue("a glue map needs at least one linked location")


@dataclass
class RefinementWitness:
    projections: List[Tuple[Value, ...]]  # stutter-collapsed glue projections
    input_envs: List[Dict[str, Value]]  # concrete envs for the refined machine
    mismatch_at: int  # index into the collapsed projection sequence
    abstract_only: bool
    trace: Optional[Trace]


@dataclass
class RefinementResult:
    verdict: str  # "Verified" | "Refuted"
    glue: GlueMap
    n_abstract_states: int
    n_refined_states: int
    n_pairs: int
    seconds: float
    witness: Optional[RefinementWitness] = None

    @property
    def verified(self) -> bool:
        return self.verdict == "Verified"


def _validate_glue(abstract: Machine, refined: Machine, glue: GlueMap) -> None:
    for loc in glue.linked:
        for m, side in ((abstract, "abstract"), (refined, "refined")):
            decl = m.functions.get(loc)
            if decl is None or decl.kind != "controlled" or decl.timer_indexed:
                raise UnresolvedSymbol(
                    f"glue location '{loc}' is not a controlled function of the "
                    f"{side} machine '{m.name}'")
        da = abstract.functions[loc].codomain
        dr = refined.functions[loc].codomain
        if (da in abstract.domains) != (dr in refined.domains):
            raise UnresolvedSymbol(f"glue location '{loc}' mixes enum and scalar")
        if da in abstract.domains:
            shared = set(abstract.domains[da]) & set(refined.domains[dr])
            if not shared:
                raise UnresolvedSymbol(
                    f"glue location '{loc}' has no shared enum literals")


def _projector(ts: TransitionSystem, glue: GlueMap):
    cache: List[Optional[Tuple[Value, ...]]] = [None] * ts.n_states

    def project(i: int) -> Tuple[Value, ...]:
        got = cache[i]
        if got is None:
            visible = ts.visible_at(i)
            got = tuple(visible[loc] for loc in glue.linked)
            cache[i] = got
        return got

    return project


def check_refinement(abstract: Machine, refined: Machine, glue: GlueMap,
                     abstraction: Optional[AbstractionConfig] = None,
                     witness_depth: int = 12) -> RefinementResult:
    started = time.perf_counter()
    abstraction = abstraction or free_boolean()
    _validate_glue(abstract, refined, glue)
    ts_a = build_ts(abstract, abstraction)
    ts_r = build_ts(refined, abstraction)
    proj_a = _projector(ts_a, glue)
    proj_r = _projector(ts_r, glue)

    by_proj: Dict[Tuple[Value, ...], List[int]] = {}
    for a in range(ts_a.n_states):
        by_proj.setdefault(proj_a(a), []).append(a)

    relation: Set[Tuple[int, int]] = set()
    for r in range(ts_r.n_states):
        for a in by_proj.get(proj_r(r), ()):
            relation.add((a, r))
    n_pairs = len(relation)

    def pair_ok(a: int, r: int) -> bool:
        for r2 in ts_r.edges[r]:
            p2 = proj_r(r2)
            if p2 == proj_r(r) and (a, r2) in relation:
                continue  # stutter
            if any(proj_a(a2) == p2 and (a2, r2) in relation
                   for a2 in ts_a.edges[a]):
                continue  # matched abstract move
            return False
        return True

    changed = True
    while changed:
        changed = False
        for pair in sorted(relation):
            if not pair_ok(*pair):
                relation.discard(pair)
                changed = True

    verified = (0, 0) in relation and proj_a(0) == proj_r(0)
    result = RefinementResult(
        verdict="Verified" if verified else "Refuted",
        glue=glue,
        n_abstract_states=ts_a.n_states,
        n_refined_states=ts_r.n_states,
        n_pairs=n_pairs,
        seconds=time.perf_counter() - started,
    )
    if not verified:
        result.witness = _search_witness(refined, ts_a, ts_r, proj_a, proj_r,
                                         witness_depth)
    result.seconds = time.perf_counter() - started
    return result


def _search_witness(refined: Machine, ts_a: TransitionSystem,
                    ts_r: TransitionSystem, proj_a, proj_r,
                    depth: int) -> Optional[RefinementWitness]:
    """Bounded determinised search for a refined run no abstract run matches.

    Inclusion is on stutter-collapsed projections on both sides, so the
    abstract subset is closed under stuttering before each change.
    """

    def stutter_closure(nodes: FrozenSet[int], projection) -> FrozenSet[int]:
        out = set(nodes)
        stack = list(nodes)
        while stack:
            node = stack.pop()
            for succ in ts_a.edges[node]:
                if succ not in out and proj_a(succ) == projection:
                    out.add(succ)
                    stack.append(succ)
        return frozenset(out)

    if proj_a(0) != proj_r(0):
        return _make_witness(refined, ts_r, [0], [], 0)
    init_sets = stutter_closure(frozenset({0}), proj_r(0))
    start = (0, init_sets)
    seen = {start}
    queue: List[Tuple[int, FrozenSet[int], List[int], List[Tuple[int, ...]]]] = [
        (0, init_sets, [0], [])]
    while queue:
        r, sset, path, cubes = queue.pop(0)
        if len(cubes) >= depth:
            continue
        for r2, cube in sorted(ts_r.edges[r].items()):
            p, p2 = proj_r(r), proj_r(r2)
            if p2 == p:
                s2 = sset
            else:
                s2 = frozenset(
                    a2 for a in sset for a2 in ts_a.edges[a] if proj_a(a2) == p2)
                s2 = stutter_closure(s2, p2)
            new_path = path + [r2]
            new_cubes = cubes + [cube]
            if not s2:
                return _make_witness(refined, ts_r, new_path, new_cubes, None)
            key = (r2, s2)
            if key not in seen:
                seen.add(key)
                queue.append((r2, s2, new_path, new_cubes))
    return None


def _make_witness(refined: Machine, ts_r: TransitionSystem, path: List[int],
                  cubes: List[Tuple[int, ...]],
                  mismatch: Optional[int]) -> RefinementWitness:
    projections: List[Tuple[Value, ...]] = []
    for node in path:
        visible = tuple(ts_r.visible_at(node).items())
        if not projections or projections[-1] != visible:
            projections.append(visible)
    if ts_r.abstraction.timer_mode == "boundedClock":
        envs = []
        for i, cube in enumerate(cubes):
            env = ts_r.program.decode_atoms(zero_completion(cube))
            if refined.uses_time:
                env[CLOCK_FUNCTION] = (i + 1) * ts_r.abstraction.tick / 1000.0
            envs.append(env)
        feasible = True
    else:
        envs, feasible = _concretize_clock(refined, ts_r.program, cubes)
    trace = run(refined, envs, len(envs)) if feasible else None
    return RefinementWitness(
        projections=projections,
        input_envs=envs,
        mismatch_at=len(projections) - 1 if mismatch is None else mismatch,
        abstract_only=not feasible,
        trace=trace,
    )


def default_glues() -> Dict[Tuple[int, int], GlueMap]:
    """Bundled glue choices for consecutive controller levels."""
    return {
        (0, 1): GlueMap(("state",)),
        (1, 2): GlueMap(("state",)),
        (2, 3): GlueMap(("state", "phase", "iValve", "oValve")),
    }


def parse_glue(text: str, what: str = "glue") -> Tuple[str, str, GlueMap]:
    """Glue file: 'pair <abstract> <refined>' header, one location per line."""
    header: Optional[Tuple[str, str]] = None
    linked: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 3 or parts[0] != "pair":
                raise UnresolvedSymbol(
                    f"{what}:{lineno}: expected 'pair <abstract> <refined>'")
            header = (parts[1], parts[2])
        else:
            linked.append(line)
    if header is None:
        raise UnresolvedSymbol(f"{what}: missing 'pair' header")
    return header[0], header[1], GlueMap(tuple(linked))
