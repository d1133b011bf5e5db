"""Finite approximations of the Fraisse limit as refinement trees.

A :class:`LimitChain` is a sequence of finite measured algebras, each refining
the previous one.  Atom ids name clopen sets of the limit: an atom that is not
split keeps its id in the next stage, and a split atom ``x`` is replaced by
children ``x.0, x.1, ...``.  Any set of ids, taken from any stages, therefore
denotes a clopen set, and can be lifted to the atoms of a later stage.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import lcm
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .algebra import (
    ROOT_ID,
    Embedding,
    FiniteMeasuredAlgebra,
    algebra_from_json,
    algebra_to_json,
    is_embedding,
    trivial_algebra,
    validate,
)
from .amalgamation import AmalgamationError, amalgamate
from .vectors import (
    Vector,
    format_vector,
    is_positive,
    le,
    max_denominator,
    ones,
    sub,
    vsum,
)

CHAIN_SCHEMA = "chain.v1"
DEFAULT_SEARCH_NODES = 20000


class ChainError(ValueError):
    pass


class TaskError(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    pass


class LimitChain:
    """Append-only refinement tree; extension returns a new chain."""

    def __init__(self, k: int, stages, refinements, task_log=(), truncated=False,
                 params=None):
        self.k = k
        self.stages: Tuple[FiniteMeasuredAlgebra, ...] = tuple(stages)
        self.refinements: Tuple[Embedding, ...] = tuple(refinements)
        self.task_log: Tuple[dict, ...] = tuple(task_log)
        self.truncated = truncated
        self.params = dict(params or {})
        if len(self.refinements) != len(self.stages) - 1:
            raise ChainError("need exactly one refinement per consecutive pair of stages")
        self.born: Dict[str, int] = {}
        self.split_at: Dict[str, int] = {}
        self.children: Dict[str, Tuple[str, ...]] = {}
        self._vectors: Dict[str, Vector] = {}
        for a, v in self.stages[0].atoms:
            self.born[a] = 0
            self._vectors[a] = v
        for s, ref in enumerate(self.refinements, start=1):
            self._index_refinement(s, ref)
        self._leaf_cache: Dict[str, Tuple[str, ...]] = {}

    def _index_refinement(self, s: int, ref: Embedding):
        for a, block in ref.blocks:
            if block == frozenset([a]):
                continue
            if a in block:
                raise ChainError(f"stage {s}: split atom {a} cannot keep its own id")
            kids = tuple(sorted(block))
            for c in kids:
                if c in self.born:
                    raise ChainError(f"stage {s}: atom id {c} reused")
                self.born[c] = s
                self._vectors[c] = self.stages[s].vector(c)
            self.split_at[a] = s
            self.children[a] = kids

    @classmethod
    def trivial(cls, k: int) -> "LimitChain":
        return cls(k, [trivial_algebra(k, ROOT_ID)], [])

    # -- queries ---------------------------------------------------------------

    @property
    def last(self) -> FiniteMeasuredAlgebra:
        return self.stages[-1]

    @property
    def depth(self) -> int:
        return len(self.stages) - 1

    def __contains__(self, atom_id) -> bool:
        return atom_id in self.born

    def vector(self, atom_id: str) -> Vector:
        try:
            return self._vectors[atom_id]
        except KeyError:
            raise ChainError(f"unknown atom {atom_id!r}") from None

    def measure(self, ids: Iterable[str]) -> Vector:
        return vsum((self.vector(a) for a in self.leaves(ids)), self.k)

    def atom_leaves(self, atom_id: str) -> Tuple[str, ...]:
        """Atoms of the final stage below ``atom_id``."""
        hit = self._leaf_cache.get(atom_id)
        if hit is not None:
            return hit
        if atom_id not in self.born:
            raise ChainError(f"unknown atom {atom_id!r}")
        out: List[str] = []
        stack = [atom_id]
        while stack:
            a = stack.pop()
            kids = self.children.get(a)
            if kids is None:
                out.append(a)
            else:
                stack.extend(reversed(kids))
        result = tuple(sorted(out))
        self._leaf_cache[atom_id] = result
        return result

    def leaves(self, ids: Iterable[str]) -> frozenset:
        out = set()
        for a in ids:
            out.update(self.atom_leaves(a))
        return frozenset(out)

    def stage_leaves(self, ids: Iterable[str], stage: int) -> frozenset:
        """Atoms of ``stage`` making up the clopen ``ids``; ids must be realized there."""
        out = set()
        for a in ids:
            if a not in self.born or self.born[a] > stage:
                raise ChainError(f"atom {a!r} does not exist at stage {stage}")
            stack = [a]
            while stack:
                x = stack.pop()
                if x in self.split_at and self.split_at[x] <= stage:
                    stack.extend(self.children[x])
                else:
                    out.add(x)
        return frozenset(out)

    def new_atoms(self, stage: int) -> List[str]:
        return [a for a in self.stages[stage].ids if self.born[a] == stage]

    def enumerate_atoms(self) -> List[str]:
        """Every node of the tree once, in order of appearance."""
        out: List[str] = []
        for s in range(len(self.stages)):
            out.extend(self.new_atoms(s))
        return out

    def canonical(self, ids: Iterable[str]) -> List[str]:
        """Smallest set of tree nodes with the same union, sorted."""
        current = set(self.leaves(ids))
        changed = True
        while changed:
            changed = False
            parents = {}
            for a in current:
                p = self._parent(a)
                if p is not None:
                    parents.setdefault(p, set()).add(a)
            for p, kids in parents.items():
                if set(self.children[p]) <= kids:
                    current -= set(self.children[p])
                    current.add(p)
                    changed = True
        return sorted(current)

    def _parent(self, atom_id: str) -> Optional[str]:
        if atom_id == ROOT_ID or atom_id not in self.born:
            return None
        born = self.born[atom_id]
        if born == 0:
            return None
        head = atom_id.rsplit(".", 1)[0]
        return head if self.children.get(head) and atom_id in self.children[head] else None

    def present(self, blocks: Dict[str, Iterable[str]], stage: Optional[int] = None
                ) -> FiniteMeasuredAlgebra:
        """The subalgebra whose atoms are the given clopens; they must partition the space."""
        stage = self.depth if stage is None else stage
        seen = set()
        atoms = []
        for name, ids in blocks.items():
            ls = self.stage_leaves(ids, stage)
            if not ls:
                raise TaskError(f"sub-atom {name} is empty")
            if seen & ls:
                raise TaskError(f"sub-atom {name} overlaps another sub-atom")
            seen |= ls
            atoms.append((name, vsum((self.vector(a) for a in ls), self.k)))
        if seen != set(self.stages[stage].ids):
            raise TaskError("sub-atoms do not cover the whole space")
        return FiniteMeasuredAlgebra(self.k, tuple(atoms))

    def check(self) -> List[str]:
        """Structural problems (empty list when the chain is valid)."""
        problems = []
        if len(self.stages[0]) != 1 or self.stages[0].vectors()[0] != ones(self.k):
            problems.append("stage 0 is not the trivial algebra")
        for s, alg in enumerate(self.stages):
            if alg.k != self.k:
                problems.append(f"stage {s} has k={alg.k}")
            problems.extend(f"stage {s}: {p}" for p in validate(alg).violations)
        for s, ref in enumerate(self.refinements):
            if ref.source != self.stages[s] or ref.target != self.stages[s + 1]:
                problems.append(f"refinement {s} does not connect stages {s} and {s + 1}")
                continue
            ok, why = is_embedding(ref)
            if not ok:
                problems.append(f"refinement {s}: {why}")
        return problems

    # -- extension -------------------------------------------------------------

    def appended(self, stage: FiniteMeasuredAlgebra, refinement: Embedding,
                 log_entry: Optional[dict] = None) -> "LimitChain":
        log = self.task_log + ((log_entry,) if log_entry is not None else ())
        return LimitChain(self.k, self.stages + (stage,), self.refinements + (refinement,),
                          log, self.truncated, self.params)

    def with_flags(self, truncated=None, params=None) -> "LimitChain":
        return LimitChain(self.k, self.stages, self.refinements, self.task_log,
                          self.truncated if truncated is None else truncated,
                          self.params if params is None else params)

    def reindexed(self, perm: Sequence[int]) -> "LimitChain":
        """Same tree with vectors ``nu[q] = mu[perm[q]]``."""
        def re(alg):
            return FiniteMeasuredAlgebra(alg.k, tuple((a, tuple(v[perm[q]] for q in range(alg.k)))
                                                      for a, v in alg.atoms))
        stages = [re(s) for s in self.stages]
        refs = [Embedding(stages[i], stages[i + 1], r.blocks) for i, r in enumerate(self.refinements)]
        return LimitChain(self.k, stages, refs, (), self.truncated, self.params)


@dataclass(frozen=True)
class FraisseTask:
    """A subalgebra presented in a stage plus an embedding of it into some B.

    ``sub`` maps each sub-atom id to a set of atom ids realized at
    ``source_stage``; ``ext.source`` must be the presented subalgebra.
    """

    source_stage: int
    sub: Tuple[Tuple[str, frozenset], ...]
    ext: Embedding
    origin: str = "build"

    def __post_init__(self):
        items = self.sub.items() if isinstance(self.sub, dict) else self.sub
        object.__setattr__(self, "sub", tuple(sorted((str(a), frozenset(b)) for a, b in items)))

    def max_denominator(self) -> int:
        vals = [x for v in self.ext.source.vectors() + self.ext.target.vectors() for x in v]
        return max_denominator(vals)


def _check_task(chain: LimitChain, task: FraisseTask) -> FiniteMeasuredAlgebra:
    if not 0 <= task.source_stage < len(chain.stages):
        raise TaskError(f"task refers to missing stage {task.source_stage}")
    try:
        presented = chain.present(dict(task.sub), task.source_stage)
    except ChainError as exc:
        raise TaskError(str(exc)) from exc
    if presented != task.ext.source:
        raise TaskError("task extension does not start from the presented subalgebra")
    for b, v in task.ext.target.atoms:
        if not is_positive(v):
            raise TaskError(f"target atom {b} is not coordinatewise positive")
    ok, why = is_embedding(task.ext)
    if not ok:
        raise TaskError(f"task extension is not an embedding: {why}")
    return presented


def one_point_extension(chain: LimitChain, task: FraisseTask, strategy: str = "product"
                        ) -> LimitChain:
    """Append one stage realizing ``task``; the witness goes to the task log.

    The new stage is the amalgam of the final stage and ``task.ext.target``
    over the presented subalgebra.  Atoms whose block in the amalgam is a
    single atom keep their id.
    """
    _check_task(chain, task)
    last = chain.last
    inclusion = Embedding(
        task.ext.source, last,
        {a: chain.stage_leaves(ids, chain.depth) for a, ids in task.sub},
    )
    try:
        D, to_d, from_b = amalgamate(inclusion, task.ext, strategy)
    except AmalgamationError as exc:
        raise TaskError(str(exc)) from exc
    rename: Dict[str, str] = {}
    blocks: Dict[str, set] = {}
    for leaf, dblock in to_d.blocks:
        ordered = sorted(dblock, key=lambda d: d.split("⊗", 1)[1])
        if len(ordered) == 1:
            rename[ordered[0]] = leaf
        else:
            for i, d in enumerate(ordered):
                rename[d] = f"{leaf}.{i}"
        blocks[leaf] = {rename[d] for d in ordered}
    stage = FiniteMeasuredAlgebra(chain.k, tuple((rename[d], v) for d, v in D.atoms))
    refinement = Embedding(last, stage, blocks)
    witness = {b: sorted(rename[d] for d in dset) for b, dset in from_b.blocks}
    entry = {
        "origin": task.origin,
        "source_stage": task.source_stage,
        "new_stage": len(chain.stages),
        "strategy": strategy,
        "sub": {a: sorted(ids) for a, ids in task.sub},
        "target": {b: format_vector(v) for b, v in task.ext.target.atoms},
        "ext": {a: sorted(blk) for a, blk in task.ext.blocks},
        "witness": witness,
    }
    return chain.appended(stage, refinement, entry)


def last_witness(chain: LimitChain) -> Dict[str, List[str]]:
    return chain.task_log[-1]["witness"]


def split_task(chain: LimitChain, groups: Sequence[Iterable[str]],
               pieces: Sequence[Sequence[Vector]], origin: str = "split",
               stage: Optional[int] = None) -> FraisseTask:
    """Task splitting each clopen ``groups[i]`` into ``pieces[i]``.

    The groups must be disjoint; everything else is the untouched sub-atom
    ``rest``.  Target atom ``g{i}:p{j}`` is piece ``j`` of group ``i``.
    """
    stage = chain.depth if stage is None else stage
    sub: Dict[str, frozenset] = {}
    covered = set()
    for i, g in enumerate(groups):
        ls = chain.stage_leaves(g, stage)
        if covered & ls:
            raise TaskError("split groups overlap")
        covered |= ls
        sub[f"g{i:03d}"] = ls
    rest = frozenset(chain.stages[stage].ids) - covered
    if rest:
        sub["rest"] = rest
    presented = chain.present(sub, stage)
    targets, blocks = [], {}
    for i, ps in enumerate(pieces):
        name = f"g{i:03d}"
        if vsum(ps, chain.k) != presented.vector(name):
            raise TaskError(f"pieces of group {i} do not sum to its measure")
        ids = []
        for j, v in enumerate(ps):
            pid = f"{name}:p{j:03d}"
            targets.append((pid, tuple(v)))
            ids.append(pid)
        blocks[name] = frozenset(ids)
    if rest:
        targets.append(("rest", presented.vector("rest")))
        blocks["rest"] = frozenset(["rest"])
    B = FiniteMeasuredAlgebra(chain.k, tuple(targets))
    return FraisseTask(stage, sub, Embedding(presented, B, blocks), origin)


def piece_witness(chain: LimitChain, n_groups: int, counts: Sequence[int]) -> List[List[List[str]]]:
    """Read the split pieces back from the newest task-log entry."""
    w = last_witness(chain)
    return [[w[f"g{i:03d}:p{j:03d}"] for j in range(counts[i])] for i in range(n_groups)]


# -- realization search ------------------------------------------------------

def _as_integers(vectors: Sequence[Vector]) -> List[Tuple[int, ...]]:
    """Rescale exact vectors by a common denominator so sums are integer sums."""
    den = 1
    for v in vectors:
        for x in v:
            den = lcm(den, x.denominator)
    return [tuple(int(x * den) for x in v) for v in vectors]


def find_subset(items: Sequence[Tuple[str, Vector]], target: Vector,
                node_limit: int = DEFAULT_SEARCH_NODES) -> Optional[List[str]]:
    """First (include-first, in item order) subset summing exactly to ``target``."""
    target = tuple(Fraction(x) for x in target)
    pool = [(a, tuple(v)) for a, v in items if le(v, target)]
    if not pool:
        return None
    scaled = _as_integers([target] + [v for _, v in pool])
    goal, vals = scaled[0], scaled[1:]
    k = len(goal)
    n = len(vals)
    suffix = [(0,) * k] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = tuple(a + b for a, b in zip(suffix[i + 1], vals[i]))
    if any(s < g for s, g in zip(suffix[0], goal)):
        return None
    stack = [(0, (0,) * k, None)]
    nodes = 0
    while stack:
        i, partial, chosen = stack.pop()
        nodes += 1
        if nodes > node_limit:
            return None
        if partial == goal:
            out = []
            while chosen is not None:
                out.append(pool[chosen[0]][0])
                chosen = chosen[1]
            return sorted(out)
        if i == n or any(p + s < g for p, s, g in zip(partial, suffix[i], goal)):
            continue
        stack.append((i + 1, partial, chosen))
        grown = tuple(p + v for p, v in zip(partial, vals[i]))
        if all(x <= g for x, g in zip(grown, goal)):
            stack.append((i + 1, grown, (i, chosen)))
    return None


def find_partition(items: Sequence[Tuple[str, Vector]], targets: Sequence[Vector],
                   node_limit: int = DEFAULT_SEARCH_NODES) -> Optional[List[List[str]]]:
    """Greedy: carve the targets out one at a time; the last takes the remainder."""
    remaining = list(items)
    k = len(targets[0])
    groups = []
    for t in targets[:-1]:
        found = find_subset(remaining, t, node_limit)
        if found is None:
            return None
        taken = set(found)
        groups.append(found)
        remaining = [(a, v) for a, v in remaining if a not in taken]
    if not remaining or vsum((v for _, v in remaining), k) != tuple(targets[-1]):
        return None
    groups.append(sorted(a for a, _ in remaining))
    return groups


def leaf_items(chain: LimitChain, ids: Iterable[str]) -> List[Tuple[str, Vector]]:
    return [(a, chain.vector(a)) for a in sorted(chain.leaves(ids))]


def realize_split(chain: LimitChain, clopen: Iterable[str], pieces: Sequence[Vector],
                  origin: str, budget: Optional[List[int]] = None,
                  strategy: str = "sparse") -> Tuple[LimitChain, List[List[str]]]:
    """Find ``pieces`` inside ``clopen``, discharging a task if they are absent.

    ``budget`` is a one-element list counting the stages still allowed to be
    appended; it is decremented in place.
    """
    clopen = list(clopen)
    pieces = [tuple(p) for p in pieces]
    if len(pieces) == 1:
        return chain, [sorted(chain.leaves(clopen))]
    found = find_partition(leaf_items(chain, clopen), pieces)
    if found is not None:
        return chain, found
    if budget is not None:
        if budget[0] <= 0:
            raise BudgetExhausted(f"no stage left to realize a split for {origin}")
        budget[0] -= 1
    task = split_task(chain, [clopen], [pieces], origin)
    chain = one_point_extension(chain, task, strategy)
    return chain, piece_witness(chain, 1, [len(pieces)])[0]


# -- the builder -------------------------------------------------------------

def _values_below(bound: Fraction, d: int) -> List[Fraction]:
    vals = {Fraction(p, q) for q in range(1, d + 1) for p in range(1, q)}
    return sorted(x for x in vals if x < bound)


def enumerate_splits(v: Vector, d: int, rng: Optional[random.Random] = None
                     ) -> Iterator[Tuple[Vector, ...]]:
    """Multisets of at least two positive vectors with denominators <= d summing to v.

    Splits come in order of piece count; within one count the order follows
    the (optionally shuffled) candidate order.
    """
    k = len(v)
    per_coord = [_values_below(v[e], d) for e in range(k)]
    cands = [tuple(c) for c in product(*per_coord)]
    if rng is not None:
        rng.shuffle(cands)
    # every piece is at least 1/d at each coordinate
    max_pieces = int(d * min(v))

    def rec(rest, start, left, acc):
        if left == 1:
            if is_positive(rest) and max_denominator(rest) <= d:
                pos = _index.get(rest)
                if pos is not None and pos >= start:
                    yield tuple(acc) + (rest,)
            return
        for idx in range(start, len(cands)):
            c = cands[idx]
            if not le(c, rest):
                continue
            r = sub(rest, c)
            if not is_positive(r):
                continue
            acc.append(c)
            yield from rec(r, idx, left - 1, acc)
            acc.pop()

    _index = {c: i for i, c in enumerate(cands)}
    for m in range(2, max_pieces + 1):
        yield from rec(tuple(v), 0, m, [])


def build_limit(k: int, depth_budget: int, denom_budget: int, seed: int = 0,
                strategy: str = "sparse") -> LimitChain:
    """Discharge Fraisse tasks in a fair order until ``depth_budget`` stages exist.

    Tasks split one atom into pieces whose values have denominators at most
    the current bound.  Order: bound, then stage, then atom id; the seed only
    reorders the splits of a single atom.  Tasks already realized by the chain
    cost nothing.  If an unrealized task remains when the stage budget is
    used up, the chain comes back with ``truncated`` set.
    """
    if k < 1 or depth_budget < 1 or denom_budget < 1:
        raise ValueError("k and budgets must be at least 1")
    rng = random.Random(seed)
    chain = LimitChain.trivial(k)
    done: Dict[str, int] = {}
    params = {"k": k, "stages": depth_budget, "denoms": denom_budget, "seed": seed,
              "strategy": strategy}
    for d in range(1, denom_budget + 1):
        s = 0
        while s < len(chain.stages):
            for atom in chain.new_atoms(s):
                v = chain.vector(atom)
                if max_denominator(v) > d:
                    continue
                floor = done.get(atom, 0)
                for pieces in enumerate_splits(v, d, random.Random(rng.getrandbits(64))):
                    if max_denominator(x for p in pieces for x in p) <= floor:
                        continue
                    if find_partition(leaf_items(chain, [atom]), pieces) is not None:
                        continue
                    if len(chain.stages) >= depth_budget:
                        return chain.with_flags(truncated=True, params=params)
                    task = split_task(chain, [[atom]], [pieces], "build")
                    chain = one_point_extension(chain, task, strategy)
                done[atom] = d
            s += 1
    if len(chain.stages) < depth_budget:
        # Atoms with no admissible split inside the bound would otherwise stay
        # atoms for good; one halving stage leaves no atom of an earlier stage
        # unsplit.
        leaves = chain.last.ids
        halves = [[tuple(x / 2 for x in chain.vector(a))] * 2 for a in leaves]
        task = split_task(chain, [[a] for a in leaves], halves, "diffuse")
        chain = one_point_extension(chain, task, strategy)
    return chain.with_flags(truncated=False, params=params)


# -- helpers used by other modules and tests ---------------------------------

def uniform_chain(depth: int, k: int = 1) -> LimitChain:
    """Binary tree of cylinders with the uniform measure at every vertex.

    Atom ``r.w1.w2...`` is the cylinder of the word ``w1 w2 ...``.
    """
    chain = LimitChain.trivial(k)
    for _ in range(depth):
        groups = [[a] for a in chain.last.ids]
        pieces = [[tuple(x / 2 for x in chain.vector(a))] * 2 for a in chain.last.ids]
        chain = one_point_extension(chain, split_task(chain, groups, pieces, "uniform"), "product")
    return chain


def cylinder_id(word: str) -> str:
    return ".".join([ROOT_ID] + list(word))


def common_refinement(chain: LimitChain, first: Dict[str, Iterable[str]],
                      second: Dict[str, Iterable[str]], stage: Optional[int] = None
                      ) -> Tuple[FiniteMeasuredAlgebra, Dict[str, frozenset]]:
    """Coarsest algebra refining two subalgebras presented in one stage.

    Returns the algebra and its presentation (atom id -> atoms of the stage).
    Atom ``x&y`` is the intersection of ``x`` from ``first`` and ``y`` from
    ``second``.
    """
    stage = chain.depth if stage is None else stage
    try:
        chain.present(first, stage)
        chain.present(second, stage)
    except (ChainError, TaskError) as exc:
        raise ChainError(f"carriers are not presented in stage {stage}: {exc}") from exc
    owner = {}
    for name, ids in second.items():
        for a in chain.stage_leaves(ids, stage):
            owner[a] = name
    pres: Dict[str, set] = {}
    for name, ids in first.items():
        for a in chain.stage_leaves(ids, stage):
            pres.setdefault(f"{name}&{owner[a]}", set()).add(a)
    presentation = {n: frozenset(s) for n, s in pres.items()}
    alg = FiniteMeasuredAlgebra(chain.k, tuple(
        (n, vsum((chain.vector(a) for a in s), chain.k)) for n, s in presentation.items()))
    return alg, presentation


# -- serialization -----------------------------------------------------------

def chain_to_json(chain: LimitChain) -> dict:
    return {
        "schema": CHAIN_SCHEMA,
        "k": chain.k,
        "params": chain.params,
        "truncated": chain.truncated,
        "stages": [algebra_to_json(s) for s in chain.stages],
        "refinements": [{a: sorted(b) for a, b in r.blocks} for r in chain.refinements],
        "task_log": list(chain.task_log),
    }


def chain_from_json(data: dict) -> LimitChain:
    if not isinstance(data, dict) or data.get("schema") != CHAIN_SCHEMA:
        raise ChainError("not a chain.v1 document")
    try:
        k = int(data["k"])
        stages = [algebra_from_json(s) for s in data["stages"]]
        refs = [Embedding(stages[i], stages[i + 1],
                          {a: frozenset(b) for a, b in blk.items()})
                for i, blk in enumerate(data["refinements"])]
        chain = LimitChain(k, stages, refs, data.get("task_log", []),
                           bool(data.get("truncated", False)), data.get("params", {}))
    except (KeyError, TypeError, IndexError, AttributeError) as exc:
        raise ChainError(f"malformed chain: {exc}") from exc
    problems = chain.check()
    if problems:
        raise ChainError("invalid chain: " + "; ".join(problems[:3]))
    return chain
