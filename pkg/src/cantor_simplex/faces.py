"""Faces of a finite simplex: extension from a face and restricted chains.

A face is a set of vertex indices ``R``.  A function known on ``R`` is
extended to all vertices by taking the midpoint of the allowed interval at
every vertex outside ``R``.  Repeating this one piece at a time decomposes a
vector into positive pieces with prescribed values on the face, which is how
tasks stated for the restricted class are carried out in the full chain.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import Embedding, FiniteMeasuredAlgebra, is_embedding, restrict_to_face
from .backforth import DEFAULT_STAGE_BUDGET, PartialIso, match_enumerated
from .chain import FraisseTask, LimitChain, one_point_extension
from .vectors import Vector, format_vector, is_positive, parse_rational, sub, vsum, zeros


def _face(R: Sequence[int], k: int) -> List[int]:
    R = list(R)
    if not R:
        raise ValueError("a face needs at least one vertex")
    if len(set(R)) != len(R) or any(not 0 <= i < k for i in R):
        raise ValueError(f"bad vertex subset {R} for k={k}")
    return R


def extend_with_bounds(R: Sequence[int], f_on_R: Sequence, f1: Sequence, f2: Sequence) -> Vector:
    """Vector equal to ``f_on_R`` on ``R`` and to ``(f1 + f2) / 2`` elsewhere."""
    f1 = tuple(parse_rational(x) for x in f1)
    f2 = tuple(parse_rational(x) for x in f2)
    if len(f1) != len(f2):
        raise ValueError("bounds have different lengths")
    R = _face(R, len(f1))
    vals = [parse_rational(x) for x in f_on_R]
    if len(vals) != len(R):
        raise ValueError("need exactly one value per vertex of the face")
    for e, (lo, hi) in enumerate(zip(f1, f2)):
        if lo > hi:
            raise ValueError(f"lower bound exceeds upper bound at vertex {e}")
    out = [(lo + hi) / 2 for lo, hi in zip(f1, f2)]
    for e, x in zip(R, vals):
        if not f1[e] <= x <= f2[e]:
            raise ValueError(f"value at vertex {e} lies outside its bounds")
        out[e] = x
    return tuple(out)


def face_extension_decompose(f: Sequence, R: Sequence[int], parts_on_R: Sequence[Sequence]
                             ) -> List[Vector]:
    """Positive vectors summing to ``f`` that restrict to ``parts_on_R`` on the face.

    Each piece but the last is extended between 0 and what is left of ``f``,
    so the remainder stays strictly positive.
    """
    f = tuple(parse_rational(x) for x in f)
    k = len(f)
    R = _face(R, k)
    parts = [[parse_rational(x) for x in p] for p in parts_on_R]
    if not parts:
        raise ValueError("need at least one part")
    if not is_positive(f):
        raise ValueError("the decomposed vector must be positive")
    for i, p in enumerate(parts):
        if len(p) != len(R):
            raise ValueError(f"part {i} has {len(p)} values for a face of {len(R)} vertices")
        if any(x <= 0 for x in p):
            raise ValueError(f"part {i} is not positive on the face")
    total = vsum(parts, len(R))
    if total != tuple(f[e] for e in R):
        raise ValueError("parts do not sum to the vector on the face")
    out = []
    rest = f
    for p in parts[:-1]:
        g = extend_with_bounds(R, p, zeros(k), rest)
        out.append(g)
        rest = sub(rest, g)
    out.append(rest)
    return out


def restricted_limit(chain: LimitChain, R: Sequence[int]) -> LimitChain:
    """The same tree with every measure vector projected onto ``R``."""
    R = _face(R, chain.k)
    stages = [restrict_to_face(s, R) for s in chain.stages]
    refs = [Embedding(stages[i], stages[i + 1], r.blocks) for i, r in enumerate(chain.refinements)]
    return LimitChain(len(R), stages, refs, chain.task_log, chain.truncated, chain.params)


def lift_task(chain: LimitChain, R: Sequence[int], task: FraisseTask) -> FraisseTask:
    """Turn a task against the restricted chain into one against ``chain``."""
    R = _face(R, chain.k)
    presented = chain.present(dict(task.sub), task.source_stage)
    B = task.ext.target
    lifted = []
    blocks: Dict[str, frozenset] = {}
    for a, block in task.ext.blocks:
        ids = sorted(block)
        pieces = face_extension_decompose(presented.vector(a), R, [B.vector(b) for b in ids])
        lifted.extend(zip(ids, pieces))
        blocks[a] = frozenset(ids)
    ext = Embedding(presented, FiniteMeasuredAlgebra(chain.k, tuple(lifted)), blocks)
    return FraisseTask(task.source_stage, task.sub, ext, task.origin)


def discharge_restricted(chain: LimitChain, R: Sequence[int], task: FraisseTask,
                         strategy: str = "product") -> Tuple[LimitChain, bool]:
    """Discharge a restricted-class task in the full chain.

    Returns the extended chain and whether its restriction realizes the
    original task, i.e. the witness read in the restricted chain is an
    embedding of the task's target.
    """
    grown = one_point_extension(chain, lift_task(chain, R, task), strategy)
    small = restricted_limit(grown, R)
    witness = grown.task_log[-1]["witness"]
    B = task.ext.target
    image = FiniteMeasuredAlgebra(small.k, tuple(
        (b, small.measure(witness[b])) for b in B.ids))
    leaves = set()
    for b in B.ids:
        leaves |= small.leaves(witness[b])
    covers = leaves == set(small.last.ids)
    ok, _ = is_embedding(Embedding(B, image, {b: frozenset([b]) for b in B.ids}))
    return grown, ok and covers


def _check_vertex_map(g: Sequence[int], k: int) -> List[int]:
    g = [int(x) for x in g]
    if len(g) != k:
        raise ValueError(f"vertex map has {len(g)} entries, expected {k}")
    if any(not 0 <= x < k for x in g):
        raise ValueError("vertex map leaves the vertex set")
    if len(set(g)) != k:
        raise ValueError("vertex map is not injective")
    return g


def limit_isomorphism_h(chain: LimitChain, g: Sequence[int], count: Optional[int] = None,
                        stage_budget: int = DEFAULT_STAGE_BUDGET) -> Tuple[PartialIso, dict]:
    """Back-and-forth germ ``h`` from ``chain`` to its copy reindexed by ``g``.

    The copy ``N`` carries ``nu_q = mu_{g(q)}``, so a matched pair
    ``(U, h(U))`` satisfies ``mu_{g(q)}(h(U)) = mu_q(U)`` at every vertex.
    Returns the germ and a per-atom report of that identity.
    """
    g = _check_vertex_map(g, chain.k)
    N = chain.reindexed(g)
    atoms = chain.enumerate_atoms()
    count = len(atoms) if count is None else count
    p = match_enumerated(chain, N, count, stage_budget=stage_budget)
    rows = []
    for a in atoms[:count]:
        image = p.image(a)
        nu = p.right.measure(image)
        pushed = [None] * chain.k
        for q in range(chain.k):
            pushed[g[q]] = nu[q]
        mu = chain.vector(a)
        rows.append({
            "atom": a,
            "image": image,
            "mu": format_vector(mu),
            "mu_of_image": format_vector(pushed),
            "ok": all(pushed[g[q]] == mu[q] for q in range(chain.k)),
        })
    report = {
        "perm": g,
        "matched": len(rows),
        "pairs": p.to_json()["pairs"],
        "atoms": rows,
        "ok": all(r["ok"] for r in rows) and not p.problems(),
    }
    return p, report
