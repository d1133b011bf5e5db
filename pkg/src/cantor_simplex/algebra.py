"""Finite Boolean algebras carrying a vector of measures.

A :class:`FiniteMeasuredAlgebra` is given by its atoms; each atom carries one
exact value per vertex of the simplex.  An element of the algebra is a set of
atom ids.  Embeddings send every atom of the source to a block of target atoms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .vectors import (
    Vector,
    format_vector,
    ones,
    parse_vector,
    restrict,
    vsum,
)

ALGEBRA_SCHEMA = "algebra.v1"
EMBEDDING_SCHEMA = "embedding.v1"
ROOT_ID = "r"


@dataclass(frozen=True)
class FiniteMeasuredAlgebra:
    """Atoms sorted by id, each paired with its measure vector."""

    k: int
    atoms: Tuple[Tuple[str, Vector], ...]
    _index: Dict[str, Vector] = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("vertex count must be at least 1")
        atoms = tuple(sorted((str(a), tuple(Fraction(x) for x in v)) for a, v in self.atoms))
        ids = [a for a, _ in atoms]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate atom ids")
        for a, v in atoms:
            if len(v) != self.k:
                raise ValueError(f"atom {a!r} has {len(v)} values, expected {self.k}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_index", dict(atoms))

    @classmethod
    def from_atoms(cls, atoms, k: Optional[int] = None) -> "FiniteMeasuredAlgebra":
        """Accept a mapping ``id -> values`` or a sequence of pairs."""
        items = list(atoms.items()) if isinstance(atoms, Mapping) else list(atoms)
        items = [(a, parse_vector(v)) for a, v in items]
        if k is None:
            if not items:
                raise ValueError("cannot infer k from an empty atom list")
            k = len(items[0][1])
        return cls(k, tuple(items))

    @property
    def ids(self) -> List[str]:
        return [a for a, _ in self.atoms]

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom_id):
        return atom_id in self._index

    def vector(self, atom_id: str) -> Vector:
        return self._index[atom_id]

    def measure(self, element: Iterable[str]) -> Vector:
        """Measure vector of an element given as a set of atom ids."""
        return vsum((self._index[a] for a in element), self.k)

    def vectors(self) -> List[Vector]:
        return [v for _, v in self.atoms]


def trivial_algebra(k: int, atom_id: str = ROOT_ID) -> FiniteMeasuredAlgebra:
    return FiniteMeasuredAlgebra(k, ((atom_id, ones(k)),))


@dataclass(frozen=True)
class ValidityReport:
    violations: Tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid


def validate(algebra: FiniteMeasuredAlgebra) -> ValidityReport:
    """Check the class invariants and list every violation found."""
    problems = []
    if not algebra.atoms:
        problems.append("algebra has no atoms")
    for a, v in algebra.atoms:
        for e, x in enumerate(v):
            if x <= 0:
                problems.append(f"atom {a}: coordinate {e} is {x}, not positive")
            elif x > 1:
                problems.append(f"atom {a}: coordinate {e} is {x} > 1")
    if algebra.atoms:
        total = vsum(algebra.vectors(), algebra.k)
        for e, x in enumerate(total):
            if x != 1:
                problems.append(f"coordinate {e} sums to {x}, not 1")
    return ValidityReport(tuple(problems))


@dataclass(frozen=True)
class Embedding:
    """Block map sending each source atom to a set of target atoms."""

    source: FiniteMeasuredAlgebra
    target: FiniteMeasuredAlgebra
    blocks: Tuple[Tuple[str, frozenset], ...]

    def __post_init__(self):
        items = self.blocks.items() if isinstance(self.blocks, Mapping) else self.blocks
        blocks = tuple(sorted((str(a), frozenset(b)) for a, b in items))
        object.__setattr__(self, "blocks", blocks)

    def block(self, atom_id: str) -> frozenset:
        for a, b in self.blocks:
            if a == atom_id:
                return b
        raise KeyError(atom_id)

    def as_dict(self) -> Dict[str, frozenset]:
        return dict(self.blocks)

    def image(self, element: Iterable[str]) -> frozenset:
        d = self.as_dict()
        out = set()
        for a in element:
            out |= d[a]
        return frozenset(out)


def identity_embedding(algebra: FiniteMeasuredAlgebra) -> Embedding:
    return Embedding(algebra, algebra, tuple((a, frozenset([a])) for a in algebra.ids))


def is_embedding(e: Embedding) -> Tuple[bool, Optional[str]]:
    """Return ``(ok, first_violation)``."""
    if e.source.k != e.target.k:
        return False, f"vertex counts differ: {e.source.k} vs {e.target.k}"
    blocks = e.as_dict()
    if set(blocks) != set(e.source.ids):
        missing = sorted(set(e.source.ids) - set(blocks))
        extra = sorted(set(blocks) - set(e.source.ids))
        return False, f"block keys do not match source atoms (missing {missing}, extra {extra})"
    seen: Dict[str, str] = {}
    for a in e.source.ids:
        block = blocks[a]
        if not block:
            return False, f"block of {a} is empty"
        for b in sorted(block):
            if b not in e.target:
                return False, f"block of {a} names unknown target atom {b}"
            if b in seen:
                return False, f"target atom {b} lies in the blocks of both {seen[b]} and {a}"
            seen[b] = a
    uncovered = sorted(set(e.target.ids) - set(seen))
    if uncovered:
        return False, f"target atoms {uncovered} are not covered by any block"
    for a in e.source.ids:
        got = e.target.measure(blocks[a])
        want = e.source.vector(a)
        if got != want:
            return False, (
                f"block of {a} has measure {tuple(map(str, got))}, "
                f"expected {tuple(map(str, want))}"
            )
    return True, None


def compose(first: Embedding, second: Embedding) -> Embedding:
    """Block composition ``second o first``."""
    if first.target != second.source:
        raise ValueError("embeddings are not composable")
    inner = second.as_dict()
    blocks = {a: frozenset().union(*(inner[b] for b in blk)) for a, blk in first.blocks}
    return Embedding(first.source, second.target, blocks)


def restrict_to_face(algebra: FiniteMeasuredAlgebra, vertices: Sequence[int]) -> FiniteMeasuredAlgebra:
    """Project every atom's vector onto the given vertex indices (0-based)."""
    vertices = list(vertices)
    if not vertices:
        raise ValueError("face must contain at least one vertex")
    if any(not 0 <= i < algebra.k for i in vertices) or len(set(vertices)) != len(vertices):
        raise ValueError(f"bad vertex subset {vertices} for k={algebra.k}")
    return FiniteMeasuredAlgebra(
        len(vertices), tuple((a, restrict(v, vertices)) for a, v in algebra.atoms)
    )


def restrict_embedding(e: Embedding, vertices: Sequence[int]) -> Embedding:
    return Embedding(
        restrict_to_face(e.source, vertices), restrict_to_face(e.target, vertices), e.blocks
    )


def isomorphic(a1: FiniteMeasuredAlgebra, a2: FiniteMeasuredAlgebra) -> bool:
    """Isomorphism up to atom permutation: equal multisets of vectors."""
    return a1.k == a2.k and sorted(a1.vectors()) == sorted(a2.vectors())


# -- serialization -----------------------------------------------------------

def algebra_to_json(algebra: FiniteMeasuredAlgebra) -> dict:
    return {
        "schema": ALGEBRA_SCHEMA,
        "k": algebra.k,
        "atoms": [{"id": a, "mu": format_vector(v)} for a, v in algebra.atoms],
    }


def algebra_from_json(data: dict) -> FiniteMeasuredAlgebra:
    if not isinstance(data, dict):
        raise ValueError("algebra must be a JSON object")
    schema = data.get("schema", ALGEBRA_SCHEMA)
    if schema != ALGEBRA_SCHEMA:
        raise ValueError(f"unexpected schema {schema!r}")
    try:
        k = int(data["k"])
        atoms = [(str(item["id"]), parse_vector(item["mu"])) for item in data["atoms"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed algebra: {exc}") from exc
    return FiniteMeasuredAlgebra(k, tuple(atoms))


def embedding_to_json(e: Embedding) -> dict:
    return {
        "schema": EMBEDDING_SCHEMA,
        "blocks": {a: sorted(b) for a, b in e.blocks},
    }


def embedding_from_json(data: dict, source: FiniteMeasuredAlgebra,
                        target: FiniteMeasuredAlgebra) -> Embedding:
    if not isinstance(data, dict) or "blocks" not in data:
        raise ValueError("malformed embedding")
    schema = data.get("schema", EMBEDDING_SCHEMA)
    if schema != EMBEDDING_SCHEMA:
        raise ValueError(f"unexpected schema {schema!r}")
    blocks = data["blocks"]
    if not isinstance(blocks, dict):
        raise ValueError("embedding blocks must be an object")
    return Embedding(source, target, {str(a): frozenset(map(str, b)) for a, b in blocks.items()})
