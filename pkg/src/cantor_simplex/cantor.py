"""Clopen subsets of {0,1}^N, prefix-exchange maps and cylinder measures.

A clopen set is a finite union of cylinders ``[w]``.  :class:`ClopenSet`
keeps the unique minimal prefix-free word list (no word is a prefix of
another and complete sibling pairs are merged), so equal sets have equal
representations.  The empty word denotes the whole space.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .vectors import format_rational, parse_rational

CLOPEN_SCHEMA = "clopen.v1"
PREFIXMAP_SCHEMA = "prefixmap.v1"


def _check_word(w: str) -> str:
    if not isinstance(w, str) or w.strip("01"):
        raise ValueError(f"not a binary word: {w!r}")
    return w


def _canonical(words: Iterable[str]) -> Tuple[str, ...]:
    # drop words that have a proper prefix in the set: in sorted order every
    # extension of a word follows it directly, before any unrelated word
    kept = set()
    last = None
    for w in sorted(set(words)):
        if last is not None and w.startswith(last):
            continue
        kept.add(w)
        last = w
    # merge complete sibling pairs, longest words first
    by_len: Dict[int, set] = {}
    for w in kept:
        by_len.setdefault(len(w), set()).add(w)
    for n in range(max(by_len, default=0), 0, -1):
        level = by_len.get(n, set())
        for w in sorted(level):
            if w not in level or w[-1] != "0":
                continue
            sib = w[:-1] + "1"
            if sib in level:
                level.discard(w)
                level.discard(sib)
                by_len.setdefault(n - 1, set()).add(w[:-1])
    return tuple(sorted(w for ws in by_len.values() for w in ws))


@dataclass(frozen=True)
class ClopenSet:
    words: Tuple[str, ...] = ()
    _lookup: frozenset = field(default=frozenset(), repr=False, compare=False, hash=False)

    def __post_init__(self):
        words = _canonical(_check_word(w) for w in self.words)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "_lookup", frozenset(words))

    @classmethod
    def of(cls, *words: str) -> "ClopenSet":
        return cls(tuple(words))

    @classmethod
    def full(cls) -> "ClopenSet":
        return cls(("",))

    @classmethod
    def empty(cls) -> "ClopenSet":
        return cls(())

    def __bool__(self):
        return bool(self.words)

    def __iter__(self):
        return iter(self.words)

    def __len__(self):
        return len(self.words)

    def max_depth(self) -> int:
        return max((len(w) for w in self.words), default=0)

    def _covering(self, w: str) -> Optional[str]:
        """The word of the set that is a prefix of ``w`` (or ``w`` itself)."""
        for i in range(len(w) + 1):
            if w[:i] in self._lookup:
                return w[:i]
        return None

    def _below(self, w: str) -> List[str]:
        """Words of the set having ``w`` as a proper prefix."""
        i = bisect_left(self.words, w)
        out = []
        while i < len(self.words) and self.words[i].startswith(w):
            if self.words[i] != w:
                out.append(self.words[i])
            i += 1
        return out

    def contains_point(self, prefix: str) -> bool:
        """True when every point starting with ``prefix`` lies in the set."""
        return self._covering(prefix) is not None

    def __and__(self, other: "ClopenSet") -> "ClopenSet":
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        out = []
        for w in small.words:
            if big._covering(w) is not None:
                out.append(w)
            else:
                out.extend(big._below(w))
        return ClopenSet(tuple(out))

    def __or__(self, other: "ClopenSet") -> "ClopenSet":
        return ClopenSet(self.words + other.words)

    def __sub__(self, other: "ClopenSet") -> "ClopenSet":
        out: List[str] = []

        def minus(w: str):
            if other._covering(w) is not None:
                return
            if not other._below(w):
                out.append(w)
                return
            minus(w + "0")
            minus(w + "1")

        for w in self.words:
            minus(w)
        return ClopenSet(tuple(out))

    def isdisjoint(self, other: "ClopenSet") -> bool:
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        return all(big._covering(w) is None and not big._below(w) for w in small.words)

    def issubset(self, other: "ClopenSet") -> bool:
        return not (self - other)

    def expand(self, depth: int) -> List[str]:
        """All words of length ``depth`` whose cylinders lie in the set."""
        out = []
        for w in self.words:
            if len(w) > depth:
                raise ValueError(f"word {w} is longer than {depth}")
            pad = depth - len(w)
            out.extend(w + format(i, f"0{pad}b") if pad else w for i in range(2 ** pad))
        return sorted(out)

    def to_json(self) -> dict:
        return {"schema": CLOPEN_SCHEMA, "words": list(self.words)}

    @classmethod
    def from_json(cls, data) -> "ClopenSet":
        if isinstance(data, list):
            return cls(tuple(data))
        if not isinstance(data, dict) or not isinstance(data.get("words"), list):
            raise ValueError("malformed clopen set")
        if data.get("schema", CLOPEN_SCHEMA) != CLOPEN_SCHEMA:
            raise ValueError(f"unexpected schema {data.get('schema')!r}")
        return cls(tuple(data["words"]))


# -- measures ----------------------------------------------------------------

@dataclass(frozen=True)
class BernoulliMeasure:
    """Product measure giving each digit 1 with probability ``p``."""

    p: Fraction

    def __post_init__(self):
        p = parse_rational(self.p)
        if not 0 < p < 1:
            raise ValueError("Bernoulli parameter must lie strictly between 0 and 1")
        object.__setattr__(self, "p", p)

    def cylinder(self, w: str) -> Fraction:
        ones = w.count("1")
        return self.p ** ones * (1 - self.p) ** (len(w) - ones)

    def label(self) -> str:
        return format_rational(self.p)


UNIFORM = BernoulliMeasure(Fraction(1, 2))


def cylinder_measure(S: ClopenSet, m: BernoulliMeasure = UNIFORM) -> Fraction:
    return sum((m.cylinder(w) for w in S.words), Fraction(0))


# -- prefix maps -------------------------------------------------------------

def _is_complete_code(words: Sequence[str]) -> bool:
    ordered = sorted(words)
    if any(b.startswith(a) for a, b in zip(ordered, ordered[1:])):
        return False
    return sum(Fraction(1, 2 ** len(w)) for w in words) == 1


@dataclass(frozen=True)
class PrefixMapHomeo:
    """The map ``u y -> v y`` for each rule ``(u, v)``; sources and targets are complete codes."""

    rules: Tuple[Tuple[str, str], ...]

    def __post_init__(self):
        rules = tuple(sorted((_check_word(u), _check_word(v)) for u, v in self.rules))
        if not _is_complete_code([u for u, _ in rules]):
            raise ValueError("rule sources are not a complete prefix code")
        if not _is_complete_code([v for _, v in rules]):
            raise ValueError("rule targets are not a complete prefix code")
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "_by_source", dict(rules))
        object.__setattr__(self, "_sources", tuple(u for u, _ in rules))

    @classmethod
    def identity(cls) -> "PrefixMapHomeo":
        return cls((("", ""),))

    def image_word(self, w: str) -> List[str]:
        for i in range(len(w) + 1):
            t = self._by_source.get(w[:i])
            if t is not None:
                return [t + w[i:]]
        i = bisect_left(self._sources, w)
        out = []
        while i < len(self._sources) and self._sources[i].startswith(w):
            out.append(self._by_source[self._sources[i]])
            i += 1
        return out

    def __call__(self, S: ClopenSet) -> ClopenSet:
        out: List[str] = []
        for w in S.words:
            out.extend(self.image_word(w))
        return ClopenSet(tuple(out))

    def point(self, x: str) -> str:
        """Image of a finite prefix that is long enough to pass a source word."""
        for i in range(len(x) + 1):
            t = self._by_source.get(x[:i])
            if t is not None:
                return t + x[i:]
        raise ValueError(f"prefix {x!r} is too short to be mapped")

    def inverse(self) -> "PrefixMapHomeo":
        return PrefixMapHomeo(tuple((v, u) for u, v in self.rules))

    def then(self, g: "PrefixMapHomeo") -> "PrefixMapHomeo":
        """The composite ``g o self`` (apply ``self`` first)."""
        rules = []
        for u, v in self.rules:
            hit = None
            for i in range(len(v) + 1):
                t = g._by_source.get(v[:i])
                if t is not None:
                    hit = (u, t + v[i:])
                    break
            if hit is not None:
                rules.append(hit)
                continue
            for s, t in g.rules:
                if s.startswith(v):
                    rules.append((u + s[len(v):], t))
        return PrefixMapHomeo(tuple(rules))

    def to_json(self) -> dict:
        return {"schema": PREFIXMAP_SCHEMA, "rules": [[u, v] for u, v in self.rules]}

    @classmethod
    def from_json(cls, data) -> "PrefixMapHomeo":
        if not isinstance(data, dict) or not isinstance(data.get("rules"), list):
            raise ValueError("malformed prefix map")
        if data.get("schema", PREFIXMAP_SCHEMA) != PREFIXMAP_SCHEMA:
            raise ValueError(f"unexpected schema {data.get('schema')!r}")
        return cls(tuple((str(u), str(v)) for u, v in data["rules"]))


def swap_map(u: str, v: str) -> PrefixMapHomeo:
    """Exchange ``[u]`` and ``[v]`` (equal lengths), identity elsewhere."""
    if len(u) != len(v) or u == v:
        raise ValueError("a swap needs two distinct words of equal length")
    rest = ClopenSet.full() - ClopenSet.of(u, v)
    return PrefixMapHomeo(((u, v), (v, u)) + tuple((w, w) for w in rest.words))


def _swap_words(u: str, v: str, words: Iterable[str]) -> List[str]:
    """Image under the swap ``[u] <-> [v]`` of the union of the cylinders ``words``."""
    out: List[str] = []
    for w in words:
        if w.startswith(u):
            out.append(v + w[len(u):])
        elif w.startswith(v):
            out.append(u + w[len(v):])
        else:
            has_u, has_v = u.startswith(w), v.startswith(w)
            if has_u == has_v:
                # untouched, or containing both cylinders
                out.append(w)
                continue
            inside, other = (u, v) if has_u else (v, u)
            # [w] minus [inside], then [other] in its place
            out.extend(inside[:i] + ("1" if inside[i] == "0" else "0")
                       for i in range(len(w), len(inside)))
            out.append(other)
    return out


# -- generators and words ----------------------------------------------------

GroupWord = Tuple[Tuple[int, int], ...]


class GeneratorPool:
    """Append-only registry of swap generators; a word refers to them by index."""

    def __init__(self, swaps: Iterable[Tuple[str, str]] = ()):
        self.swaps: List[Tuple[str, str]] = []
        self._index: Dict[Tuple[str, str], int] = {}
        for u, v in swaps:
            self.swap(u, v)

    def __len__(self):
        return len(self.swaps)

    def swap(self, u: str, v: str) -> int:
        key = (min(u, v), max(u, v))
        if key not in self._index:
            if len(u) != len(v) or u == v:
                raise ValueError("a swap needs two distinct words of equal length")
            _check_word(u)
            _check_word(v)
            self.swaps.append(key)
            self._index[key] = len(self.swaps) - 1
        return self._index[key]

    def letter(self, u: str, v: str) -> GroupWord:
        return ((self.swap(u, v), 1),)

    def weight_preserving(self, word: GroupWord = None) -> bool:
        idx = range(len(self.swaps)) if word is None else [g for g, _ in word]
        return all(self.swaps[g][0].count("1") == self.swaps[g][1].count("1") for g in idx)

    def _check(self, word: GroupWord):
        for g, e in word:
            if not 0 <= g < len(self.swaps) or e not in (1, -1):
                raise ValueError(f"bad letter {(g, e)} for a pool of {len(self.swaps)} generators")

    def apply(self, word: GroupWord, S: ClopenSet) -> ClopenSet:
        """Image of ``S``; the rightmost letter acts first."""
        self._check(word)
        words: Iterable[str] = S.words
        for g, _ in reversed(word):
            # every generator is a swap, hence its own inverse
            words = _swap_words(*self.swaps[g], words)
        return ClopenSet(tuple(words))

    def evaluate(self, word: GroupWord) -> PrefixMapHomeo:
        self._check(word)
        out = PrefixMapHomeo.identity()
        for g, _ in reversed(word):
            out = out.then(swap_map(*self.swaps[g]))
        return out

    def translate(self, other: "GeneratorPool", word: GroupWord) -> GroupWord:
        """Rewrite a word over ``other`` as a word over this pool."""
        return tuple((self.swap(*other.swaps[g]), e) for g, e in word)

    def to_json(self) -> List[List[str]]:
        return [list(s) for s in self.swaps]


def reduce_word(word: Iterable[Tuple[int, int]]) -> GroupWord:
    """Free reduction, using that every generator is an involution."""
    out: List[Tuple[int, int]] = []
    for g, _ in word:
        if out and out[-1][0] == g:
            out.pop()
        else:
            out.append((g, 1))
    return tuple(out)


def word_mul(g: GroupWord, h: GroupWord) -> GroupWord:
    """``g . h``: apply ``h`` first."""
    return reduce_word(tuple(g) + tuple(h))


def word_inverse(g: GroupWord) -> GroupWord:
    return tuple((i, -e) for i, e in reversed(g))


def apply_prefix_map(g, S: ClopenSet, pool: Optional[GeneratorPool] = None) -> ClopenSet:
    """Image of ``S`` under a prefix map, or under a group word over ``pool``."""
    if isinstance(g, PrefixMapHomeo):
        return g(S)
    if pool is None:
        raise ValueError("a group word needs its generator pool")
    return pool.apply(tuple(g), S)
