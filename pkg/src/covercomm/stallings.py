"""Finitely generated subgroups of free groups as folded based graphs.

Words are strings over the first ``rank`` lowercase letters; an uppercase
letter is the inverse generator.  A :class:`SubgroupGraph` is always stored
folded, core-trimmed (hanging trees removed, the basepoint kept) and in
canonical numbering: vertices are numbered in breadth-first order from the
basepoint, scanning signed letters in the order ``a < A < b < B < ...``.  Two
subgroups are equal exactly when their canonical forms agree.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Optional, Sequence

from .errors import InputError
from .graph import Graph, GraphMorphism, build_graph, rose

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


class InfiniteIndexError(InputError):
    pass


def generators(rank: int) -> str:
    if not 0 <= rank <= len(ALPHABET):
        raise InputError(f"ambient rank must be between 0 and {len(ALPHABET)}")
    return ALPHABET[:rank]


def signed_letters(rank: int) -> list:
    out = []
    for x in generators(rank):
        out += [x, x.upper()]
    return out


def inv_letter(x: str) -> str:
    return x.lower() if x.isupper() else x.upper()


def free_reduce(word: str) -> str:
    out = []
    for x in word:
        if out and out[-1] == inv_letter(x):
            out.pop()
        else:
            out.append(x)
    return "".join(out)


def inverse(word: str) -> str:
    return "".join(inv_letter(x) for x in reversed(word))


def multiply(*words: str) -> str:
    return free_reduce("".join(words))


def parse_word(text: str, rank: int) -> str:
    """Validate ``text`` against the rank-``rank`` alphabet and reduce it."""
    allowed = set(signed_letters(rank))
    word = text.strip()
    if word in ("1", "e"):
        return ""
    for i, x in enumerate(word):
        if x not in allowed:
            raise InputError(f"letter {x!r} at position {i + 1} of {text!r} is outside the rank-{rank} alphabet")
    return free_reduce(word)


def substitute(word: str, images: Sequence[str]) -> str:
    """Image of ``word`` under the homomorphism sending generator j to images[j]."""
    parts = []
    for x in word:
        j = ALPHABET.index(x.lower())
        parts.append(images[j] if x.islower() else inverse(images[j]))
    return free_reduce("".join(parts))


class _Folder:
    """Stallings folding with optional tracking of preimage labels.

    Each directed edge carries a reduced word over the generator names (the
    "label"); around any closed path at the basepoint the labels multiply to
    an element whose image is the word read along the path.  Identifying two
    vertices conjugates the labels at the absorbed vertex (a gauge change),
    which keeps every basepoint loop's label product unchanged.
    """

    def __init__(self, n_vertices: int, base: int):
        self.out = [dict() for _ in range(n_vertices)]
        self.alive = [True] * n_vertices
        self.base = base
        self.kernel = []
        self.forward = {}  # absorbed vertex -> (vertex it went into, gauge)

    def resolve(self, x):
        g = ""
        while x in self.forward:
            x, h = self.forward[x]
            g += h
        return x, free_reduce(g)

    def add(self, u, s, v, lab):
        pending = [(u, s, v, lab)]
        while pending:
            u, s, v, lab = pending.pop()
            ru, gu = self.resolve(u)
            rv, gv = self.resolve(v)
            u, v, lab = ru, rv, multiply(inverse(gu), lab, gv)
            cur = self.out[u].get(s)
            if cur is None:
                back = self.out[v].get(inv_letter(s))
                if back is None:
                    self.out[u][s] = (v, lab)
                    self.out[v][inv_letter(s)] = (u, inverse(lab))
                    continue
                u, s, v, lab = v, inv_letter(s), u, inverse(lab)
                cur = back
            w, mu = cur
            if w == v:
                loop = multiply(lab, inverse(mu))
                if loop:
                    self.kernel.append(loop)
                continue
            if v == self.base:
                gone, keep, g = w, v, multiply(inverse(mu), lab)
            else:
                gone, keep, g = v, w, multiply(inverse(lab), mu)
            pending = [self._transform(e, gone, keep, g) for e in pending]
            pending.append(self._transform((u, s, v, lab), gone, keep, g))
            for s2, (t2, l2) in list(self.out[gone].items()):
                if t2 != gone:
                    self.out[t2].pop(inv_letter(s2), None)
                pending.append(self._transform((gone, s2, t2, l2), gone, keep, g))
            self.out[gone] = {}
            self.alive[gone] = False
            self.forward[gone] = (keep, g)

    @staticmethod
    def _transform(edge, gone, keep, g):
        a, s, b, lab = edge
        if a == gone:
            lab = inverse(g) + lab
            a = keep
        if b == gone:
            lab = lab + g
            b = keep
        return (a, s, b, free_reduce(lab))

    def trim(self):
        changed = True
        while changed:
            changed = False
            for v, alive in enumerate(self.alive):
                if alive and v != self.base and len(self.out[v]) <= 1:
                    for s, (t, _) in self.out[v].items():
                        self.out[t].pop(inv_letter(s), None)
                    self.out[v] = {}
                    self.alive[v] = False
                    changed = True


class SubgroupGraph:
    """Folded core graph of a subgroup of the free group of rank ``rank``."""

    __slots__ = ("rank", "transitions", "labels", "n_generators", "kernel_witnesses", "_key")

    def __init__(self, rank, transitions, labels=None, n_generators=None, kernel_witnesses=()):
        self.rank = rank
        self.transitions = transitions  # list of {signed letter: vertex}
        self.labels = labels  # list of {signed letter: generator word} or None
        self.n_generators = n_generators
        self.kernel_witnesses = tuple(kernel_witnesses)
        order = signed_letters(rank)
        self._key = (rank, tuple(tuple(t.get(x, -1) for x in order) for t in transitions))

    basepoint = 0

    @property
    def n_vertices(self) -> int:
        return len(self.transitions)

    @property
    def n_edges(self) -> int:
        return sum(len(t) for t in self.transitions) // 2

    @property
    def free_rank(self) -> int:
        return self.n_edges - self.n_vertices + 1

    def is_complete(self) -> bool:
        return all(len(t) == 2 * self.rank for t in self.transitions)

    def canonical_form(self) -> tuple:
        return self._key

    def __eq__(self, other):
        if not isinstance(other, SubgroupGraph):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        idx = index(self)
        return f"SubgroupGraph(rank={self.rank}, |V|={self.n_vertices}, free_rank={self.free_rank}, index={idx})"

    def read(self, word: str, start: int = 0) -> Optional[int]:
        v = start
        for x in word:
            v = self.transitions[v].get(x)
            if v is None:
                return None
        return v

    @property
    def graph(self) -> Graph:
        return to_graph(self)


def _canonical(rank, folder: _Folder, track: bool, n_generators=None) -> SubgroupGraph:
    order = signed_letters(rank)
    base = folder.base
    number = {base: 0}
    queue = deque([base])
    seq = [base]
    while queue:
        v = queue.popleft()
        for x in order:
            hit = folder.out[v].get(x)
            if hit is not None and hit[0] not in number:
                number[hit[0]] = len(number)
                seq.append(hit[0])
                queue.append(hit[0])
    transitions = [{x: number[t] for x, (t, _) in folder.out[v].items()} for v in seq]
    labels = [{x: lab for x, (_, lab) in folder.out[v].items()} for v in seq] if track else None
    return SubgroupGraph(rank, transitions, labels, n_generators, folder.kernel)


def subgroup_graph(ambient_rank: int, gens: Iterable[str]) -> SubgroupGraph:
    """Stallings graph of the subgroup generated by ``gens``.

    Generator ``j`` is tracked under the name ``ALPHABET[j]`` so that members
    can be rewritten in terms of the given generators (see :func:`express`).
    """
    words = [parse_word(w, ambient_rank) for w in gens]
    if len(words) > len(ALPHABET):
        raise InputError("too many generators")
    n = 1 + sum(max(len(w) - 1, 0) for w in words)
    folder = _Folder(n, 0)
    kernel = []
    nxt = 1
    for j, w in enumerate(words):
        name = ALPHABET[j]
        if not w:
            kernel.append(name)
            continue
        prev = 0
        for k, x in enumerate(w):
            last = k == len(w) - 1
            tgt = 0 if last else nxt
            if not last:
                nxt += 1
            folder.add(prev, x, tgt, name if k == 0 else "")
            prev = tgt
    folder.kernel[:0] = kernel
    folder.trim()
    return _canonical(ambient_rank, folder, True, len(words))


def from_edges(rank: int, n_vertices: int, edges: Iterable[tuple], base: int = 0) -> SubgroupGraph:
    """Fold and trim a labelled graph given as ``(u, letter, v)`` triples."""
    folder = _Folder(n_vertices, base)
    for u, x, v in edges:
        folder.add(u, x, v, "")
    folder.trim()
    return _canonical(rank, folder, False)


def from_graph(g: Graph, basepoint: str, rank: int) -> SubgroupGraph:
    """Subgroup read off a labelled graph at ``basepoint`` (folded and trimmed)."""
    allowed = set(generators(rank))
    index_of = {v: i for i, v in enumerate(g.vertices)}
    edges = []
    for _, src, dst, lab in g.edges():
        if lab is None or lab not in allowed:
            raise InputError(f"label {lab!r} outside the rank-{rank} alphabet")
        edges.append((index_of[src], lab, index_of[dst]))
    return from_edges(rank, len(g.vertices), edges, index_of[basepoint])


def from_permutations(rank: int, perms: dict, base: int = 0) -> SubgroupGraph:
    """Point stabiliser of ``base`` for the right action given by ``perms``.

    ``perms`` maps each generator letter to a permutation tuple; a word acts
    letter by letter from the left.
    """
    order = signed_letters(rank)
    inv_perms = {}
    for x in generators(rank):
        p = perms[x]
        q = [0] * len(p)
        for i, j in enumerate(p):
            q[j] = i
        inv_perms[x] = tuple(p)
        inv_perms[x.upper()] = tuple(q)
    number = {base: 0}
    seq = [base]
    queue = deque([base])
    while queue:
        v = queue.popleft()
        for x in order:
            w = inv_perms[x][v]
            if w not in number:
                number[w] = len(number)
                seq.append(w)
                queue.append(w)
    transitions = [{x: number[inv_perms[x][v]] for x in order} for v in seq]
    return SubgroupGraph(rank, transitions)


def to_graph(s: SubgroupGraph, name: str = "") -> Graph:
    edges = []
    k = 0
    for v, t in enumerate(s.transitions):
        for x in generators(s.rank):
            if x in t:
                edges.append((f"e{k}", str(v), str(t[x]), x))
                k += 1
    return build_graph([str(v) for v in range(s.n_vertices)], edges, name=name)


def membership(s: SubgroupGraph, word: str) -> bool:
    return s.read(free_reduce(word)) == 0


def express(s: SubgroupGraph, word: str) -> Optional[str]:
    """Rewrite a member of ``s`` as a word in the generators ``s`` was built from.

    Only available for graphs produced by :func:`subgroup_graph`.  Returns
    None for non-members.
    """
    if s.labels is None:
        raise InputError("this subgroup graph does not track its generators")
    v, parts = 0, []
    for x in free_reduce(word):
        if x not in s.transitions[v]:
            return None
        parts.append(s.labels[v][x])
        v = s.transitions[v][x]
    return free_reduce("".join(parts)) if v == 0 else None


def index(s: SubgroupGraph):
    """Index in the ambient free group; ``math.inf`` when infinite."""
    return s.n_vertices if s.is_complete() else math.inf


def schreier_representatives(s: SubgroupGraph) -> list:
    """Word from the basepoint to each vertex along the canonical BFS tree."""
    reps = [None] * s.n_vertices
    reps[0] = ""
    order = signed_letters(s.rank)
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for x in order:
            w = s.transitions[v].get(x)
            if w is not None and reps[w] is None:
                reps[w] = reps[v] + x
                queue.append(w)
    return reps


def basis(s: SubgroupGraph) -> list:
    """Free basis read from the canonical spanning tree."""
    reps = schreier_representatives(s)
    tree = set()
    for v, r in enumerate(reps):
        if r:
            u = s.read(r[:-1])
            tree.add((u, r[-1], v))
    out = []
    for u, t in enumerate(s.transitions):
        for x in generators(s.rank):
            if x in t:
                v = t[x]
                if (u, x, v) in tree or (v, x.upper(), u) in tree:
                    continue
                out.append(multiply(reps[u], x, inverse(reps[v])))
    return out


def conjugate(s: SubgroupGraph, word: str) -> SubgroupGraph:
    """Graph of ``w S w^-1``."""
    w = free_reduce(word)
    if not w:
        return s
    if s.is_complete():
        u = s.read(inverse(w))
        return _rebase(s, u)
    n = s.n_vertices
    edges = [(u, x, v) for u, t in enumerate(s.transitions) for x, v in t.items() if x.islower()]
    # new basepoint n, then a path spelling w that ends at the old basepoint 0
    path = [n] + list(range(n + 1, n + len(w))) + [0]
    for k, x in enumerate(w):
        a, b = path[k], path[k + 1]
        edges.append((a, x, b) if x.islower() else (b, x.lower(), a))
    return from_edges(s.rank, n + len(w), edges, base=n)


def _rebase(s: SubgroupGraph, new_base: int) -> SubgroupGraph:
    order = signed_letters(s.rank)
    number = {new_base: 0}
    seq = [new_base]
    queue = deque([new_base])
    while queue:
        v = queue.popleft()
        for x in order:
            w = s.transitions[v].get(x)
            if w is not None and w not in number:
                number[w] = len(number)
                seq.append(w)
                queue.append(w)
    return SubgroupGraph(s.rank, [{x: number[w] for x, w in s.transitions[v].items()} for v in seq])


def _rose_map(s: SubgroupGraph, target: Graph) -> GraphMorphism:
    g = to_graph(s)
    dmap = {d: (g.label[d] if g.label[d].islower() else g.label[d].lower() + "'") for d in g.darts}
    return GraphMorphism(g, target, {v: "o" for v in g.vertices}, dmap)


def intersect(s1: SubgroupGraph, s2: SubgroupGraph) -> SubgroupGraph:
    """Based component of the fiber product of the two graphs over the rose."""
    from .covering import fiber_product

    if s1.rank != s2.rank:
        raise InputError(f"ambient ranks differ: {s1.rank} vs {s2.rank}")
    r = rose(list(generators(s1.rank)))
    prod, _, _ = fiber_product(_rose_map(s1, r), _rose_map(s2, r))
    return from_graph(prod, "(0,0)", s1.rank)


def is_normal(s: SubgroupGraph) -> bool:
    return all(conjugate(s, x) == s for x in generators(s.rank))


def _require_finite(s: SubgroupGraph, what: str):
    if not s.is_complete():
        raise InfiniteIndexError(f"{what} needs a finite-index subgroup")


def coset_action(s: SubgroupGraph) -> dict:
    """Right action of the generators on the cosets (vertices) of ``s``."""
    _require_finite(s, "coset_action")
    return {x: tuple(t[x] for t in s.transitions) for x in generators(s.rank)}


def normal_core(s: SubgroupGraph) -> SubgroupGraph:
    """Intersection of all conjugates of a finite-index subgroup.

    The conjugate based at vertex ``v`` is ``r_v^-1 S r_v`` for the Schreier
    representative ``r_v``; the based component of the product of all of them
    is the orbit of the tuple ``(0, 1, ..., n-1)`` under the diagonal action.
    """
    _require_finite(s, "normal_core")
    order = signed_letters(s.rank)
    table = {x: tuple(t[x] for t in s.transitions) for x in order}
    start = tuple(range(s.n_vertices))
    number = {start: 0}
    seq = [start]
    transitions = []
    queue = deque([start])
    while queue:
        pt = queue.popleft()
        row = {}
        for x in order:
            p = table[x]
            img = tuple(p[i] for i in pt)
            if img not in number:
                number[img] = len(number)
                seq.append(img)
                queue.append(img)
            row[x] = number[img]
        transitions.append(row)
    return SubgroupGraph(s.rank, transitions)


def preimage(s: SubgroupGraph, images: Sequence[str], source_rank: int) -> SubgroupGraph:
    """Preimage of a finite-index subgroup under ``F_m -> F_n``, generator j -> images[j].

    This is the based component of the fiber product of ``s`` with the rose
    whose petals spell the image words; for a complete ``s`` it is the
    stabiliser of the basepoint under the pulled-back coset action.
    """
    _require_finite(s, "preimage")
    perms = {}
    for j, x in enumerate(generators(source_rank)):
        w = images[j]
        perms[x] = tuple(s.read(w, v) for v in range(s.n_vertices))
    return from_permutations(source_rank, perms)


def enumerate_words(rank: int, max_length: int):
    """All reduced words of length <= max_length, shortest first."""
    letters = signed_letters(rank)
    layer = [""]
    yield ""
    for _ in range(max_length):
        nxt = []
        for w in layer:
            for x in letters:
                if w and w[-1] == inv_letter(x):
                    continue
                nxt.append(w + x)
        yield from nxt
        layer = nxt
