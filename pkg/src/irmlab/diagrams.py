"""Exact ribbon-diagram combinatorics.

Pipeline: polygons with marked first corners are glued along a pairing of
their directed sides (opposite orientation only in the complex case beta=2,
same or opposite in the real case beta=1); unglued sides are open edges
carrying deformation powers.  The glued complex is reduced by collapsing
pendant (Catalan-tree) edges and absorbing unmarked divalent vertices into
edge weights; the reduced diagram is evaluated as a sum over vertex labelings
of products of n-step transition probabilities (interior edges, weight w
gives p_w) and deformation powers A^w (open edges).

Conventions that the exact tests pin down:

* a face of perimeter zero contributes an isolated marked vertex worth a
  factor N;
* gluings that collapse any tree do not appear in the skeleton sum at their
  own perimeter; they are accounted by the binomial prefactors at lower
  perimeter (the half-binomial applies at l = 0);
* mixed chains (interior + open through an unmarked divalent vertex) are
  combinatorially impossible; the contraction asserts this.

The Wick oracle computes the same mixed trace moments directly from scalar
Gaussian entry moments over all index tuples and never touches the gluing
machinery, so the two sides of each verified identity are independent.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from fractions import Fraction

import numpy as np


class BudgetError(RuntimeError):
    """Requested enumeration exceeds the configured cost budget."""


class GluingError(ValueError):
    pass


MAX_GLUINGS = 5_000_000
MAX_WICK_TUPLES = 5_000_000


# ---------------------------------------------------------------------------
# gluing objects
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RibbonGluing:
    perimeters: tuple
    open_edges: frozenset        # subset J of step labels left unglued
    pairing: tuple               # perfect matching on the complement
    orientations: tuple          # per pair: 'opp' | 'same' ('opp' only when beta=2)
    beta: int = 1


class _UF:
    __slots__ = ("p",)

    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        self.p[self.find(a)] = self.find(b)


def _faces_and_gamma(perimeters):
    faces, gamma, face_of = [], {}, {}
    k = 0
    for j, m in enumerate(perimeters):
        steps = list(range(k, k + m))
        faces.append(steps)
        for i, s in enumerate(steps):
            gamma[s] = steps[(i + 1) % m]
            face_of[s] = j
        k += m
    return faces, gamma, face_of, k


def _matchings(items):
    if not items:
        yield ()
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for m in _matchings(rest):
            yield ((a, items[i]),) + m


def _double_fact(n):
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def gluing_count(perimeters, beta, allow_open):
    """Exact number of gluings the enumerator will produce."""
    k = sum(perimeters)
    total = 0
    opens = range(0, k + 1) if allow_open else (0,)
    for o in opens:
        g = k - o
        if g % 2:
            continue
        pairs = _double_fact(g - 1) if g else 1
        orient = 2 ** (g // 2) if beta == 1 else 1
        total += math.comb(k, o) * pairs * orient
    return total


def enumerate_gluings(perimeters, beta, allow_open=False):
    """Stream every admissible gluing exactly once (budget-guarded)."""
    perimeters = tuple(int(m) for m in perimeters)
    if beta not in (1, 2):
        raise GluingError("beta must be 1 or 2")
    count = gluing_count(perimeters, beta, allow_open)
    if count > MAX_GLUINGS:
        raise BudgetError(
            f"enumeration of {count} gluings exceeds budget {MAX_GLUINGS}")
    k = sum(perimeters)
    steps = list(range(k))
    open_sets = [frozenset()]
    if allow_open:
        open_sets = [frozenset(c)
                     for o in range(0, k + 1) if (k - o) % 2 == 0
                     for c in itertools.combinations(steps, o)]
    for J in open_sets:
        glued = [s for s in steps if s not in J]
        for pm in _matchings(glued):
            if beta == 2:
                yield RibbonGluing(perimeters, J, pm, ("opp",) * len(pm), beta)
            else:
                for ors in itertools.product(("opp", "same"), repeat=len(pm)):
                    yield RibbonGluing(perimeters, J, pm, ors, beta)


# ---------------------------------------------------------------------------
# glued complex
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class GluedComplex:
    gluing: RibbonGluing
    vertex_of_corner: list       # corner -> vertex class id
    n_vertices: int
    edges: list                  # (kind 'p'|'a', u, v) in owner-step direction
    edge_of_step: dict           # step -> edge index
    face_steps: list             # per face: step labels in order
    marks: list                  # per face: vertex class of the marked corner

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.face_steps)

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self):
        # orientable reading of chi = 2 - 2g for a connected complex
        return (2 - self.euler_characteristic) // 2

    def degrees(self):
        deg = [0] * self.n_vertices
        for _, u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def glue(gluing):
    """Realize the polygon gluing; vertex identifications via union-find."""
    if any(m < 1 for m in gluing.perimeters):
        raise GluingError("glue needs positive perimeters (zero faces are "
                          "handled as trivial factors by the sum level)")
    faces, gamma, _face_of, k = _faces_and_gamma(gluing.perimeters)
    seen = set()
    for (s, t) in gluing.pairing:
        if s in seen or t in seen or s == t:
            raise GluingError("overlapping pair indices")
        seen.add(s)
        seen.add(t)
    if seen & set(gluing.open_edges):
        raise GluingError("open edge also appears in the pairing")
    uf = _UF(k)
    for (s, t), o in zip(gluing.pairing, gluing.orientations):
        if gluing.beta == 2 and o != "opp":
            raise GluingError("beta=2 glues in opposite direction only")
        if o == "opp":
            uf.union(s, gamma[t])
            uf.union(t, gamma[s])
        elif o == "same":
            uf.union(s, t)
            uf.union(gamma[s], gamma[t])
        else:
            raise GluingError(f"unknown orientation {o!r}")
    roots = {}
    def vid(c):
        r = uf.find(c)
        if r not in roots:
            roots[r] = len(roots)
        return roots[r]

    edges = []
    edge_of_step = {}
    for (s, t) in gluing.pairing:
        e = len(edges)
        edges.append(("p", vid(s), vid(gamma[s])))
        edge_of_step[s] = e
        edge_of_step[t] = e
    for s in sorted(gluing.open_edges):
        e = len(edges)
        edges.append(("a", vid(s), vid(gamma[s])))
        edge_of_step[s] = e
    marks = [vid(f[0]) for f in faces]
    return GluedComplex(
        gluing=gluing,
        vertex_of_corner=[vid(c) for c in range(k)],
        n_vertices=len(roots),
        edges=edges,
        edge_of_step=edge_of_step,
        face_steps=faces,
        marks=marks,
    )


# ---------------------------------------------------------------------------
# reduced diagrams
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Diagram:
    n_vertices: int
    edges: tuple                 # (kind, u, v, weight)
    face_boundaries: tuple       # per face: edge ids in traversal order
    marks: tuple                 # per face: vertex id, or -1 for a trivial face
    trivial_faces: tuple
    beta: int

    @property
    def interior_edges(self):
        return tuple(e for e in self.edges if e[0] == "p")

    @property
    def open_edges(self):
        return tuple(e for e in self.edges if e[0] == "a")

    def degrees(self):
        deg = [0] * self.n_vertices
        for _, u, v, _w in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_connected(self):
        if self.trivial_faces and self.n_vertices:
            return False
        if self.n_vertices <= 1:
            return True
        uf = _UF(self.n_vertices)
        for _, u, v, _w in self.edges:
            uf.union(u, v)
        return len({uf.find(v) for v in range(self.n_vertices)}) == 1

    def structure_key(self):
        """Deterministic key (vertices relabeled by first use); collisions
        impossible, distinct labelings of one shape may differ."""
        order = {}
        def lab(v):
            if v not in order:
                order[v] = len(order)
            return order[v]
        fb = tuple(tuple(f) for f in self.face_boundaries)
        ed = tuple((k, lab(u), lab(v), w) for k, u, v, w in self.edges)
        mk = tuple(lab(m) if m >= 0 else -1 for m in self.marks)
        return (ed, fb, mk, self.beta)

    def canonical_key(self):
        """Lexicographically minimal encoding over vertex relabelings."""
        n = self.n_vertices
        if n > 8:
            return self.structure_key()
        best = None
        for perm in itertools.permutations(range(n)):
            ed = sorted((k, min(perm[u], perm[v]), max(perm[u], perm[v]), w)
                        for k, u, v, w in self.edges)
            mk = tuple(sorted(perm[m] if m >= 0 else -1 for m in self.marks))
            enc = (tuple(ed), mk)
            if best is None or enc < best:
                best = enc
        return (best, self.beta)


@dataclasses.dataclass
class ContractionInfo:
    had_tree: bool
    tree_steps_per_face: tuple
    weight_check: bool           # per-face sum w_e + 2 * tree steps == perimeter


def okounkov_contract(gc):
    """Reduce a glued complex to a diagram, recording edge weights.

    Collapses pendant edges (moving marks to the attachment root), then
    absorbs unmarked divalent vertices into weighted chains of same-kind
    edges.  Returns (Diagram, ContractionInfo).
    """
    nE = gc.n_edges
    nV = gc.n_vertices
    alive = [True] * nE
    kind = [e[0] for e in gc.edges]
    ends = [(e[1], e[2]) for e in gc.edges]
    deg = [0] * nV
    for u, v in ends:
        deg[u] += 1
        deg[v] += 1
    marks = list(gc.marks)
    tree_edge_face = {}

    # face lookup for a glued pair (pendants always live in a single face)
    face_of_step = {}
    for j, steps in enumerate(gc.face_steps):
        for s in steps:
            face_of_step[s] = j
    faces_of_edge = [[] for _ in range(nE)]
    for s, e in gc.edge_of_step.items():
        faces_of_edge[e].append(face_of_step[s])

    had_tree = False
    changed = True
    while changed:
        changed = False
        for ei in range(nE):
            if not alive[ei]:
                continue
            u, v = ends[ei]
            leaf = None
            if deg[u] == 1 and u != v:
                leaf, root = u, v
            elif deg[v] == 1 and u != v:
                leaf, root = v, u
            if leaf is None:
                continue
            if kind[ei] != "p":
                raise GluingError("open pendant edge cannot occur")
            fs = faces_of_edge[ei]
            if len(set(fs)) != 1:
                raise GluingError("pendant edge shared by two faces")
            tree_edge_face[ei] = fs[0]
            alive[ei] = False
            deg[u] -= 1
            deg[v] -= 1
            had_tree = True
            changed = True
            for j, m in enumerate(marks):
                if m == leaf:
                    marks[j] = root

    live = [ei for ei in range(nE) if alive[ei]]
    tree_steps = [0] * gc.n_faces
    for ei, j in tree_edge_face.items():
        tree_steps[j] += 2

    # vertices that survive: any endpoint of a live edge
    live_vs = set()
    for ei in live:
        live_vs.update(ends[ei])
    marked_vs = {m for m in marks if m in live_vs}
    keep = {v for v in live_vs if deg[v] >= 3 or v in marked_vs}

    # chains through absorbed (unmarked divalent) vertices
    incid = {v: [] for v in live_vs}
    for ei in live:
        u, v = ends[ei]
        incid[u].append(ei)
        incid[v].append(ei)
    euf = _UF(nE)
    for v in live_vs:
        if v in keep:
            continue
        es = incid[v]
        if len(es) != 2 or es[0] == es[1]:
            raise GluingError("unexpected absorbed-vertex incidence")
        if kind[es[0]] != kind[es[1]]:
            raise GluingError("mixed-kind chain through a divalent vertex")
        euf.union(es[0], es[1])

    chains = {}
    for ei in live:
        chains.setdefault(euf.find(ei), []).append(ei)
    chain_ids = {root: idx for idx, root in enumerate(sorted(chains))}
    vmap = {v: i for i, v in enumerate(sorted(keep))}

    final_edges = []
    chain_dir = {}
    for root in sorted(chains):
        eis = chains[root]
        endl = []
        for ei in eis:
            u, v = ends[ei]
            if u in keep:
                endl.append(u)
            if v in keep:
                endl.append(v)
        if not endl:
            raise GluingError("floating chain without a kept vertex")
        if len(endl) == 1:
            endl = endl * 2
        if len(endl) > 2:
            raise GluingError("chain with more than two kept endpoints")
        final_edges.append([kind[eis[0]], vmap[endl[0]], vmap[endl[1]], len(eis)])

    # rebuild face boundaries: split surviving steps at kept corners
    face_boundaries = []
    for j, steps in enumerate(gc.face_steps):
        surviving = [s for s in steps if alive[gc.edge_of_step[s]]]
        if not surviving:
            face_boundaries.append(())
            continue
        # rotate so the walk starts at a kept corner
        start = None
        for i, s in enumerate(surviving):
            if gc.vertex_of_corner[s] in keep:
                start = i
                break
        if start is None:
            raise GluingError("face walk with no kept corner")
        surviving = surviving[start:] + surviving[:start]
        boundary = []
        run_chain = None
        run_len = 0
        for s in surviving:
            c = chain_ids[euf.find(gc.edge_of_step[s])]
            corner = gc.vertex_of_corner[s]
            if corner in keep and run_len:
                boundary.append(run_chain)
                run_chain, run_len = None, 0
            if run_chain is None:
                run_chain = c
            elif c != run_chain:
                raise GluingError("face run crosses chains without a kept corner")
            run_len += 1
            # open chains are traversed once; record direction for A powers
            if final_edges[c][0] == "a":
                chain_dir.setdefault(c, (vmap.get(gc.vertex_of_corner[s], None)))
        if run_len:
            boundary.append(run_chain)
        face_boundaries.append(tuple(boundary))

    # orient open chains along the traversal (first corner is the tail)
    for c, tail in chain_dir.items():
        k_, u, v, w = final_edges[c]
        if tail is not None and v == tail and u != tail:
            final_edges[c] = [k_, v, u, w]

    final_marks = []
    trivial = []
    for j, m in enumerate(marks):
        if gc.face_steps[j] and m in keep:
            final_marks.append(vmap[m])
        else:
            final_marks.append(-1)
            trivial.append(j)

    diagram = Diagram(
        n_vertices=len(keep),
        edges=tuple(tuple(e) for e in final_edges),
        face_boundaries=tuple(face_boundaries),
        marks=tuple(final_marks),
        trivial_faces=tuple(trivial),
        beta=gc.gluing.beta,
    )
    # per-face conservation: sum of traversed weights + 2 * (tree steps) = perimeter
    ok = True
    for j, m in enumerate(gc.gluing.perimeters):
        tot = sum(diagram.edges[c][3] for c in diagram.face_boundaries[j])
        if tot + tree_steps[j] != m:
            ok = False
    info = ContractionInfo(had_tree=had_tree,
                           tree_steps_per_face=tuple(tree_steps),
                           weight_check=ok)
    return diagram, info


# ---------------------------------------------------------------------------
# diagram-function evaluation
# ---------------------------------------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


class PowerCache:
    """Matrix powers of the transition kernel and the deformation."""

    def __init__(self, profile, A=None):
        self.P = np.asarray(profile.variances if hasattr(profile, "variances") else profile,
                            dtype=float)
        self.A = None if A is None else np.asarray(A)
        self.N = self.P.shape[0]
        self._p = {1: self.P}
        self._a = {} if self.A is None else {1: self.A}

    def p(self, w):
        if w not in self._p:
            self._p[w] = self._p[w - 1] @ self.P if w - 1 in self._p else np.linalg.matrix_power(self.P, w)
        return self._p[w]

    def a(self, w):
        if self.A is None:
            raise GluingError("no deformation supplied for open edges")
        if w not in self._a:
            self._a[w] = self._a[w - 1] @ self.A if w - 1 in self._a else np.linalg.matrix_power(self.A, w)
        return self._a[w]


def diagram_value(diagram, powers, weights=None):
    """Sum over vertex labelings of the edge-factor product (single weight set)."""
    if diagram.n_vertices == 0:
        return 1.0
    subs, mats = [], []
    for idx, (kind, u, v, w) in enumerate(diagram.edges):
        if weights is not None:
            w = weights[idx]
        subs.append(_LETTERS[u] + _LETTERS[v])
        mats.append(powers.p(w) if kind == "p" else powers.a(w))
    if not mats:
        return float(powers.N ** diagram.n_vertices)
    used = {c for s in subs for c in s}
    free = (powers.N) ** (diagram.n_vertices - len(used))
    val = np.einsum(",".join(subs) + "->", *mats)
    return float(np.real(val)) * free


def frak_F(diagram, l_list, powers):
    """Exact diagram function at fixed boundary sums l_j: sum over integer
    weights w_e >= 1 with sum_{e in dD_j} w_e = l_j (multiplicity counted)."""
    l_list = list(l_list)
    for j in diagram.trivial_faces:
        if l_list[j] != 0:
            return 0.0
    active = [j for j in range(len(l_list)) if j not in diagram.trivial_faces]
    for j in active:
        if not diagram.face_boundaries[j] and l_list[j] != 0:
            return 0.0
    nE = len(diagram.edges)
    mult = np.zeros((len(l_list), nE), dtype=int)
    for j, fb in enumerate(diagram.face_boundaries):
        for c in fb:
            mult[j, c] += 1
    total = 0.0
    l_arr = np.array(l_list, dtype=int)

    if nE and not mult.any():
        raise GluingError("edge lies on no face boundary")

    def rec(idx, rem, weights):
        nonlocal total
        if idx == nE:
            if np.all(rem == 0):
                total += diagram_value(diagram, powers, weights)
            return
        m = mult[:, idx]
        if not m.any():
            raise GluingError("edge lies on no face boundary")
        w = 1
        while True:
            new = rem - w * m
            if np.any(new < 0):
                break
            weights.append(w)
            rec(idx + 1, new, weights)
            weights.pop()
            w += 1
    rec(0, l_arr, [])
    scale = powers.N ** len(diagram.trivial_faces)
    return total * scale


def F_direct(diagram, n_list, powers):
    """Diagram function with slack variables: joint sum over integer weights
    w_e >= 1 such that for every face there is t_j >= 0 with
    2 t_j + sum_{e in dD_j} w_e = n_j (so the per-face weight total is at
    most n_j and matches its parity)."""
    n_list = list(n_list)
    for j in diagram.trivial_faces:
        if n_list[j] % 2:
            return 0.0
    nE = len(diagram.edges)
    mult = np.zeros((len(n_list), nE), dtype=int)
    for j, fb in enumerate(diagram.face_boundaries):
        for c in fb:
            mult[j, c] += 1
    total = 0.0
    n_arr = np.array(n_list, dtype=int)
    min_need = mult.sum(axis=1)  # all-ones weight assignment per face

    def rec(idx, used, weights):
        nonlocal total
        if idx == nE:
            rem = n_arr - used
            if np.all(rem >= 0) and np.all(rem % 2 == 0):
                total += diagram_value(diagram, powers, weights)
            return
        m = mult[:, idx]
        if not m.any():
            raise GluingError("edge lies on no face boundary")
        w = 1
        while True:
            new = used + w * m
            # remaining edges need at least weight one each
            later = mult[:, idx + 1:].sum(axis=1)
            if np.any(new + later > n_arr):
                break
            weights.append(w)
            rec(idx + 1, new, weights)
            weights.pop()
            w += 1
    rec(0, np.zeros(len(n_list), dtype=int), [])
    scale = powers.N ** len(diagram.trivial_faces)
    return total * scale


def F_parity_sum(diagram, n_list, powers):
    """F via the explicit parity sum of frak_F over 1 <= m_j <= n_j, m_j = n_j mod 2."""
    total = 0.0
    ranges = [range(2 - n % 2, n + 1, 2) for n in n_list]
    for mv in itertools.product(*[list(r) for r in ranges]):
        total += frak_F(diagram, list(mv), powers)
    return total


def diagram_envelope(diagram, n_total, gamma, t_N, N):
    """Upper envelope for |F| of a connected diagram without open edges."""
    V = diagram.n_vertices
    E = len(diagram.edges)
    if V < 1:
        return float(N)
    return (n_total ** (V - 1) / math.factorial(V - 1)) * \
        ((max(gamma * t_N, n_total) / N) ** (E - V + 1)) * N


# ---------------------------------------------------------------------------
# Catalan corrections
# ---------------------------------------------------------------------------

def catalan_corrections(m):
    """b_m: (1/2 - 1/(k+1)) binom(2k,k) for m = 2k, zero for odd m."""
    if m % 2:
        return Fraction(0)
    k = m // 2
    return (Fraction(1, 2) - Fraction(1, k + 1)) * math.comb(2 * k, k)


def b_prime(n):
    """b'_0 = -1/2, b'_2 = 1, zero otherwise."""
    if n == 0:
        return Fraction(-1, 2)
    if n == 2:
        return Fraction(1)
    return Fraction(0)


# ---------------------------------------------------------------------------
# skeleton sums (tree-free gluing enumeration)
# ---------------------------------------------------------------------------

def skeleton_sum(l_vector, powers, beta, allow_open, connected_only=False,
                 value_cache=None, per_diagram=None):
    """Sum of contracted-diagram values over all tree-free gluings of
    polygons with the given (all-positive) perimeters."""
    l_vector = tuple(int(l) for l in l_vector)
    if any(l <= 0 for l in l_vector):
        raise GluingError("skeleton faces need positive perimeter")
    total = 0.0
    for gl in enumerate_gluings(l_vector, beta, allow_open=allow_open):
        gc = glue(gl)
        deg = gc.degrees()
        if any(d < 2 for d in deg[:len(deg)]):
            continue  # tree-containing gluing: counted at lower perimeter
        diagram, info = okounkov_contract(gc)
        if info.had_tree:
            continue
        if not info.weight_check:
            raise GluingError("weight conservation failed")
        if connected_only and not diagram.is_connected():
            continue
        key = diagram.structure_key()
        if value_cache is not None and key in value_cache:
            val = value_cache[key]
        else:
            val = diagram_value(diagram, powers)
            if value_cache is not None:
                value_cache[key] = val
        if per_diagram is not None:
            per_diagram[key] = per_diagram.get(key, 0.0) + val
        total += val
    return total


# ---------------------------------------------------------------------------
# Wick oracle
# ---------------------------------------------------------------------------

def _dfact(t):
    out = 1
    while t > 1:
        out *= t - 1
        t -= 2
    return out


class _EntryMoments:
    """Per unordered entry pair (x, y): exact moments of the (H + A) factors."""

    def __init__(self, P, A, beta):
        self.P = P
        self.A = A
        self.beta = beta
        self.cache = {}

    def factor(self, x, y, c):
        key = (x, y, c)
        if key in self.cache:
            return self.cache[key]
        P, A, beta = self.P, self.A, self.beta
        if beta == 1 or x == y:
            var = P[x, y] * (2.0 if (x == y and beta == 1) else 1.0)
            a = float(np.real(A[x, y]))
            cc = c if isinstance(c, int) else c[0] + c[1]
            val = 0.0
            for t in range(0, cc + 1, 2):
                val += math.comb(cc, t) * a ** (cc - t) * _dfact(t) * var ** (t / 2.0)
        else:
            u, v = c
            var = P[x, y]
            a = complex(A[x, y])
            val = 0.0
            for t in range(0, min(u, v) + 1):
                val += (math.comb(u, t) * math.comb(v, t) * math.factorial(t)
                        * var ** t * a ** (u - t) * np.conj(a) ** (v - t))
            val = float(np.real(val))
        self.cache[key] = val
        return val


def wick_moment(m_list, profile, A=None, beta=1):
    """Exact E[prod_j Tr X^{m_j}] for Gaussian entries, X = Sigma o W + A.

    Direct sum over all index tuples; the Gaussian expectation of each tuple
    factorizes over distinct entries into scalar moments ((t-1)!! real
    pairs, t! circular complex pairs).  Independent of the gluing pipeline.
    """
    P = np.asarray(profile.variances if hasattr(profile, "variances") else profile, dtype=float)
    N = P.shape[0]
    orig = [int(m) for m in m_list]
    zeros = sum(1 for m in orig if m == 0)
    m_list = [m for m in orig if m > 0]
    k = sum(m_list)
    if N ** k > MAX_WICK_TUPLES:
        raise BudgetError(f"wick oracle needs N^{k} = {N ** k} tuples; over budget")
    if not m_list:
        return float(N ** zeros)
    Amat = np.zeros_like(P) if A is None else np.asarray(A)
    moments = _EntryMoments(P, Amat, beta)
    total = 0.0
    counts = {}

    def add_step(x, y, sgn):
        if beta == 1 or x == y:
            key = (min(x, y), max(x, y))
            counts[key] = counts.get(key, 0) + sgn
            if counts[key] == 0:
                del counts[key]
        else:
            key = (min(x, y), max(x, y))
            u, v = counts.get(key, (0, 0))
            if x < y:
                u += sgn
            else:
                v += sgn
            if u == 0 and v == 0:
                counts.pop(key, None)
            else:
                counts[key] = (u, v)

    def leaf_value():
        val = 1.0
        for (x, y), c in counts.items():
            val *= moments.factor(x, y, c)
            if val == 0.0:
                return 0.0
        return val

    def rec_face(f_idx, pos, xs):
        nonlocal total
        m = m_list[f_idx]
        if pos == m:
            add_step(xs[-1], xs[0], +1)
            if f_idx + 1 == len(m_list):
                total += leaf_value()
            else:
                rec_face(f_idx + 1, 0, [])
            add_step(xs[-1], xs[0], -1)
            return
        for x in range(N):
            if pos > 0:
                add_step(xs[-1], x, +1)
            xs.append(x)
            rec_face(f_idx, pos + 1, xs)
            xs.pop()
            if pos > 0:
                add_step(xs[-1] if xs else 0, x, -1)

    rec_face(0, 0, [])
    return total * (N ** zeros)


# ---------------------------------------------------------------------------
# the three verified identities
# ---------------------------------------------------------------------------

def ribbon_moment_lhs(m_list, profile, A=None, beta=1, _cache=None):
    """E[prod_j (Tr X^{m_j} + b_{m_j} N)] through the Wick oracle."""
    N = profile.n_rows
    s = len(m_list)
    cache = {} if _cache is None else _cache

    def wm(rest):
        key = tuple(sorted(rest))
        if key not in cache:
            cache[key] = wick_moment(list(key), profile, A, beta)
        return cache[key]

    total = 0.0
    for flags in itertools.product((0, 1), repeat=s):
        coef = 1.0
        rest = []
        for m, f in zip(m_list, flags):
            if f:
                coef *= float(catalan_corrections(m)) * N
            else:
                rest.append(m)
        if coef == 0.0:
            continue
        total += coef * (wm(rest) if rest else 1.0)
    return total


def ribbon_moment_rhs(m_list, profile, A=None, beta=1, _skel_cache=None):
    """Binomial-weighted skeleton sums over reduced perimeters."""
    N = profile.n_rows
    powers = PowerCache(profile, A)
    skel = {} if _skel_cache is None else _skel_cache
    vcache = {}
    total = 0.0
    ranges = [range(m % 2, m + 1, 2) for m in m_list]
    for lv in itertools.product(*[list(r) for r in ranges]):
        coef = Fraction(1)
        for m, l in zip(m_list, lv):
            c = Fraction(math.comb(m, (m - l) // 2))
            if l == 0:
                c /= 2
            coef *= c
        nz = tuple(l for l in lv if l > 0)
        zeros = len(lv) - len(nz)
        if nz not in skel:
            skel[nz] = skeleton_sum(nz, powers, beta, allow_open=A is not None,
                                    value_cache=vcache) if nz else 1.0
        total += float(coef) * skel[nz] * (N ** zeros)
    return total


def chebyshev_moment_lhs(n_list, profile, A=None, beta=1, _cache=None):
    """E[prod_j Tr U_{n_j}(X/2)] by expanding U in powers and calling the oracle."""
    from irmlab.chebyshev import u_poly_half_coeffs
    N = profile.n_rows
    cache = {} if _cache is None else _cache

    def wm(rest):
        key = tuple(sorted(rest))
        if key not in cache:
            cache[key] = wick_moment(list(key), profile, A, beta)
        return cache[key]

    coeff_lists = [u_poly_half_coeffs(n) for n in n_list]
    total = 0.0
    for mv in itertools.product(*[range(len(c)) for c in coeff_lists]):
        coef = 1.0
        for cl, m in zip(coeff_lists, mv):
            coef *= cl[m]
        if coef == 0.0:
            continue
        rest = [m for m in mv if m > 0]
        zeros = sum(1 for m in mv if m == 0)
        total += coef * (N ** zeros) * (wm(rest) if rest else 1.0)
    return total


def chebyshev_moment_rhs(n_list, profile, A=None, beta=1, connected_only=False,
                         per_diagram=None):
    """sum_Gamma F_Gamma({n_j}) as skeleton sums over the parity range.

    Faces with n_j = 0 are trivial (factor N each); for the connected sum
    they disconnect everything else."""
    N = profile.n_rows
    nonzero = [n for n in n_list if n > 0]
    zeros = len(n_list) - len(nonzero)
    if connected_only and zeros:
        return float(N) if not nonzero and zeros == 1 else 0.0
    if not nonzero:
        return float(N ** zeros)
    powers = PowerCache(profile, A)
    vcache = {}
    total = 0.0
    ranges = [range(2 - n % 2, n + 1, 2) for n in nonzero]
    for mv in itertools.product(*[list(r) for r in ranges]):
        total += skeleton_sum(mv, powers, beta, allow_open=A is not None,
                              connected_only=connected_only,
                              value_cache=vcache, per_diagram=per_diagram)
    return total * (N ** zeros)


def _partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def cumulant_lhs(n_list, profile, A=None, beta=1):
    """kappa_X(n_1..n_s) from the mixed-moment recursion over partitions."""
    cache = {}

    def kappa(sub):
        key = tuple(sorted(sub))
        if key in cache:
            return cache[key]
        mom = chebyshev_moment_lhs(list(key), profile, A, beta)
        corr = 0.0
        for part in _partitions(list(key)):
            if len(part) <= 1:
                continue
            prod = 1.0
            for blk in part:
                prod *= kappa(tuple(blk))
            corr += prod
        cache[key] = mom - corr
        return cache[key]

    return kappa(tuple(n_list))


def cumulant_rhs(n_list, profile, A=None, beta=1):
    """Connected-diagram partial sum."""
    return chebyshev_moment_rhs(n_list, profile, A, beta, connected_only=True)


def verify_expansions(m_list, profile, A=None, beta=1, tol=1e-9):
    """Check the three exact identities at the given perimeters.

    (1) moment expansion with Catalan corrections,
    (2) Chebyshev-moment diagram expansion,
    (3) cumulants = connected diagrams (s >= 2 only).
    Returns a report dict with per-identity values and worst deviation.
    """
    report = {"perimeters": list(m_list), "beta": beta,
              "deformed": A is not None, "checks": {}}
    lhs1 = ribbon_moment_lhs(m_list, profile, A, beta)
    rhs1 = ribbon_moment_rhs(m_list, profile, A, beta)
    report["checks"]["ribbon"] = {
        "lhs": lhs1, "rhs": rhs1, "abs_err": abs(lhs1 - rhs1),
        "pass": bool(abs(lhs1 - rhs1) <= tol * max(1.0, abs(lhs1)))}
    lhs2 = chebyshev_moment_lhs(m_list, profile, A, beta)
    contributions = {}
    rhs2 = chebyshev_moment_rhs(m_list, profile, A, beta, per_diagram=contributions)
    report["checks"]["chebyshev"] = {
        "lhs": lhs2, "rhs": rhs2, "abs_err": abs(lhs2 - rhs2),
        "pass": bool(abs(lhs2 - rhs2) <= tol * max(1.0, abs(lhs2)))}
    if not report["checks"]["chebyshev"]["pass"]:
        top = sorted(contributions.items(), key=lambda kv: -abs(kv[1]))[:20]
        report["checks"]["chebyshev"]["per_diagram"] = [
            {"diagram": repr(k), "value": v} for k, v in top]
    if len(m_list) >= 2:
        lhs3 = cumulant_lhs(m_list, profile, A, beta)
        rhs3 = cumulant_rhs(m_list, profile, A, beta)
        report["checks"]["cumulant"] = {
            "lhs": lhs3, "rhs": rhs3, "abs_err": abs(lhs3 - rhs3),
            "pass": bool(abs(lhs3 - rhs3) <= tol * max(1.0, abs(lhs3)))}
    report["pass"] = all(c["pass"] for c in report["checks"].values())
    return report
