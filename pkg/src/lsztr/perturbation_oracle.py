"""Exact-rational ribbon-graph oracle for the perturbative correlators.

Expands ``exp(-N (lam/2) Tr (Phi^dag Phi)^2)`` against the Gaussian measure
with propagator ``<Phi_ij Phi^dag_ji> = 1/(N (E_i + Et_j))`` and enumerates all
Wick pairings. Every pairing is a labelled directed ribbon graph. Index loops
(faces) either carry an external label or are summed with the multiplicities
``r_k / N`` (resp. ``rt_l / N``). The genus of a graph is read off from its
power of N. No floating point is used anywhere in this module.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceeded, ValidationError
from .model import ModelSpec
from .numerics import RationalSeries

MAX_VERTICES = 4


@dataclass(frozen=True)
class Label:
    """External index symbol. ``kind`` is ``"e"`` (E-index) or ``"t"`` (Et-index).

    Two boundary slots carrying equal labels carry the same matrix index;
    distinct labels are distinct indices even when their values agree.
    """

    kind: str
    name: object
    value: Fraction


@dataclass
class SeriesResult:
    """Per-genus exact series of a connected correlator.

    Attributes
    ----------
    series : dict
        ``g -> RationalSeries`` in ``lam``.
    order : int
        Truncation order.
    """

    order: int
    series: dict = field(default_factory=dict)

    def genus(self, g: int) -> RationalSeries:
        return self.series.get(g, RationalSeries((), self.order))


@dataclass
class RibbonGraph:
    """One Wick pairing with its face structure.

    Attributes
    ----------
    v : int
        Number of quartic vertices.
    pairing : tuple
        ``pairing[i]`` is the Phi^dag slot matched to Phi slot ``i``.
    propagators : list of (int, int)
        (E-face, Et-face) per ribbon.
    face_labels : dict
        Face id -> external Label (absent for summed faces).
    s1, s2 : int
        Numbers of summed E- and Et-faces.
    connected : bool
    genus : int or None
        None if the pairing is zero (a face joins distinct labels).
    """

    v: int
    pairing: tuple
    propagators: list
    face_labels: dict
    s1: int
    s2: int
    connected: bool
    genus: int | None


def index_labels(spec: ModelSpec, boundaries) -> list:
    """Turn boundaries of eigenvalue indices ``(p1, q1, p2, q2, ...)`` into Labels.

    Even positions index ``E``, odd positions index ``Et``; equal indices of the
    same kind become the same symbol.
    """
    e = [Fraction(v) for v in spec.e]
    et = [Fraction(v) for v in spec.et]
    out = []
    for b in boundaries:
        row = []
        for i, k in enumerate(b):
            if isinstance(k, Label):
                row.append(k)
            elif i % 2 == 0:
                row.append(Label("e", k, e[k]))
            else:
                row.append(Label("t", k, et[k]))
        out.append(tuple(row))
    return out


def _fields(boundaries, v):
    """Phi slots as (E-var, Et-var) and Phi^dag slots as (Et-var, E-var), plus owners.

    Variables are ints (internal) or Labels (external).
    """
    phi, dag, own_phi, own_dag = [], [], [], []
    counter = itertools.count()
    for vi in range(v):
        a, b, c, d = (next(counter) for _ in range(4))
        # Tr(Phi^dag_ab Phi_bc Phi^dag_cd Phi_da): a, c are Et-indices, b, d E-indices
        dag += [(a, b), (c, d)]
        phi += [(b, c), (d, a)]
        own_dag += [("v", vi)] * 2
        own_phi += [("v", vi)] * 2
    for bi, B in enumerate(boundaries):
        if len(B) % 2:
            raise ValidationError("boundary lengths must be even")
        n = len(B) // 2
        ps = B[0::2]
        qs = B[1::2]
        for k in range(n):
            dag.append((qs[k], ps[k]))
            phi.append((ps[(k + 1) % n], qs[k]))
            own_dag.append(("b", bi))
            own_phi.append(("b", bi))
    return phi, dag, own_phi, own_dag


class _UF:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _graph(v, nb, phi, dag, own_phi, own_dag, perm) -> RibbonGraph:
    K = sum(1 for o in own_phi if o[0] == "b") * 2
    uf = _UF()
    comp = _UF()
    for i, j in enumerate(perm):
        uf.union(("E", phi[i][0]), ("E", dag[j][1]))
        uf.union(("T", phi[i][1]), ("T", dag[j][0]))
        comp.union(own_phi[i], own_dag[j])
    owners = {o for o in own_phi + own_dag}
    roots = {comp.find(o) for o in owners}
    connected = len(roots) == 1
    labels = {}
    zero = False
    for kind, slots in (("E", [p[0] for p in phi] + [d[1] for d in dag]),
                        ("T", [p[1] for p in phi] + [d[0] for d in dag])):
        for s in slots:
            if isinstance(s, Label):
                r = uf.find((kind, s))
                if r in labels and labels[r] != s:
                    zero = True
                labels[r] = s
    props = [(uf.find(("E", phi[i][0])), uf.find(("T", phi[i][1]))) for i in range(len(perm))]
    efaces = {p[0] for p in props}
    tfaces = {p[1] for p in props}
    s1 = len(efaces - set(labels))
    s2 = len(tfaces - set(labels))
    expo = nb - 2 + K // 2 - v + s1 + s2
    genus = None if (zero or expo > 0 or expo % 2) else -expo // 2
    return RibbonGraph(v, tuple(perm), props, labels, s1, s2, connected, genus)


def enumerate_graphs(boundaries, v: int):
    """Yield every Wick pairing with ``v`` quartic vertices as a RibbonGraph."""
    if v > MAX_VERTICES:
        raise BudgetExceeded(f"at most {MAX_VERTICES} vertices are enumerated")
    phi, dag, own_phi, own_dag = _fields(boundaries, v)
    if len(phi) != len(dag):
        return
    for perm in itertools.permutations(range(len(dag))):
        yield _graph(v, len(boundaries), phi, dag, own_phi, own_dag, perm)


def _weight(graph: RibbonGraph, spec: ModelSpec, deriv: Label | None):
    """Face-summed value of the propagator product (or its derivative in a label value)."""
    N = spec.N
    e = [(Fraction(x), Fraction(r, N)) for x, r in spec.eigenvalues_E]
    et = [(Fraction(x), Fraction(r, N)) for x, r in spec.eigenvalues_Etilde]
    free_e = sorted({p[0] for p in graph.propagators} - set(graph.face_labels), key=repr)
    free_t = sorted({p[1] for p in graph.propagators} - set(graph.face_labels), key=repr)
    total = Fraction(0)
    for ce in itertools.product(e, repeat=len(free_e)):
        for ct in itertools.product(et, repeat=len(free_t)):
            val = {}
            mult = Fraction(1)
            for f, (x, w) in zip(free_e, ce):
                val[f] = x
                mult *= w
            for f, (x, w) in zip(free_t, ct):
                val[f] = x
                mult *= w
            for f, lab in graph.face_labels.items():
                val[f] = lab.value
            prod = Fraction(1)
            dsum = Fraction(0)
            for a, b in graph.propagators:
                den = val[a] + val[b]
                if den == 0:
                    raise ValidationError("vanishing propagator denominator")
                prod /= den
                if deriv is not None:
                    hits = (graph.face_labels.get(a) == deriv) + (graph.face_labels.get(b) == deriv)
                    dsum -= Fraction(hits) / den
            total += mult * (prod * dsum if deriv is not None else prod)
    return total


def cumulant_series(spec: ModelSpec, boundaries, max_order: int,
                    deriv: Label | None = None) -> SeriesResult:
    """Genus-resolved lam-series of the connected correlator G_{|B_1|...|B_b|}.

    Parameters
    ----------
    spec : ModelSpec
        Rational spec (its coupling is ignored).
    boundaries : sequence of tuples
        Each boundary is ``(p1, q1, ..., pN, qN)`` of eigenvalue indices or Labels.
    max_order : int
        Highest power of lam (number of vertices), at most 4.
    deriv : Label, optional
        Differentiate every coefficient in this label's value.

    Returns
    -------
    SeriesResult
    """
    if max_order > MAX_VERTICES:
        raise BudgetExceeded(f"at most {MAX_VERTICES} vertices are enumerated")
    bnds = index_labels(spec, boundaries)
    out = defaultdict(lambda: [Fraction(0)] * (max_order + 1))
    for v in range(max_order + 1):
        pref = Fraction(-1, 2) ** v / math.factorial(v)
        for gr in enumerate_graphs(bnds, v):
            if not gr.connected or gr.genus is None:
                continue
            out[gr.genus][v] += pref * _weight(gr, spec, deriv)
    res = SeriesResult(max_order)
    for g, c in sorted(out.items()):
        res.series[g] = RationalSeries(c, max_order)
    return res


def graph_census(spec: ModelSpec, boundaries, order: int) -> dict:
    """Number of connected labelled ribbon graphs per genus at ``lam**order``.

    Counts pairings modulo vertex relabelling and the two cyclic rotations of
    each vertex, i.e. connected pairings divided by ``2^v v!``.
    """
    bnds = index_labels(spec, boundaries)
    counts = defaultdict(int)
    for gr in enumerate_graphs(bnds, order):
        if gr.connected and gr.genus is not None:
            counts[gr.genus] += 1
    norm = 2 ** order * math.factorial(order)
    return {g: Fraction(c, norm) for g, c in sorted(counts.items())}


def planar_count(k: int) -> int:
    """Closed count ``2 * 3^k (2k)! / (k! (k+2)!)`` of planar 2-point graphs."""
    return 2 * 3 ** k * math.factorial(2 * k) // (math.factorial(k) * math.factorial(k + 2))


def dse_series_check(spec: ModelSpec, order: int, genus: int = 1) -> dict:
    """Residual series of the genus-expanded 2-point Dyson-Schwinger equation.

    For each pair ``(p, q)`` and each genus up to ``genus`` substitutes the
    oracle series of the 2-, 4- and 2+2-point functions into

    ``(e_p + et_q) G^(g)_{|pq|} = delta_{g0} - lam { sum_h G^(h)_{|pq|} Omega^(g-h)_p
    + (1/N) sum_n G^(g-1)_{|pn|pq|} + G^(g-1)_{|pqpq|}
    + (1/N) sum_n (G^(g)_{|pq|} - G^(g)_{|nq|}) / (e_n - e_p) }``.

    Summed indices are fresh symbols (distinct from p, q); for ``n`` in the
    eigenvalue class of ``p`` the difference quotient is the derivative in the
    external label value. Returns ``{(p, q, g): RationalSeries}``; every entry
    must be identically zero.
    """
    if order > 3:
        raise BudgetExceeded("dse_series_check supports order <= 3")
    N = spec.N
    e = [Fraction(v) for v in spec.e]
    et = [Fraction(v) for v in spec.et]
    r = [Fraction(m, N) for m in spec.r]
    rt = [Fraction(m, N) for m in spec.rt]
    lam = RationalSeries.variable(order)
    zero = RationalSeries((), order)

    def fresh_t(l):
        return Label("t", ("sum", l), et[l])

    def fresh_e(k):
        return Label("e", ("sum", k), e[k])

    out = {}
    for p in range(spec.d):
        for q in range(spec.dt):
            P = Label("e", p, e[p])
            Q = Label("t", q, et[q])
            Gpq = cumulant_series(spec, [(P, Q)], order)
            Gpl = [cumulant_series(spec, [(P, fresh_t(l))], order) for l in range(spec.dt)]
            Gkq = [cumulant_series(spec, [(fresh_e(k), Q)], order) for k in range(spec.d)]
            dG = cumulant_series(spec, [(P, Q)], order, deriv=P)
            need_lower = genus >= 1
            if need_lower:
                P2 = Label("e", ("copy", p), e[p])
                Q2 = Label("t", ("copy", q), et[q])
                G22 = [cumulant_series(spec, [(P2, fresh_t(l)), (P, Q)], max(order - 1, 0))
                       for l in range(spec.dt)]
                G4 = cumulant_series(spec, [(P, Q, P2, Q2)], max(order - 1, 0))
            for g in range(genus + 1):
                brace = zero
                for h in range(g + 1):
                    om = zero
                    for l in range(spec.dt):
                        om = om + Gpl[l].genus(g - h) * rt[l]
                    brace = brace + Gpq.genus(h) * om
                if g >= 1:
                    for l in range(spec.dt):
                        brace = brace + _lift(G22[l].genus(g - 1), order) * rt[l]
                    brace = brace + _lift(G4.genus(g - 1), order)
                for k in range(spec.d):
                    if k == p:
                        brace = brace - dG.genus(g) * r[k]
                    else:
                        brace = brace + (Gpq.genus(g) - Gkq[k].genus(g)) * (r[k] / (e[k] - e[p]))
                lhs = Gpq.genus(g) * (e[p] + et[q])
                rhs = lam * brace * (-1) + (1 if g == 0 else 0)
                out[(p, q, g)] = lhs - rhs
    return out


def _lift(s: RationalSeries, order: int) -> RationalSeries:
    return RationalSeries(s.coeffs, order)
