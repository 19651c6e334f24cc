"""Rule schemas of the four strata, expressed over set terms.

Element variables are ordinary :class:`Var` objects; set variables are
:class:`SetVar` objects whose sort fixes their bit layout.
"""
from __future__ import annotations

from ..ecq import CQ
from ..ontology import (BOT, TOP, AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight,
                        NominalLeft, NominalRight, RoleInclusion, TBox, base_role, inverse)
from ..terms import Var
from .ir import (INDEX_MARKERS, A, Layout, Member, N, P, SetVar, Stratum, lit, single,
                 union)

OBJ = "dl_obj"  # closed-world predicate listing the active domain O(s)
BOT_PRED = "bot"


def index_constant(i: int) -> str:
    return f"dl_v{i}"


def _declare_base(st: Stratum, L: Layout, tbox_roles) -> None:
    R, X, RX = L.R, L.X, L.RX
    st.declare("concept", None, X)
    st.declare("role", None, X, X)
    st.declare("roles", R, X, X)
    st.declare("anon", X)
    st.declare("inv", R, R)
    st.declare("ind", X)
    st.declare("n", X)
    st.declare("approx", X, X)
    st.declare("sup", None, R)
    st.declare("need", RX, RX)
    st.declare(BOT_PRED)
    st.declare(OBJ, None)
    for c in L.concepts:
        if c not in (TOP, BOT):
            st.declare(c, None)
    for r in tbox_roles:
        st.declare(r, None, None)


def abox_roles(L: Layout) -> list[str]:
    return [r for r in L.roles if not r.endswith("-")]


def abox_concepts(L: Layout) -> list[str]:
    return [c for c in L.concepts if c not in (TOP, BOT)]


def build_base_stratum(tbox: TBox, L: Layout) -> Stratum:
    st = Stratum("base")
    _declare_base(st, L, abox_roles(L))
    Rs, Xs, RXs = L.R, L.X, L.RX
    X, Y, Z = SetVar("X", Xs), SetVar("Y", Xs), SetVar("Z", Xs)
    R, Ri, S, Si = SetVar("R", Rs), SetVar("RI", Rs), SetVar("S", Rs), SetVar("SI", Rs)
    c, r, x, y = Var("c"), Var("r"), Var("x"), Var("y")

    # anon and inv tables
    for C in L.concepts:
        st.add(A("anon", lit(Xs, C)), [], "aux.anon")
    for C in L.concepts:
        st.add(A("anon", union(Xs, X, lit(Xs, C))), [P("anon", X)], "aux.anon-step")
    for rr in L.roles:
        st.add(A("inv", lit(Rs, rr), lit(Rs, inverse(rr))), [], "aux.inv")
    for rr in L.roles:
        st.add(A("inv", union(Rs, R, lit(Rs, rr)), union(Rs, Ri, lit(Rs, inverse(rr)))),
               [P("inv", R, Ri)], "aux.inv-step")

    st.add(A("concept", TOP, X), [P("concept", c, X)], "aux.top-concept")
    st.add([A("concept", TOP, X), A("concept", TOP, Y)], [P("role", r, X, Y)], "aux.top-role")
    st.add(A("roles", Ri, Y, X), [P("roles", R, X, Y), P("n", Y), P("inv", R, Ri)],
           "aux.roles-inverse")
    for rr in L.roles:
        st.add(A("role", rr, X, Y), [P("roles", R, X, Y), Member(rr, R)], "aux.roles-role")
    for C in abox_concepts(L):
        st.add([A("concept", C, single(Xs, x)), A("ind", single(Xs, x))], [P(C, x)],
               "import.concept")
    for rr in abox_roles(L):
        st.add([A("role", rr, single(Xs, x), single(Xs, y)), A("ind", single(Xs, x)),
                A("ind", single(Xs, y))], [P(rr, x, y)], "import.role")
    st.add([A("concept", TOP, single(Xs, x)), A("ind", single(Xs, x))], [P(OBJ, x)],
           "import.object")
    st.add(A("n", X), [P("ind", X)], "aux.ind-n")
    st.add(A("approx", Y, X), [P("approx", X, Y)], "aux.approx-sym")
    st.add(A("approx", X, Z), [P("approx", X, Y), P("approx", Y, Z)], "aux.approx-trans")
    st.add(A("concept", c, Y), [P("concept", c, X), P("approx", X, Y)], "aux.approx-concept")
    st.add(A("n", Y), [P("n", X), P("approx", X, Y)], "aux.approx-n")
    st.add(A("roles", R, Z, Y), [P("roles", R, X, Y), P("approx", X, Z)], "aux.approx-src")
    st.add(A("roles", R, X, Z), [P("roles", R, X, Y), P("approx", Y, Z)], "aux.approx-dst")

    inclusions = []
    for ax in tbox.axioms:
        if isinstance(ax, ConjSubsumption):
            st.add(A("concept", ax.rhs, X), [P("concept", Ci, X) for Ci in ax.lhs], "ax.i")
        elif isinstance(ax, ExistsRight):
            st.add(A("role", ax.role, X, lit(Xs, ax.filler)), [P("concept", ax.lhs, X)],
                   "ax.ii")
        elif isinstance(ax, ExistsLeft):
            st.add(A("concept", ax.rhs, X), [P("role", ax.role, X, Y), P("concept", ax.filler, Y)],
                   "ax.iii")
            st.add(A("roles", Ri, X, union(Xs, Y, lit(Xs, ax.rhs))),
                   [P("concept", ax.filler, X), P("roles", Ri, X, Y), Member(ax.role, R),
                    P("inv", R, Ri), P("anon", Y)], "ax.iii-inv")
        elif isinstance(ax, AtMostOne):
            C, rr, D = ax.lhs, ax.role, ax.filler
            e = Var("e")
            st.add(A("approx", Y, Z),
                   [P("concept", D, Y), P("role", inverse(rr), Y, X), P("concept", C, X),
                    P("role", rr, X, Z), P("concept", D, Z), P("n", Z)], "ax.iv-named")
            st.add(A("roles", union(Rs, R, S), X, union(Xs, Y, Z)),
                   [P("concept", C, X), Member(rr, R), P("roles", R, X, Y), P("concept", D, Y),
                    P("anon", Y), Member(rr, S), P("roles", S, X, Z), P("concept", D, Z),
                    P("anon", Z)], "ax.iv-merge")
            st.add([A("concept", e, Y), A("roles", union(Rs, Ri, Si), Y, X)],
                   [P("concept", C, X), Member(rr, R), P("inv", R, Ri), P("concept", D, Y),
                    P("roles", Ri, Y, X), Member(rr, S), P("inv", S, Si), P("anon", Z),
                    Member(e, Z), P("roles", S, X, Z), P("concept", D, Z)], "ax.iv-parent")
            st.add(A("n", Y), [P("concept", D, Y), P("role", inverse(rr), Y, X),
                               P("concept", C, X), P("n", X)], "ax.iv-n")
        elif isinstance(ax, NominalRight):
            st.add([A("approx", single(Xs, ax.individual), X), A("n", single(Xs, ax.individual))],
                   [P("concept", ax.lhs, X)], "ax.v")
        elif isinstance(ax, RoleInclusion):
            inclusions.append(ax)
        elif isinstance(ax, NominalLeft):
            st.add([A("concept", ax.rhs, single(Xs, ax.individual)),
                    A("n", single(Xs, ax.individual))], [], "ax.vii")
        else:  # pragma: no cover
            raise TypeError(ax)

    for C in L.concepts:
        st.add(A("concept", C, Y), [P("role", r, X, Y), Member(C, Y)], "aux.fresh-concepts")

    for rr in L.roles:
        st.add(A("sup", rr, lit(Rs, rr)), [], "ax.vi-refl")
    for ax in inclusions:
        for s, t in ((ax.sub, ax.sup), (inverse(ax.sub), inverse(ax.sup))):
            st.add(A("sup", r, union(Rs, S, lit(Rs, t))), [P("sup", r, S), Member(s, S)],
                   "ax.vi-step")
    st.add(A("roles", S, X, Y), [P("role", r, X, Y), P("sup", r, S)], "ax.vi-roles")
    for rr in L.roles:
        st.add(A("roles", Si, X, Y), [P("role", inverse(rr), X, Y), P("sup", rr, S),
                                      P("inv", S, Si)], "ax.vi-roles-inv")

    st.add(A(BOT_PRED), [P("concept", BOT, X)], "bot")
    RY = union(RXs, R, Y)
    SZ = union(RXs, S, Z)
    st.add(A("need", RY, SZ), [P("roles", R, X, Y), P("anon", Y), P("roles", S, Y, Z),
                               P("anon", Z)], "order.need")
    return st


def build_order_stratum(L: Layout) -> Stratum:
    """Lexicographic order on role/concept sets, restricted to demanded pairs.

    Symbols later in the enumeration are more significant, so the order is
    the numeric order of the bit vector read from the last symbol down.
    """
    st = Stratum("order")
    RXs = L.RX
    syms = RXs.symbols
    st.declare("need", RXs, RXs)
    st.declare("leq", RXs, RXs)
    st.declare("olt", RXs, RXs)
    for k in range(len(syms) + 1):
        st.declare(f"oeq{k}", RXs, RXs)
    a, b = SetVar("A", RXs), SetVar("B", RXs)
    st.add(A("oeq0", a, b), [P("need", a, b)], "order.start")
    for k, sym in enumerate(reversed(syms)):
        here, nxt = f"oeq{k}", f"oeq{k + 1}"
        st.add(A(nxt, a, b), [P(here, a, b), Member(sym, a), Member(sym, b)], "order.eq1")
        st.add(A(nxt, a, b), [P(here, a, b), Member(sym, a, False), Member(sym, b, False)],
               "order.eq0")
        st.add(A("olt", a, b), [P(here, a, b), Member(sym, a, False), Member(sym, b)],
               "order.lt")
    st.add(A("leq", a, b), [P("olt", a, b)], "order.leq-lt")
    st.add(A("leq", a, b), [P(f"oeq{len(syms)}", a, b)], "order.leq-eq")
    return st


def build_canonical_stratum(L: Layout) -> Stratum:
    st = Stratum("canonical")
    Rs, Xs, Vs = L.R, L.X, L.V
    st.declare("role_t", None, Vs, Vs)
    st.declare("concept_p", None, Vs)
    st.declare("role_p", None, Vs, Vs)
    st.declare("same", Vs, Vs)
    X, Y, Z = SetVar("X", Xs), SetVar("Y", Xs), SetVar("Z", Xs)
    R, S = SetVar("R", Rs), SetVar("S", Rs)
    W, W2 = SetVar("W", Vs), SetVar("W2", Vs)
    c, r, s = Var("c"), Var("r"), Var("s")

    # Named elements keep their concepts; without this an individual with no
    # role edges would be invisible to the query part.
    st.add(A("concept_p", c, X), [P("n", X), P("concept", c, X)], "canon.named-concepts")
    for rr in L.roles:
        st.add([A("role_t", rr, X, Y), A("role_t", inverse(rr), Y, X)],
               [P("n", X), P("role", rr, X, Y), P("n", Y)], "canon.named-edge")
    for rr in L.roles:
        st.add(A("role_t", rr, X, union(Vs, R, Y, lit(Vs, "0"))),
               [P("n", X), P("roles", R, X, Y), P("anon", Y), N("n", Y), Member(rr, R)],
               "canon.init")
    for i in range(3):
        j = (i + 1) % 3
        parent = union(Vs, R, Y, lit(Vs, INDEX_MARKERS[i]))
        RY = union(L.RX, R, Y)
        SZ = union(L.RX, S, Z)
        for ss in L.roles:
            body = [P("role_t", r, W, parent), P("roles", S, Y, Z), P("anon", Z), N("n", Z),
                    Member(ss, S)]
            # equal sets count as ordered, so the child takes the next index
            st.add(A("role_t", ss, parent, union(Vs, S, Z, lit(Vs, INDEX_MARKERS[j]))),
                   body + [P("leq", RY, SZ)], "canon.step-leq")
            st.add(A("role_t", ss, parent, union(Vs, S, Z, lit(Vs, INDEX_MARKERS[i]))),
                   body + [N("leq", RY, SZ)], "canon.step-gt")
    for i in range(3):
        parent = union(Vs, R, Y, lit(Vs, INDEX_MARKERS[i]))
        for rr in L.roles:
            st.add([A("role_t", rr, parent, Z), A("role_t", inverse(rr), Z, parent)],
                   [P("role_t", s, W, parent), P("role", rr, Y, Z), P("n", Z)],
                   "canon.to-named")
    st.add(A("concept_p", c, Y), [P("role_t", s, W, Y), P("concept", c, Y)], "canon.concept")
    for i in range(3):
        parent = union(Vs, R, Y, lit(Vs, INDEX_MARKERS[i]))
        st.add(A("concept_p", c, parent), [P("role_t", s, W, parent), P("concept", c, Y)],
               "canon.concept-anon")
    for rr in L.roles:
        st.add([A("role_p", rr, W, W2), A("role_p", inverse(rr), W2, W)],
               [P("role_t", rr, W, W2)], "canon.role")
    # same(V, V') marks two labels that denote one element of the canonical model
    st.add(A("same", W, W), [P("concept_p", c, W)], "canon.same-refl")
    st.add(A("same", X, Y), [P("approx", X, Y)], "canon.same-approx")
    return st


def components(q: CQ) -> list[CQ]:
    """Split a CQ into variable-connected components (atoms without variables stand alone)."""
    groups: list[tuple[set, list]] = []
    for a in q.atoms:
        vs = {t for t in a.args if isinstance(t, Var)}
        hit = [g for g in groups if g[0] & vs]
        merged = (set(vs), [a])
        for g in hit:
            merged[0].update(g[0])
            merged[1][:0] = g[1]
            groups.remove(g)
        groups.append(merged)
    out = []
    for vs, atoms in groups:
        atoms = [a for a in q.atoms if a in atoms]
        out.append(CQ(tuple(v for v in q.answer_vars if v in vs),
                      tuple(v for v in q.exist_vars if v in vs), tuple(atoms)))
    return out


def build_filtration_stratum(q: CQ, L: Layout, name: str) -> Stratum:
    """Match one CQ into the canonical model and discard non-forest matches.

    A disconnected CQ is handled component by component; the answers of the
    components are joined into ``name``.
    """
    parts = components(q)
    if len(parts) == 1:
        return _filtration(q, L, name)
    st = Stratum("filtration")
    st.declare(name, *([None] * len(q.answer_vars)))
    body = []
    for i, part in enumerate(parts):
        sub = _filtration(part, L, f"{name}_c{i}")
        st.rules += sub.rules
        st.schema.update(sub.schema)
        body.append(P(f"{name}_c{i}", *part.answer_vars))
    st.add(A(name, *q.answer_vars), body, "filter.join")
    return st


def _filtration(q: CQ, L: Layout, name: str) -> Stratum:
    st = Stratum("filtration")
    Vs = L.V
    variables = list(q.variables)
    k, ell = len(variables), len(q.exist_vars)
    Vv = [SetVar(f"V{i + 1}", Vs) for i in range(k)]
    index = {v: i for i, v in enumerate(variables)}

    def term(t):
        return Vv[index[t]] if isinstance(t, Var) else single(Vs, t)

    edge, equal, reach, bad = (f"{name}_{p}" for p in ("edge", "equal", "reach", "bad"))
    answer1, per = f"{name}_ans", name
    for p in (edge, equal, reach):
        st.declare(p, None, None, *([Vs] * k))
    st.declare(bad, *([Vs] * k))
    st.declare(answer1, *([Vs] * (k - ell)))
    st.declare(per, *([None] * (k - ell)))

    phi = []
    for a in q.atoms:
        if len(a.args) == 1:
            phi.append(P("concept_p", a.pred, term(a.args[0])))
        else:
            phi.append(P("role_p", a.pred, term(a.args[0]), term(a.args[1])))

    for a in q.atoms:
        if len(a.args) != 2 or not all(isinstance(t, Var) for t in a.args):
            continue
        i, j = index[a.args[0]], index[a.args[1]]
        ci, cj = index_constant(i + 1), index_constant(j + 1)
        rr, ri = a.pred, inverse(a.pred)
        st.add(A(edge, ci, cj, *Vv),
               phi + [P("role_t", rr, Vv[i], Vv[j]), N("role_t", ri, Vv[j], Vv[i])],
               "filter.edge")
        st.add(A(edge, cj, ci, *Vv),
               phi + [P("role_t", ri, Vv[j], Vv[i]), N("role_t", rr, Vv[i], Vv[j])],
               "filter.edge")

    m, n = Var("m"), Var("n")
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            ci, cj = index_constant(i), index_constant(j)
            st.add(A(equal, ci, m, *Vv), [P(edge, ci, cj, *Vv), P(edge, m, cj, *Vv)],
                   "filter.equal")
            st.add(A(equal, ci, m, *Vv), [P(edge, ci, cj, *Vv), P(edge, m, n, *Vv),
                                          P(equal, cj, n, *Vv)], "filter.equal")
            st.add(A(reach, ci, cj, *Vv), [P(edge, ci, cj, *Vv)], "filter.reach")
            st.add(A(reach, ci, m, *Vv), [P(reach, ci, cj, *Vv), P(equal, cj, m, *Vv)],
                   "filter.reach")
            st.add(A(reach, m, cj, *Vv), [P(reach, ci, cj, *Vv), P(equal, ci, m, *Vv)],
                   "filter.reach")
            st.add(A(reach, ci, m, *Vv), [P(reach, ci, cj, *Vv), P(edge, cj, m, *Vv)],
                   "filter.reach")
            st.add(A(bad, *Vv), [P(edge, ci, cj, *Vv), P(edge, ci, m, *Vv),
                                 N(equal, cj, m, *Vv), P(reach, cj, n, *Vv),
                                 P(reach, m, n, *Vv)], "filter.diamond")
    for i in range(1, k + 1):
        ci = index_constant(i)
        st.add(A(bad, *Vv), [P(reach, ci, ci, *Vv)], "filter.cycle")
    # Variables merged by the collapse must have been matched to one element.
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            if i != j:
                st.add(A(bad, *Vv), [P(equal, index_constant(i), index_constant(j), *Vv),
                                     N("same", Vv[i - 1], Vv[j - 1])], "filter.merge")

    st.add(A(answer1, *Vv[ell:]), phi + [N(bad, *Vv)], "filter.answer")
    ans = [Var(f"a{i}") for i in range(ell + 1, k + 1)]
    body = [P(answer1, *Vv[ell:])]
    for i, a in zip(range(ell, k), ans):
        body += [P("ind", Vv[i]), Member(a, Vv[i], True, individual=True)]
    st.add(A(per, *ans), body, "filter.extract")
    return st


def used_role_names(tbox: TBox) -> set[str]:
    return {base_role(r) for r in tbox.used_roles()}
