"""First-order rewriting and evaluation.

`eval_fo` evaluates an FO sentence over an ABox with quantifiers ranging over
the active domain.  `atom_rewr` pushes entailed subsumptions into a query so
that evaluating the result over the raw data simulates evaluating the input
over the ground-atom closure.  `iar_rewrite` reformulates a conjunctive query
so that its evaluation decides entailment from the repair (the data minus all
minimal policy-violating subsets), and `qib_rewrite` composes the two.

The repair guards deserve a note.  An atom is unsafe iff it lies in some
*minimal* violating subset, and a naive "some rewritten denial body matches
through this atom" test overshoots: a match that collapses two pattern
variables onto one constant can have a non-minimal image whose core avoids
the atom entirely.  We therefore expand each rewritten denial body into all
of its variable quotients, discard the quotients whose exact images are
provably non-minimal, and emit guards that pin the exact match shape with
equality and inequality conditions.  Equality tests in the FO output exist
solely for this purpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Optional

from .model import (
    ABox,
    And,
    Atom,
    AtomNode,
    ConjunctiveQuery,
    Eq,
    Exists,
    FONode,
    Not,
    Or,
    Policy,
    RoleExpr,
    TBox,
    Term,
    Truth,
    atomic,
    fo_and,
    fo_exists,
    fo_or,
    free_variables,
    node_count,
    var,
)
from .reasoner import (
    InconsistentOntologyError,
    _abox_relations,
    _canonical_cq,
    _closure_maps,
    _extend,
    denial_query,
    is_policy_loadable,
    perfect_ref,
)


class UnboundVariableError(Exception):
    """The formula is not a sentence: some variable occurrence is free."""


# --- active-domain evaluation -------------------------------------------------


class _Evaluator:
    """Bottom-up set evaluation: each subformula yields the set of satisfying
    assignments over its free variables."""

    def __init__(self, abox: ABox):
        self.rel = _abox_relations(abox)
        self.adom: list[Term] = sorted(abox.constants())
        self.adom_set = set(self.adom)

    def truth(self, node: FONode) -> bool:
        _, rows = self.rows(node)
        return bool(rows)

    def rows(self, node: FONode) -> tuple[tuple[Term, ...], set[tuple]]:
        if isinstance(node, AtomNode):
            return self._atom_rows(node.atom)
        if isinstance(node, Truth):
            return (), ({()} if node.value else set())
        if isinstance(node, Eq):
            return self._eq_rows(node)
        if isinstance(node, Not):
            v, rws = self.rows(node.body)
            if not v:
                return (), (set() if rws else {()})
            universe = set(product(self.adom, repeat=len(v)))
            return v, universe - rws
        if isinstance(node, Exists):
            v, rws = self.rows(node.body)
            if node.variable in v:
                i = v.index(node.variable)
                keep = v[:i] + v[i + 1 :]
                return keep, {r[:i] + r[i + 1 :] for r in rws}
            return v, (rws if self.adom else set())
        if isinstance(node, Or):
            parts = [self.rows(c) for c in node.children]
            out_vars: tuple[Term, ...] = ()
            for v, _ in parts:
                out_vars += tuple(x for x in v if x not in out_vars)
            out: set[tuple] = set()
            for v, rws in parts:
                out |= self._spread(v, rws, out_vars)
            return out_vars, out
        if isinstance(node, And):
            return self._and_rows(node)
        raise TypeError(f"not an FO node: {node!r}")

    def _atom_rows(self, atom: Atom) -> tuple[tuple[Term, ...], set[tuple]]:
        out_vars: list[Term] = []
        for t in atom.args:
            if t.is_var and t not in out_vars:
                out_vars.append(t)
        rows = set()
        for r in self.rel.candidates(atom, {}):
            b = _extend(atom, r, {})
            if b is not None:
                rows.add(tuple(b[x] for x in out_vars))
        return tuple(out_vars), rows

    def _eq_rows(self, node: Eq) -> tuple[tuple[Term, ...], set[tuple]]:
        l, r = node.left, node.right
        if l.is_const and r.is_const:
            return (), ({()} if l == r else set())
        if l.is_const or r.is_const:
            v, c = (r, l) if l.is_const else (l, r)
            return (v,), ({(c,)} if c in self.adom_set else set())
        if l == r:
            return (l,), {(a,) for a in self.adom}
        return (l, r), {(a, a) for a in self.adom}

    def _and_rows(self, node: And) -> tuple[tuple[Term, ...], set[tuple]]:
        positives = [c for c in node.children if not isinstance(c, Not)]
        negatives = [c for c in node.children if isinstance(c, Not)]
        if positives:
            parts = sorted((self.rows(c) for c in positives), key=lambda p: len(p[1]))
            cur_vars, cur = parts[0]
            for v, rws in parts[1:]:
                cur_vars, cur = self._join(cur_vars, cur, v, rws)
        else:
            cur_vars, cur = (), {()}
        for neg in negatives:
            iv, irows = self.rows(neg.body)
            missing = tuple(x for x in iv if x not in cur_vars)
            if missing:
                cur = self._spread(cur_vars, cur, cur_vars + missing)
                cur_vars = cur_vars + missing
            if not iv:
                if irows:
                    cur = set()
                continue
            positions = [cur_vars.index(x) for x in iv]
            cur = {r for r in cur if tuple(r[i] for i in positions) not in irows}
        return cur_vars, cur

    def _join(self, v1, r1, v2, r2):
        shared = [x for x in v2 if x in v1]
        out_vars = v1 + tuple(x for x in v2 if x not in v1)
        pos1 = [v1.index(x) for x in shared]
        pos2 = [v2.index(x) for x in shared]
        rest2 = [i for i, x in enumerate(v2) if x not in v1]
        index: dict[tuple, list[tuple]] = {}
        for r in r2:
            index.setdefault(tuple(r[i] for i in pos2), []).append(tuple(r[i] for i in rest2))
        out = set()
        for r in r1:
            key = tuple(r[i] for i in pos1)
            for tail in index.get(key, ()):
                out.add(r + tail)
        return out_vars, out

    def _spread(self, v, rows, out_vars):
        if v == out_vars:
            return rows
        missing = [x for x in out_vars if x not in v]
        src = {x: i for i, x in enumerate(v)}
        out = set()
        for r in rows:
            for combo in product(self.adom, repeat=len(missing)):
                fill = dict(zip(missing, combo))
                out.add(tuple(r[src[x]] if x in src else fill[x] for x in out_vars))
        return out


def eval_fo(q: FONode, abox: ABox) -> bool:
    """Truth of a sentence in the finite structure given by the ABox, with
    quantifiers ranging over the constants that occur in it."""
    free = free_variables(q)
    if free:
        names = ", ".join(sorted(t.name for t in free))
        raise UnboundVariableError(f"not a sentence; free variables: {names}")
    return _Evaluator(abox).truth(q)


# --- subsumption expansion ------------------------------------------------------


def _dedup(nodes: list[FONode]) -> list[FONode]:
    seen: set[FONode] = set()
    out = []
    for n in nodes:
        if n not in seen:
            seen.add(n)
            out.append(n)
    return out


def atom_rewr(q: FONode, tbox: TBox) -> FONode:
    """Replace every atom with the disjunction of the ways the TBox can
    entail it: subsumed concepts, role domains/ranges for concept atoms, and
    subsumed (possibly inverted) roles for role atoms."""
    maps = _closure_maps(tbox)
    counter = [0]

    def fresh() -> Term:
        counter[0] += 1
        return var(f"X_v{counter[0]}")

    def expand_concept(pred: str, t: Term) -> FONode:
        target = atomic(pred)
        subs = maps.concept_subsumees.get(target, [target])
        parts: list[FONode] = []
        for b in subs:
            if b.kind == "atomic":
                parts.append(AtomNode(Atom(b.name, (t,))))
            elif b.kind == "exists":
                x = fresh()
                parts.append(Exists(x, AtomNode(Atom(b.name, (t, x)))))
            else:
                x = fresh()
                parts.append(Exists(x, AtomNode(Atom(b.name, (x, t)))))
        return fo_or(parts)

    def expand_role(pred: str, t1: Term, t2: Term) -> FONode:
        target = RoleExpr(pred)
        subs = maps.role_subsumees.get(target, [target])
        parts: list[FONode] = []
        for r in subs:
            if r.inverse:
                parts.append(AtomNode(Atom(r.name, (t2, t1))))
            else:
                parts.append(AtomNode(Atom(r.name, (t1, t2))))
        return fo_or(_dedup(parts))

    def walk(node: FONode) -> FONode:
        if isinstance(node, AtomNode):
            a = node.atom
            if a.arity == 1:
                return expand_concept(a.predicate, a.args[0])
            return expand_role(a.predicate, a.args[0], a.args[1])
        if isinstance(node, And):
            return And(tuple(walk(c) for c in node.children))
        if isinstance(node, Or):
            return Or(tuple(walk(c) for c in node.children))
        if isinstance(node, Exists):
            return Exists(node.variable, walk(node.body))
        if isinstance(node, Not):
            return Not(walk(node.body))
        return node

    return walk(q)


# --- conflict patterns ------------------------------------------------------------


def _cq_key(q: ConjunctiveQuery) -> tuple:
    return tuple(
        (a.predicate, a.arity) + tuple((t.kind, t.name) for t in a.args)
        for a in q.sorted_atoms()
    )


def _partitions(items: list) -> Iterable[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield part + [[first]]


class _PatternStore:
    """Minimal violation patterns for a TBox and policy.

    `patterns` are canonical conjunctive queries; an exact (term-injective,
    generic values outside `rc`) match of a pattern is a minimal violating
    set, and every minimal violating set is such a match."""

    def __init__(self, patterns: tuple[ConjunctiveQuery, ...], rc: tuple[Term, ...]):
        self.patterns = patterns
        self.rc = rc


def _iter_bindings(atoms: list[Atom], rel, binding: dict):
    if not atoms:
        yield binding
        return
    best = max(atoms, key=lambda a: sum(1 for t in a.args if t.is_const or t in binding))
    rest = [a for a in atoms if a is not best]
    for row in rel.candidates(best, binding):
        nb = _extend(best, row, binding)
        if nb is not None:
            yield from _iter_bindings(rest, rel, nb)


def _has_proper_subimage(raw: list[ConjunctiveQuery], quotient: ConjunctiveQuery) -> bool:
    """True if some raw pattern maps into the quotient's atoms with an image
    that misses at least one of them (the quotient is then non-minimal)."""
    from .reasoner import _Relations

    rel = _Relations((a.predicate, a.args) for a in quotient.atoms)
    target = quotient.atoms
    for f in raw:
        if len(f.atoms) > len(target):
            # safe because the rewriting is closed under atom unification: a
            # collapsing match of a longer pattern factors through a reduced
            # pattern that is also in `raw` and has no more atoms than its image
            continue
        for b in _iter_bindings(list(f.atoms), rel, {}):
            image = frozenset(
                Atom(a.predicate, tuple(b.get(t, t) for t in a.args)) for a in f.atoms
            )
            if image < target:
                return True
    return False


@lru_cache(maxsize=1024)
def _conflict_patterns(tbox: TBox, policy: Policy) -> _PatternStore:
    raw: dict[tuple, ConjunctiveQuery] = {}
    for d in policy.denials:
        for rewritten in perfect_ref(denial_query(d), tbox):
            c = _canonical_cq(rewritten)
            raw[_cq_key(c)] = c
    raw_list = [raw[k] for k in sorted(raw)]
    rc = sorted({t for f in raw_list for a in f.atoms for t in a.args if t.is_const})

    quotients: dict[tuple, ConjunctiveQuery] = {}
    for f in raw_list:
        variables = sorted(f.variables)
        for part in _partitions(variables):
            for assignment in product([None] + rc, repeat=len(part)):
                subst: dict[Term, Term] = {}
                for block, target in zip(part, assignment):
                    rep = target if target is not None else block[0]
                    for v in block:
                        subst[v] = rep
                q = _canonical_cq(
                    ConjunctiveQuery(
                        frozenset(
                            Atom(a.predicate, tuple(subst.get(t, t) for t in a.args))
                            for a in f.atoms
                        )
                    )
                )
                quotients[_cq_key(q)] = q

    minimal = [
        quotients[k]
        for k in sorted(quotients)
        if not _has_proper_subimage(raw_list, quotients[k])
    ]
    return _PatternStore(tuple(minimal), tuple(rc))


# --- repair-aware reformulation -----------------------------------------------------


def _guard_for(
    alpha: Atom, beta: Atom, pattern: ConjunctiveQuery, rc: tuple[Term, ...], fresh
) -> Optional[FONode]:
    """Condition under which a match of `alpha` is the `beta`-atom of an
    exact match of `pattern`; None when that is statically impossible."""
    if beta.predicate != alpha.predicate or beta.arity != alpha.arity:
        return None
    binding: dict[Term, Term] = {}
    eqs: list[FONode] = []
    for bp, ap in zip(beta.args, alpha.args):
        if bp.is_const:
            if ap.is_const:
                if ap != bp:
                    return None
            else:
                eqs.append(Eq(ap, bp))
        else:
            prev = binding.get(bp)
            if prev is None:
                binding[bp] = ap
            elif prev == ap:
                pass
            elif prev.is_const and ap.is_const:
                return None
            else:
                eqs.append(Eq(*sorted((prev, ap))))

    generics = sorted(pattern.variables)
    fresh_map = {g: fresh() for g in generics if g not in binding}

    def value_of(t: Term) -> Term:
        if t.is_const:
            return t
        return binding.get(t) or fresh_map[t]

    remaining = [
        AtomNode(Atom(a.predicate, tuple(value_of(t) for t in a.args)))
        for a in pattern.sorted_atoms()
        if a != beta
    ]

    neqs: list[FONode] = []
    values = [value_of(g) for g in generics]
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            t1, t2 = values[i], values[j]
            if t1 == t2:
                return None
            if t1.is_const and t2.is_const:
                continue
            neqs.append(Not(Eq(*sorted((t1, t2)))))
    for t in values:
        for c in rc:
            if t.is_const:
                if t == c:
                    return None
            else:
                neqs.append(Not(Eq(t, c)))

    body = fo_and(eqs + remaining + neqs)
    return fo_exists(sorted(fresh_map.values()), body)


def _build_iar(
    q: ConjunctiveQuery, tbox: TBox, policy: Policy
) -> tuple[FONode, int, int]:
    if not is_policy_loadable(tbox, policy):
        raise InconsistentOntologyError("TBox and policy are inconsistent")
    store = _conflict_patterns(tbox, policy)
    counter = [0]

    def fresh() -> Term:
        counter[0] += 1
        return var(f"X_v{counter[0]}")

    rewrites = sorted(perfect_ref(q, tbox), key=_cq_key)
    guard_count = 0
    disjuncts: list[FONode] = []
    for q1 in rewrites:
        atoms = q1.sorted_atoms()
        guards: list[FONode] = []
        for alpha in atoms:
            for pattern in store.patterns:
                for beta in pattern.sorted_atoms():
                    g = _guard_for(alpha, beta, pattern, store.rc, fresh)
                    if g is not None:
                        guards.append(Not(g))
        guards = _dedup(guards)
        guard_count += len(guards)
        body = fo_and([AtomNode(a) for a in atoms] + guards)
        disjuncts.append(fo_exists(sorted(q1.variables), body))

    return fo_or(_dedup(disjuncts)), len(rewrites), guard_count


def iar_rewrite(q: ConjunctiveQuery, tbox: TBox, policy: Policy) -> FONode:
    """Reformulate `q` so that evaluation over any ABox consistent with the
    TBox decides entailment from that ABox's repair: each rewriting of `q`
    is kept, with every atom guarded against participating in a minimal
    policy-violating subset."""
    node, _, _ = _build_iar(q, tbox, policy)
    return node


def qib_rewrite(q: ConjunctiveQuery, tbox: TBox, policy: Policy) -> FONode:
    """Repair-aware reformulation composed with subsumption expansion, so the
    result can be evaluated directly over raw, unclosed data."""
    return atom_rewr(iar_rewrite(q, tbox, policy), tbox)


@dataclass(frozen=True)
class RewritingReport:
    """Size accounting for one reformulation; independent of any ABox."""

    input_query: str
    perfect_ref_size: int
    guard_count: int
    node_count: int


def qib_rewrite_report(
    q: ConjunctiveQuery, tbox: TBox, policy: Policy
) -> tuple[FONode, RewritingReport]:
    """`qib_rewrite` plus size accounting for the reformulation."""
    from .parser import serialize_query

    iar_node, pr_size, guard_count = _build_iar(q, tbox, policy)
    node = atom_rewr(iar_node, tbox)
    report = RewritingReport(
        input_query=serialize_query(q).strip(),
        perfect_ref_size=pr_size,
        guard_count=guard_count,
        node_count=node_count(node),
    )
    return node, report
