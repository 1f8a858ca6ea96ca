"""Core reasoning for DL-Lite-style ontologies.

The pieces fit together like this: `saturate_tbox` closes the inclusion
axioms into full subsumption / disjointness relations; `perfect_ref` rewrites
a conjunctive query into a union of queries whose plain evaluation over the
raw data coincides with certain-answer entailment; `abox_closure` materializes
every entailed ground atom over the data constants; `is_consistent` checks
that no entailed disjointness is witnessed.  `chase_bounded` builds a
truncated canonical model and serves as an independent entailment oracle for
validating the rewriting.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union

from .model import (
    ABox,
    Atom,
    BasicConcept,
    ConceptInclusion,
    ConjunctiveQuery,
    Policy,
    RoleExpr,
    RoleInclusion,
    TBox,
    Term,
    atomic,
    var,
)

EMPTY_ABOX = ABox(frozenset())


class InconsistentOntologyError(Exception):
    """Raised when an operation requires a consistent TBox + ABox."""


@dataclass(frozen=True)
class InclusionClosure:
    """Entailed subsumptions and disjointness pairs over the signature.

    `concept_subs` contains (X, Y) iff every instance of X must be an
    instance of Y; disjointness pairs are unordered (frozensets of size 1
    encode an unsatisfiable expression)."""

    concept_subs: frozenset[tuple[BasicConcept, BasicConcept]]
    role_subs: frozenset[tuple[RoleExpr, RoleExpr]]
    disjoint_concepts: frozenset[frozenset[BasicConcept]]
    disjoint_roles: frozenset[frozenset[RoleExpr]]


@lru_cache(maxsize=4096)
def saturate_tbox(tbox: TBox) -> InclusionClosure:
    """Close the TBox under reflexivity, transitivity, inverse propagation,
    and inheritance of disjointness; unsatisfiable expressions subsume (and
    are disjoint from) everything."""
    basics = set(tbox.basic_concepts())
    roles = set(tbox.role_exprs())

    pos_c: set[tuple[BasicConcept, BasicConcept]] = {(b, b) for b in basics}
    pos_r: set[tuple[RoleExpr, RoleExpr]] = {(r, r) for r in roles}
    neg_c: set[frozenset[BasicConcept]] = set()
    neg_r: set[frozenset[RoleExpr]] = set()

    for ax in tbox.axioms:
        if isinstance(ax, ConceptInclusion):
            if ax.negated:
                neg_c.add(frozenset((ax.lhs, ax.rhs)))
            else:
                pos_c.add((ax.lhs, ax.rhs))
        else:
            if ax.negated:
                neg_r.add(frozenset((ax.lhs, ax.rhs)))
            else:
                pos_r.add((ax.lhs, ax.rhs))

    changed = True
    while changed:
        changed = False

        for (r, s) in list(pos_r):
            for pair in ((r.inverted(), s.inverted()),):
                if pair not in pos_r:
                    pos_r.add(pair)
                    changed = True
            for pair in ((r.domain(), s.domain()), (r.range(), s.range())):
                if pair not in pos_c:
                    pos_c.add(pair)
                    changed = True

        for rel in (pos_c, pos_r):
            by_lhs: dict = {}
            for (x, y) in rel:
                by_lhs.setdefault(y, []).append(x)
            new = set()
            for (x, y) in rel:
                for w in by_lhs.get(x, ()):
                    if (w, y) not in rel:
                        new.add((w, y))
            if new:
                rel |= new
                changed = True

        # disjointness inherited along positive subsumption
        for neg, pos in ((neg_c, pos_c), (neg_r, pos_r)):
            subs_of: dict = {}
            for (x, y) in pos:
                subs_of.setdefault(y, []).append(x)
            new = set()
            for pair in neg:
                items = tuple(pair)
                x = items[0]
                y = items[-1]
                for x2 in subs_of.get(x, ()):
                    for y2 in subs_of.get(y, ()):
                        p = frozenset((x2, y2))
                        if p not in neg:
                            new.add(p)
            if new:
                neg |= new
                changed = True

        for pair in list(neg_r):
            items = tuple(pair)
            p = frozenset((items[0].inverted(), items[-1].inverted()))
            if p not in neg_r:
                neg_r.add(p)
                changed = True

        # an empty role has empty domain and range, and vice versa
        for r in roles:
            if frozenset((r,)) in neg_r:
                for c in (r.domain(), r.range()):
                    p = frozenset((c,))
                    if p not in neg_c:
                        neg_c.add(p)
                        changed = True
        for r in roles:
            if frozenset((r.domain(),)) in neg_c and frozenset((r,)) not in neg_r:
                neg_r.add(frozenset((r,)))
                changed = True

        # unsatisfiable expressions entail everything vacuously
        for b in basics:
            if frozenset((b,)) in neg_c:
                for y in basics:
                    if (b, y) not in pos_c:
                        pos_c.add((b, y))
                        changed = True
                    p = frozenset((b, y))
                    if p not in neg_c:
                        neg_c.add(p)
                        changed = True
        for r in roles:
            if frozenset((r,)) in neg_r:
                for s in roles:
                    if (r, s) not in pos_r:
                        pos_r.add((r, s))
                        changed = True
                    p = frozenset((r, s))
                    if p not in neg_r:
                        neg_r.add(p)
                        changed = True

    return InclusionClosure(
        frozenset(pos_c), frozenset(pos_r), frozenset(neg_c), frozenset(neg_r)
    )


class _ClosureMaps:
    """Lookup tables derived from an InclusionClosure."""

    def __init__(self, closure: InclusionClosure):
        self.concept_subsumers: dict[BasicConcept, list[BasicConcept]] = {}
        self.concept_subsumees: dict[BasicConcept, list[BasicConcept]] = {}
        for (x, y) in closure.concept_subs:
            self.concept_subsumers.setdefault(x, []).append(y)
            self.concept_subsumees.setdefault(y, []).append(x)
        self.role_subsumers: dict[RoleExpr, list[RoleExpr]] = {}
        self.role_subsumees: dict[RoleExpr, list[RoleExpr]] = {}
        for (x, y) in closure.role_subs:
            self.role_subsumers.setdefault(x, []).append(y)
            self.role_subsumees.setdefault(y, []).append(x)
        for m in (
            self.concept_subsumers,
            self.concept_subsumees,
            self.role_subsumers,
            self.role_subsumees,
        ):
            for k in m:
                m[k].sort()


@lru_cache(maxsize=4096)
def _closure_maps(tbox: TBox) -> _ClosureMaps:
    return _ClosureMaps(saturate_tbox(tbox))


def concept_atom(b: BasicConcept, t: Term, side: Term) -> Atom:
    """The atom asserting membership of `t` in `b`, with `side` as the
    witness position for existential expressions."""
    if b.kind == "atomic":
        return Atom(b.name, (t,))
    if b.kind == "exists":
        return Atom(b.name, (t, side))
    return Atom(b.name, (side, t))


def role_atom(r: RoleExpr, t1: Term, t2: Term) -> Atom:
    if r.inverse:
        return Atom(r.name, (t2, t1))
    return Atom(r.name, (t1, t2))


def _realized(atom: Atom) -> list[tuple[BasicConcept, Term]]:
    """Basic concepts directly witnessed by one atom."""
    if atom.arity == 1:
        return [(atomic(atom.predicate), atom.args[0])]
    return [
        (BasicConcept("exists", atom.predicate), atom.args[0]),
        (BasicConcept("exists_inv", atom.predicate), atom.args[1]),
    ]


# --- conjunctive query evaluation -------------------------------------------


class _Relations:
    """Predicate-indexed store of argument tuples (over any term type)."""

    def __init__(self, facts: Iterable[tuple[str, tuple]]):
        self.by_pred: dict[str, list[tuple]] = {}
        self.by_pred_pos: dict[tuple, list[tuple]] = {}
        for pred, args in facts:
            self.by_pred.setdefault(pred, []).append(args)
        for pred, rows in self.by_pred.items():
            for row in rows:
                for i, v in enumerate(row):
                    self.by_pred_pos.setdefault((pred, i, v), []).append(row)

    def candidates(self, atom: Atom, binding: dict) -> Iterable[tuple]:
        best: Optional[list[tuple]] = None
        for i, t in enumerate(atom.args):
            v = t if t.is_const else binding.get(t)
            if v is not None:
                rows = self.by_pred_pos.get((atom.predicate, i, v), [])
                if best is None or len(rows) < len(best):
                    best = rows
        if best is not None:
            return best
        return self.by_pred.get(atom.predicate, [])


def _extend(atom: Atom, row: tuple, binding: dict) -> Optional[dict]:
    if len(row) != atom.arity:
        return None
    new = None
    for t, v in zip(atom.args, row):
        if t.is_const:
            if t != v:
                return None
        else:
            bound = (new or binding).get(t)
            if bound is None:
                if new is None:
                    new = dict(binding)
                new[t] = v
            elif bound != v:
                return None
    return new if new is not None else dict(binding)


def _hom_exists(atoms: list[Atom], rel: _Relations, binding: dict) -> bool:
    if not atoms:
        return True

    def boundness(a: Atom) -> int:
        return sum(1 for t in a.args if t.is_const or t in binding)

    best = max(atoms, key=boundness)
    rest = [a for a in atoms if a is not best]
    for row in rel.candidates(best, binding):
        nb = _extend(best, row, binding)
        if nb is not None and _hom_exists(rest, rel, nb):
            return True
    return False


@lru_cache(maxsize=1024)
def _abox_relations(abox: ABox) -> _Relations:
    return _Relations((a.predicate, a.args) for a in abox.atoms)


def eval_cq(q: ConjunctiveQuery, abox: ABox) -> bool:
    """True iff some homomorphism maps the query atoms into the ABox
    (variables to constants, constants fixed)."""
    return _hom_exists(list(q.atoms), _abox_relations(abox), {})


# --- query rewriting ----------------------------------------------------------


def _canonical_cq(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Deterministic variable renaming; used to deduplicate rewritings.

    The renaming follows atom order under the original names, so the result
    is a pure function of the input (no dependence on set iteration order)."""

    def key(a: Atom):
        return (a.predicate, a.arity, tuple((t.kind, t.name) for t in a.args))

    atoms = sorted(q.atoms, key=key)
    mapping: dict[Term, Term] = {}
    for a in atoms:
        for t in a.args:
            if t.is_var and t not in mapping:
                mapping[t] = var(f"V{len(mapping) + 1}")
    return ConjunctiveQuery(
        frozenset(Atom(a.predicate, tuple(mapping.get(t, t) for t in a.args)) for a in atoms)
    )


def _var_counts(atoms: frozenset[Atom]) -> dict[Term, int]:
    counts: dict[Term, int] = {}
    for a in atoms:
        for t in a.args:
            if t.is_var:
                counts[t] = counts.get(t, 0) + 1
    return counts


def _fresh_var(atoms: frozenset[Atom]) -> Term:
    used = {t.name for a in atoms for t in a.args}
    i = 1
    while f"F{i}" in used:
        i += 1
    return var(f"F{i}")


def _apply_concept_axiom(
    ax: ConceptInclusion, g: Atom, counts: dict[Term, int], atoms: frozenset[Atom]
) -> Optional[Atom]:
    """Replacement for `g` via `ax` read right-to-left, or None."""
    rhs = ax.rhs
    if rhs.kind == "atomic":
        if g.arity != 1 or g.predicate != rhs.name:
            return None
        t = g.args[0]
    elif rhs.kind == "exists":
        if g.arity != 2 or g.predicate != rhs.name:
            return None
        t2 = g.args[1]
        if t2.is_const or counts.get(t2, 0) != 1:
            return None
        t = g.args[0]
    else:
        if g.arity != 2 or g.predicate != rhs.name:
            return None
        t1 = g.args[0]
        if t1.is_const or counts.get(t1, 0) != 1:
            return None
        t = g.args[1]
    lhs = ax.lhs
    if lhs.kind == "atomic":
        return Atom(lhs.name, (t,))
    return concept_atom(lhs, t, _fresh_var(atoms))


def _apply_role_axiom(ax: RoleInclusion, g: Atom) -> Optional[Atom]:
    if g.arity != 2 or g.predicate != ax.rhs.name:
        return None
    t1, t2 = g.args
    if ax.rhs.inverse:
        t1, t2 = t2, t1
    return role_atom(ax.lhs, t1, t2)


def _unify_atoms(g1: Atom, g2: Atom) -> Optional[dict[Term, Term]]:
    if g1.predicate != g2.predicate or g1.arity != g2.arity:
        return None
    subst: dict[Term, Term] = {}

    def walk(t: Term) -> Term:
        while t.is_var and t in subst:
            t = subst[t]
        return t

    for a, b in zip(g1.args, g2.args):
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if a.is_var:
            subst[a] = b
        elif b.is_var:
            subst[b] = a
        else:
            return None
    return subst


def _substitute(atoms: frozenset[Atom], subst: dict[Term, Term]) -> frozenset[Atom]:
    def resolve(t: Term) -> Term:
        while t.is_var and t in subst:
            t = subst[t]
        return t

    return frozenset(Atom(a.predicate, tuple(resolve(t) for t in a.args)) for a in atoms)


@lru_cache(maxsize=65536)
def perfect_ref(q: ConjunctiveQuery, tbox: TBox) -> frozenset[ConjunctiveQuery]:
    """Rewrite `q` into the finite set of conjunctive queries whose direct
    evaluation over any ABox decides certain-answer entailment.

    Alternates two steps until no new query appears: replacing an atom with
    the left side of an applicable positive inclusion (existential inclusions
    apply only when the witness position holds an unshared variable), and
    collapsing two unifiable atoms so that previously shared variables may
    become unshared."""
    pos_axioms = [ax for ax in tbox.axioms if not ax.negated]
    start = _canonical_cq(q)
    seen: set[ConjunctiveQuery] = {start}
    frontier: list[ConjunctiveQuery] = [start]
    while frontier:
        cur = frontier.pop()
        counts = _var_counts(cur.atoms)
        for g in cur.atoms:
            for ax in pos_axioms:
                if isinstance(ax, ConceptInclusion):
                    repl = _apply_concept_axiom(ax, g, counts, cur.atoms)
                else:
                    repl = _apply_role_axiom(ax, g)
                if repl is None:
                    continue
                new = _canonical_cq(ConjunctiveQuery((cur.atoms - {g}) | {repl}))
                if new not in seen:
                    seen.add(new)
                    frontier.append(new)
        atom_list = sorted(cur.atoms, key=lambda a: (a.predicate, a.arity))
        for i in range(len(atom_list)):
            for j in range(i + 1, len(atom_list)):
                subst = _unify_atoms(atom_list[i], atom_list[j])
                if subst is None or not subst:
                    continue
                new = _canonical_cq(ConjunctiveQuery(_substitute(cur.atoms, subst)))
                if new not in seen:
                    seen.add(new)
                    frontier.append(new)
    return frozenset(seen)


def _entailed_unchecked(tbox: TBox, abox: ABox, q: ConjunctiveQuery) -> bool:
    return any(eval_cq(r, abox) for r in perfect_ref(q, tbox))


# --- consistency --------------------------------------------------------------


def _violation_query_concepts(pair: frozenset[BasicConcept]) -> ConjunctiveQuery:
    items = sorted(pair)
    x = var("X1")
    atoms = {concept_atom(items[0], x, var("Y1")), concept_atom(items[-1], x, var("Y2"))}
    return ConjunctiveQuery(frozenset(atoms))


def _violation_query_roles(pair: frozenset[RoleExpr]) -> ConjunctiveQuery:
    items = sorted(pair)
    x, y = var("X1"), var("X2")
    atoms = {role_atom(items[0], x, y), role_atom(items[-1], x, y)}
    return ConjunctiveQuery(frozenset(atoms))


@lru_cache(maxsize=65536)
def is_consistent(tbox: TBox, abox: ABox) -> bool:
    """True iff the TBox and ABox admit a model: no entailed disjointness
    pair is witnessed by the (rewritten) data."""
    closure = saturate_tbox(tbox)
    for pair in closure.disjoint_concepts:
        if _entailed_unchecked(tbox, abox, _violation_query_concepts(pair)):
            return False
    for pair in closure.disjoint_roles:
        if _entailed_unchecked(tbox, abox, _violation_query_roles(pair)):
            return False
    return True


def _require_consistent(tbox: TBox, abox: ABox) -> None:
    if not is_consistent(tbox, abox):
        raise InconsistentOntologyError("TBox and ABox are inconsistent")


def cq_entailed(tbox: TBox, abox: ABox, q: ConjunctiveQuery) -> bool:
    """Certain-answer entailment of a Boolean conjunctive query."""
    _require_consistent(tbox, abox)
    return _entailed_unchecked(tbox, abox, q)


def denial_query(denial) -> ConjunctiveQuery:
    return ConjunctiveQuery(denial.body)


@lru_cache(maxsize=65536)
def is_policy_consistent(tbox: TBox, policy: Policy, abox: ABox) -> bool:
    """True iff no denial body is entailed by the TBox and ABox."""
    _require_consistent(tbox, abox)
    return not any(
        _entailed_unchecked(tbox, abox, denial_query(d)) for d in policy.denials
    )


def is_policy_loadable(tbox: TBox, policy: Policy) -> bool:
    """True iff the TBox alone entails no denial body.  Inclusion axioms
    cannot force instances into existence, so this never fails for the
    ontology language at hand; the gate exists to reject bad policies early
    should the language ever grow."""
    return not any(
        _entailed_unchecked(tbox, EMPTY_ABOX, denial_query(d)) for d in policy.denials
    )


@lru_cache(maxsize=16384)
def abox_closure(tbox: TBox, abox: ABox) -> ABox:
    """All ground atoms over the data constants entailed by TBox + ABox.
    Existential axioms only introduce anonymous individuals, so no new
    constants can appear."""
    _require_consistent(tbox, abox)
    maps = _closure_maps(tbox)
    out = set(abox.atoms)
    for atom in abox.atoms:
        if atom.arity == 2:
            r = RoleExpr(atom.predicate)
            for sup in maps.role_subsumers.get(r, ()):
                out.add(role_atom(sup, atom.args[0], atom.args[1]))
        for (b, u) in _realized(atom):
            for sup in maps.concept_subsumers.get(b, ()):
                if sup.kind == "atomic":
                    out.add(Atom(sup.name, (u,)))
    return ABox(frozenset(out))


# --- bounded chase oracle ------------------------------------------------------


@dataclass(frozen=True)
class Null:
    id: int

    def __repr__(self):
        return f"n{self.id}"


ChaseTerm = Union[Term, Null]

_CHASE_ATOM_CAP = 500_000


class ChaseStructure:
    """A canonical model truncated at a null depth bound.

    `atoms` holds (predicate, args) pairs whose arguments are constants or
    labelled nulls; `depth` maps each null to its distance from the named
    part."""

    def __init__(self, atoms: frozenset[tuple[str, tuple]], depth: dict[Null, int]):
        self.atoms = atoms
        self.depth = depth

    def named_part(self) -> ABox:
        return ABox(
            frozenset(
                Atom(pred, args)
                for (pred, args) in self.atoms
                if all(isinstance(t, Term) for t in args)
            )
        )

    def __len__(self):
        return len(self.atoms)


def chase_bounded(tbox: TBox, abox: ABox, depth: int) -> ChaseStructure:
    """Apply inclusion axioms with fresh nulls for unsatisfied existentials,
    stopping at the given null depth.  Existential steps are skipped when a
    witness already exists (restricted chase)."""
    _require_consistent(tbox, abox)
    maps = _closure_maps(tbox)

    atoms: set[tuple[str, tuple]] = {(a.predicate, a.args) for a in abox.atoms}
    depths: dict[ChaseTerm, int] = {}
    for a in abox.atoms:
        for t in a.args:
            depths[t] = 0
    next_null = 1

    def saturate():
        changed = True
        while changed:
            changed = False
            for (pred, args) in list(atoms):
                if len(args) == 2:
                    r = RoleExpr(pred)
                    for sup in maps.role_subsumers.get(r, ()):
                        fact = (
                            (sup.name, (args[1], args[0]))
                            if sup.inverse
                            else (sup.name, (args[0], args[1]))
                        )
                        if fact not in atoms:
                            atoms.add(fact)
                            changed = True
                    realized = [
                        (BasicConcept("exists", pred), args[0]),
                        (BasicConcept("exists_inv", pred), args[1]),
                    ]
                else:
                    realized = [(atomic(pred), args[0])]
                for (b, u) in realized:
                    for sup in maps.concept_subsumers.get(b, ()):
                        if sup.kind == "atomic":
                            fact = (sup.name, (u,))
                            if fact not in atoms:
                                atoms.add(fact)
                                changed = True

    saturate()
    progress = True
    while progress:
        progress = False
        has_succ: dict[tuple[str, int], set] = {}
        for (pred, args) in atoms:
            if len(args) == 2:
                has_succ.setdefault((pred, 0), set()).add(args[0])
                has_succ.setdefault((pred, 1), set()).add(args[1])
        pending = []
        for (pred, args) in list(atoms):
            if len(args) == 2:
                realized = [
                    (BasicConcept("exists", pred), args[0]),
                    (BasicConcept("exists_inv", pred), args[1]),
                ]
            else:
                realized = [(atomic(pred), args[0])]
            for (b, u) in realized:
                if depths[u] >= depth:
                    continue
                for sup in maps.concept_subsumers.get(b, ()):
                    if sup.kind == "exists" and u not in has_succ.get((sup.name, 0), ()):
                        pending.append((sup.name, u, 0))
                        has_succ.setdefault((sup.name, 0), set()).add(u)
                    elif sup.kind == "exists_inv" and u not in has_succ.get((sup.name, 1), ()):
                        pending.append((sup.name, u, 1))
                        has_succ.setdefault((sup.name, 1), set()).add(u)
        for (role, u, pos) in pending:
            null = Null(next_null)
            next_null += 1
            depths[null] = depths[u] + 1
            fact = (role, (u, null)) if pos == 0 else (role, (null, u))
            atoms.add(fact)
            progress = True
        if len(atoms) > _CHASE_ATOM_CAP:
            raise RuntimeError("chase structure exceeds safety cap")
        saturate()

    null_depths = {t: d for t, d in depths.items() if isinstance(t, Null)}
    return ChaseStructure(frozenset(atoms), null_depths)


def chase_satisfies(chase: ChaseStructure, q: ConjunctiveQuery) -> bool:
    """Homomorphism check into a chase structure; variables may map to nulls."""
    rel = _Relations(iter(chase.atoms))
    return _hom_exists(list(q.atoms), rel, {})


def chase_entails(tbox: TBox, abox: ABox, q: ConjunctiveQuery) -> bool:
    """Entailment decided against the truncated canonical model.

    Depth bound: the subtree below a null is determined by the role end that
    created it, so every distinct null type first appears within
    2 * |role names| steps of the named part; relocating a connected match of
    n atoms to the shallowest copy of its root type then needs at most n
    further steps."""
    bound = len(q.atoms) + 2 * len(tbox.role_names) + 1
    return chase_satisfies(chase_bounded(tbox, abox, bound), q)
