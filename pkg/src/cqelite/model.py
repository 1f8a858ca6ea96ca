"""Immutable core types: ontologies, policies, queries, censor theories.

All types are frozen dataclasses with value semantics, so they can be used
as dict keys and set members and shared freely across threads.  A single
global ordering over ground atoms (`atom_order_key`) is defined here and is
the "lexicographic" order used by the greedy censor construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# Identifiers containing "_v<digit>" are reserved for machine-generated
# quantified variables, so rewritten queries can never collide with user names.
RESERVED_RE = re.compile(r"_v[0-9]")

CONST = "const"
VAR = "var"


def is_valid_ident(name: str) -> bool:
    return bool(IDENT_RE.match(name))


def is_reserved_ident(name: str) -> bool:
    return bool(RESERVED_RE.search(name))


@dataclass(frozen=True, order=True)
class Term:
    """A constant or a variable; equality is by (kind, name)."""

    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in (CONST, VAR):
            raise ValueError(f"bad term kind: {self.kind!r}")
        if not is_valid_ident(self.name):
            raise ValueError(f"bad term name: {self.name!r}")

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    @property
    def is_const(self) -> bool:
        return self.kind == CONST

    def __repr__(self):
        return self.name


def const(name: str) -> Term:
    return Term(CONST, name)


def var(name: str) -> Term:
    return Term(VAR, name)


@dataclass(frozen=True)
class Atom:
    """A concept atom A(t) or a role atom P(t1,t2)."""

    predicate: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if not is_valid_ident(self.predicate):
            raise ValueError(f"bad predicate name: {self.predicate!r}")
        if len(self.args) not in (1, 2):
            raise ValueError(f"atom arity must be 1 or 2, got {len(self.args)}")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return all(t.is_const for t in self.args)

    def variables(self) -> frozenset[Term]:
        return frozenset(t for t in self.args if t.is_var)

    def __repr__(self):
        return f"{self.predicate}({','.join(t.name for t in self.args)})"


def atom_order_key(atom: Atom) -> tuple:
    """Global canonical order: predicate name, then arity (unary predicates
    sort before binary ones of the same name), then argument names."""
    return (atom.predicate, atom.arity) + tuple(t.name for t in atom.args)


ATOMIC = "atomic"
EXISTS = "exists"
EXISTS_INV = "exists_inv"


@dataclass(frozen=True, order=True)
class BasicConcept:
    """An atomic concept, or the domain/range of a role (exists / exists_inv)."""

    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in (ATOMIC, EXISTS, EXISTS_INV):
            raise ValueError(f"bad concept kind: {self.kind!r}")

    def __repr__(self):
        if self.kind == ATOMIC:
            return self.name
        return f"ex {self.name}" + ("-" if self.kind == EXISTS_INV else "")


def atomic(name: str) -> BasicConcept:
    return BasicConcept(ATOMIC, name)


def exists(role: str) -> BasicConcept:
    return BasicConcept(EXISTS, role)


def exists_inv(role: str) -> BasicConcept:
    return BasicConcept(EXISTS_INV, role)


@dataclass(frozen=True, order=True)
class RoleExpr:
    """A role name or its inverse."""

    name: str
    inverse: bool = False

    def inverted(self) -> RoleExpr:
        return RoleExpr(self.name, not self.inverse)

    def domain(self) -> BasicConcept:
        return exists_inv(self.name) if self.inverse else exists(self.name)

    def range(self) -> BasicConcept:
        return exists(self.name) if self.inverse else exists_inv(self.name)

    def __repr__(self):
        return self.name + ("-" if self.inverse else "")


@dataclass(frozen=True, order=True)
class ConceptInclusion:
    lhs: BasicConcept
    rhs: BasicConcept
    negated: bool = False  # True encodes disjointness: lhs [= -rhs

    def __repr__(self):
        return f"{self.lhs} [= {'-' if self.negated else ''}{self.rhs}"


@dataclass(frozen=True, order=True)
class RoleInclusion:
    lhs: RoleExpr
    rhs: RoleExpr
    negated: bool = False

    def __repr__(self):
        return f"role {self.lhs} [= {'-' if self.negated else ''}{self.rhs}"


TBoxAxiom = Union[ConceptInclusion, RoleInclusion]


def _axiom_names(axiom: TBoxAxiom) -> tuple[set[str], set[str]]:
    """(concept names, role names) referenced by one axiom."""
    concepts: set[str] = set()
    roles: set[str] = set()
    if isinstance(axiom, ConceptInclusion):
        for side in (axiom.lhs, axiom.rhs):
            if side.kind == ATOMIC:
                concepts.add(side.name)
            else:
                roles.add(side.name)
    else:
        roles.add(axiom.lhs.name)
        roles.add(axiom.rhs.name)
    return concepts, roles


@dataclass(frozen=True)
class TBox:
    axioms: frozenset[TBoxAxiom]
    concept_names: frozenset[str] = frozenset()
    role_names: frozenset[str] = frozenset()

    @staticmethod
    def of(axioms=(), concept_names=(), role_names=()) -> TBox:
        """Build a TBox whose signature covers every name in `axioms`."""
        concepts = set(concept_names)
        roles = set(role_names)
        for ax in axioms:
            c, r = _axiom_names(ax)
            concepts |= c
            roles |= r
        clash = concepts & roles
        if clash:
            raise ValueError(f"names used as both concept and role: {sorted(clash)}")
        return TBox(frozenset(axioms), frozenset(concepts), frozenset(roles))

    def basic_concepts(self) -> list[BasicConcept]:
        out = [atomic(c) for c in sorted(self.concept_names)]
        for r in sorted(self.role_names):
            out.append(exists(r))
            out.append(exists_inv(r))
        return out

    def role_exprs(self) -> list[RoleExpr]:
        out = []
        for r in sorted(self.role_names):
            out.append(RoleExpr(r))
            out.append(RoleExpr(r, inverse=True))
        return out

    def __iter__(self) -> Iterator[TBoxAxiom]:
        return iter(self.axioms)

    def __len__(self):
        return len(self.axioms)


def normalize(tbox: TBox) -> TBox:
    """Structurally canonical TBox: deduplicated axioms, signature recomputed
    from the axioms plus any explicitly declared names."""
    return TBox.of(tbox.axioms, tbox.concept_names, tbox.role_names)


@dataclass(frozen=True)
class ABox:
    atoms: frozenset[Atom]

    def __post_init__(self):
        for a in self.atoms:
            if not a.is_ground:
                raise ValueError(f"non-ground atom in ABox: {a}")

    @staticmethod
    def of(atoms=()) -> ABox:
        return ABox(frozenset(atoms))

    def constants(self) -> frozenset[Term]:
        return frozenset(t for a in self.atoms for t in a.args)

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=atom_order_key)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms


EMPTY_ABOX = ABox(frozenset())


@dataclass(frozen=True)
class Denial:
    """A forbidden pattern: the existential closure of `body` must never hold."""

    body: frozenset[Atom]

    def __post_init__(self):
        if not self.body:
            raise ValueError("denial body must be non-empty")

    @property
    def variables(self) -> frozenset[Term]:
        return frozenset(v for a in self.body for v in a.variables())

    def sorted_body(self) -> list[Atom]:
        return sorted(self.body, key=atom_order_key)


@dataclass(frozen=True)
class Policy:
    denials: frozenset[Denial]

    @staticmethod
    def of(denials=()) -> Policy:
        return Policy(frozenset(denials))

    def __iter__(self) -> Iterator[Denial]:
        return iter(self.denials)

    def __len__(self):
        return len(self.denials)


EMPTY_POLICY = Policy(frozenset())


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A Boolean conjunctive query: every variable is implicitly existential."""

    atoms: frozenset[Atom]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("conjunctive query must have at least one atom")

    @staticmethod
    def of(atoms) -> ConjunctiveQuery:
        return ConjunctiveQuery(frozenset(atoms))

    @property
    def variables(self) -> frozenset[Term]:
        return frozenset(v for a in self.atoms for v in a.variables())

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=atom_order_key)

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return " AND ".join(repr(a) for a in self.sorted_atoms())


# --- First-order query AST -------------------------------------------------
#
# Rewriting outputs live in a richer language than conjunctive queries:
# disjunction for the subsumption-expansion of atoms, negation for repair
# guards, and equality tests so guards can demand that distinct pattern
# positions really carry distinct values.


@dataclass(frozen=True)
class AtomNode:
    atom: Atom


@dataclass(frozen=True)
class And:
    children: tuple["FONode", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["FONode", ...]


@dataclass(frozen=True)
class Exists:
    variable: Term
    body: "FONode"

    def __post_init__(self):
        if not self.variable.is_var:
            raise ValueError("Exists must bind a variable")


@dataclass(frozen=True)
class Not:
    body: "FONode"


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Truth:
    value: bool


FONode = Union[AtomNode, And, Or, Exists, Not, Eq, Truth]

TRUE = Truth(True)
FALSE = Truth(False)


def fo_and(children) -> FONode:
    children = tuple(children)
    if not children:
        return TRUE
    if len(children) == 1:
        return children[0]
    return And(children)


def fo_or(children) -> FONode:
    children = tuple(children)
    if not children:
        return FALSE
    if len(children) == 1:
        return children[0]
    return Or(children)


def fo_exists(variables, body: FONode) -> FONode:
    for v in reversed(list(variables)):
        body = Exists(v, body)
    return body


def free_variables(node: FONode) -> frozenset[Term]:
    if isinstance(node, AtomNode):
        return node.atom.variables()
    if isinstance(node, (And, Or)):
        out: frozenset[Term] = frozenset()
        for c in node.children:
            out |= free_variables(c)
        return out
    if isinstance(node, Exists):
        return free_variables(node.body) - {node.variable}
    if isinstance(node, Not):
        return free_variables(node.body)
    if isinstance(node, Eq):
        return frozenset(t for t in (node.left, node.right) if t.is_var)
    return frozenset()


def node_count(node: FONode) -> int:
    if isinstance(node, (And, Or)):
        return 1 + sum(node_count(c) for c in node.children)
    if isinstance(node, (Exists, Not)):
        return 1 + node_count(node.body)
    return 1


def cq_to_fo(q: ConjunctiveQuery) -> FONode:
    body = fo_and([AtomNode(a) for a in q.sorted_atoms()])
    return fo_exists(sorted(q.variables), body)


@dataclass(frozen=True)
class CensorTheory:
    """A censor theory given by a finite representative: the theory is the
    set of queries entailed by the TBox together with `representative`."""

    representative: ABox


@dataclass(frozen=True)
class SecretSet:
    """The minimal closure subsets that clash with the TBox and policy."""

    secrets: frozenset[frozenset[Atom]]

    def __iter__(self) -> Iterator[frozenset[Atom]]:
        return iter(self.secrets)

    def __len__(self):
        return len(self.secrets)

    def union(self) -> frozenset[Atom]:
        out: frozenset[Atom] = frozenset()
        for s in self.secrets:
            out |= s
        return out
