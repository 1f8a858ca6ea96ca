"""Seeded random instances for the property suites and the `gen` command.

Generated triples always satisfy the engine preconditions: the TBox plus
ABox is consistent (atoms that would break consistency are dropped during
generation) and the policy is loadable.
"""

from __future__ import annotations

import random
import string

from .model import (
    ABox,
    And,
    Atom,
    AtomNode,
    BasicConcept,
    ConceptInclusion,
    ConjunctiveQuery,
    Denial,
    Exists,
    FONode,
    Not,
    Or,
    Policy,
    RoleExpr,
    RoleInclusion,
    TBox,
    Term,
    TRUE,
    const,
    var,
)
from .reasoner import is_consistent, is_policy_loadable

CONCEPT_POOL = ["A", "B", "C", "D", "E", "G", "H", "K"]
ROLE_POOL = ["R", "S", "T", "W"]
CONST_POOL = list(string.ascii_lowercase[:8])
VAR_POOL = ["X", "Y", "Z", "U", "V"]


def _random_basic(rng: random.Random, concepts, roles) -> BasicConcept:
    kinds = ["atomic"] * 3 + (["exists", "exists_inv"] if roles else [])
    kind = rng.choice(kinds)
    if kind == "atomic":
        return BasicConcept("atomic", rng.choice(concepts))
    return BasicConcept(kind, rng.choice(roles))


def random_tbox(
    rng: random.Random,
    n_concepts: int = 4,
    n_roles: int = 2,
    n_axioms: int | None = None,
    p_negated: float = 0.25,
) -> TBox:
    concepts = CONCEPT_POOL[:n_concepts]
    roles = ROLE_POOL[:n_roles]
    if n_axioms is None:
        n_axioms = rng.randint(0, n_concepts + n_roles)
    axioms = []
    for _ in range(n_axioms):
        if roles and rng.random() < 0.2:
            lhs = RoleExpr(rng.choice(roles), rng.random() < 0.3)
            rhs = RoleExpr(rng.choice(roles), rng.random() < 0.3)
            axioms.append(RoleInclusion(lhs, rhs, rng.random() < p_negated))
        else:
            lhs = _random_basic(rng, concepts, roles)
            rhs = _random_basic(rng, concepts, roles)
            axioms.append(ConceptInclusion(lhs, rhs, rng.random() < p_negated))
    return TBox.of(axioms, concept_names=concepts, role_names=roles)


def _random_ground_atom(rng: random.Random, tbox: TBox, consts: list[str]) -> Atom:
    concepts = sorted(tbox.concept_names)
    roles = sorted(tbox.role_names)
    if roles and (not concepts or rng.random() < 0.4):
        return Atom(rng.choice(roles), (const(rng.choice(consts)), const(rng.choice(consts))))
    return Atom(rng.choice(concepts), (const(rng.choice(consts)),))


def random_abox(
    rng: random.Random, tbox: TBox, n_atoms: int = 6, n_consts: int = 4
) -> ABox:
    consts = CONST_POOL[:n_consts]
    atoms: set[Atom] = set()
    for _ in range(n_atoms):
        candidate = _random_ground_atom(rng, tbox, consts)
        trial = ABox(frozenset(atoms | {candidate}))
        if is_consistent(tbox, trial):
            atoms.add(candidate)
    return ABox(frozenset(atoms))


def _random_body_atom(rng: random.Random, tbox: TBox, variables, consts) -> Atom:
    concepts = sorted(tbox.concept_names)
    roles = sorted(tbox.role_names)

    def term() -> Term:
        if rng.random() < 0.15:
            return const(rng.choice(consts))
        return var(rng.choice(variables))

    if roles and (not concepts or rng.random() < 0.45):
        return Atom(rng.choice(roles), (term(), term()))
    return Atom(rng.choice(concepts), (term(),))


def random_policy(
    rng: random.Random, tbox: TBox, n_denials: int = 2, max_body: int = 3, n_consts: int = 4
) -> Policy:
    consts = CONST_POOL[:n_consts]
    denials = set()
    for _ in range(n_denials):
        size = rng.randint(1, max_body)
        variables = VAR_POOL[: rng.randint(1, 3)]
        body = frozenset(
            _random_body_atom(rng, tbox, variables, consts) for _ in range(size)
        )
        if body:
            denials.add(Denial(body))
    policy = Policy(frozenset(denials))
    assert is_policy_loadable(tbox, policy)
    return policy


def random_instance(
    seed: int,
    n_concepts: int = 4,
    n_roles: int = 2,
    n_atoms: int = 6,
    n_denials: int = 2,
    n_consts: int = 4,
    p_negated: float = 0.25,
) -> tuple[TBox, Policy, ABox]:
    """A reproducible (TBox, Policy, ABox) triple satisfying all engine
    preconditions."""
    rng = random.Random(seed)
    tbox = random_tbox(rng, n_concepts, n_roles, p_negated=p_negated)
    policy = random_policy(rng, tbox, n_denials, n_consts=n_consts)
    abox = random_abox(rng, tbox, n_atoms, n_consts)
    return tbox, policy, abox


def random_bcq(
    rng: random.Random, tbox: TBox, max_atoms: int = 3, n_consts: int = 4
) -> ConjunctiveQuery:
    consts = CONST_POOL[:n_consts]
    variables = VAR_POOL[: rng.randint(1, 3)]
    size = rng.randint(1, max_atoms)
    atoms = frozenset(
        _random_body_atom(rng, tbox, variables, consts) for _ in range(size)
    )
    return ConjunctiveQuery(atoms)


def random_fo_sentence(
    rng: random.Random, tbox: TBox, max_atoms: int = 3, n_consts: int = 4, max_depth: int = 4
) -> FONode:
    """A random closed formula over the signature: atoms under AND / OR /
    NOT / EXISTS, with every variable bound by construction."""
    consts = [const(c) for c in CONST_POOL[:n_consts]]
    preds = [(c, 1) for c in sorted(tbox.concept_names)]
    preds += [(r, 2) for r in sorted(tbox.role_names)]
    used = [0]

    def go(depth: int, bound: list[Term]) -> FONode:
        options = []
        if used[0] < max_atoms:
            options += ["atom"] * 3
        if depth < max_depth:
            options += ["not", "exists"]
            if used[0] < max_atoms - 1:
                options += ["and", "or"]
        if not options:
            return TRUE
        kind = rng.choice(options)
        if kind == "atom":
            used[0] += 1
            pred, arity = rng.choice(preds)
            args = tuple(
                rng.choice(bound)
                if bound and rng.random() < 0.7
                else rng.choice(consts)
                for _ in range(arity)
            )
            return AtomNode(Atom(pred, args))
        if kind == "not":
            return Not(go(depth + 1, bound))
        if kind == "exists":
            v = var(f"Q{len(bound) + 1}")
            return Exists(v, go(depth + 1, bound + [v]))
        left = go(depth + 1, bound)
        right = go(depth + 1, bound)
        return And((left, right)) if kind == "and" else Or((left, right))

    return go(0, [])
