"""Censors over the ground-atom closure, and the entailment relations they
induce.

An optimal censor keeps a maximal policy-consistent subset of the entailed
ground atoms.  `opt_ga_censor` builds one greedily in a configurable order;
`enumerate_optimal_ga_censors` finds all of them; `ib_entail` asks whether a
query holds under every one of them (skeptical entailment).  `secrets`,
`iar_repair` and `qib_entail` implement the tractable approximation: drop
every atom that participates in some minimal policy-violating subset and
query what is left.  `qib_entail_bruteforce` re-decides the approximation by
raw subset enumeration and exists purely as a test oracle.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator

from .model import (
    ABox,
    Atom,
    CensorTheory,
    ConjunctiveQuery,
    Policy,
    SecretSet,
    TBox,
    atom_order_key,
)
from .reasoner import (
    InconsistentOntologyError,
    _abox_relations,
    _entailed_unchecked,
    _extend,
    abox_closure,
    cq_entailed,
    denial_query,
    is_consistent,
    is_policy_consistent,
    is_policy_loadable,
    perfect_ref,
)

DEFAULT_SIZE_GUARD = 24


class SizeGuardError(Exception):
    """The closure is too large for an exponential desk-scale procedure."""

    def __init__(self, actual: int, limit: int):
        self.actual = actual
        self.limit = limit
        super().__init__(
            f"closure has {actual} atoms, above the size guard of {limit}; "
            "raise the limit to force the exponential path"
        )


def default_size_guard() -> int:
    env = os.environ.get("CQE_LIMIT")
    if env:
        return int(env)
    return DEFAULT_SIZE_GUARD


@dataclass(frozen=True)
class AtomOrder:
    """Iteration order over the closure: the global canonical order, or an
    explicit permutation of the closure atoms."""

    kind: str  # 'lex' | 'explicit'
    atoms: tuple[Atom, ...] = ()

    @staticmethod
    def lex() -> "AtomOrder":
        return AtomOrder("lex")

    @staticmethod
    def explicit(atoms) -> "AtomOrder":
        return AtomOrder("explicit", tuple(atoms))

    def arrange(self, closure_atoms: frozenset[Atom]) -> list[Atom]:
        if self.kind == "lex":
            return sorted(closure_atoms, key=atom_order_key)
        if set(self.atoms) != set(closure_atoms) or len(self.atoms) != len(closure_atoms):
            raise ValueError("explicit order must be a permutation of the closure atoms")
        return list(self.atoms)


def _require_preconditions(tbox: TBox, policy: Policy, abox: ABox) -> None:
    if not is_consistent(tbox, abox):
        raise InconsistentOntologyError("TBox and ABox are inconsistent")
    if not is_policy_loadable(tbox, policy):
        raise InconsistentOntologyError("TBox and policy are inconsistent")


def _keeps_policy(tbox: TBox, policy: Policy, atoms: frozenset[Atom]) -> bool:
    candidate = ABox(atoms)
    return is_consistent(tbox, candidate) and is_policy_consistent(tbox, policy, candidate)


def opt_ga_censor(
    tbox: TBox, policy: Policy, abox: ABox, order: AtomOrder = AtomOrder.lex()
) -> ABox:
    """Greedy optimal censor: walk the closure in the given order, keeping
    each atom whose addition leaves the kept set consistent with the TBox
    and the policy."""
    _require_preconditions(tbox, policy, abox)
    closure = abox_closure(tbox, abox)
    kept: frozenset[Atom] = frozenset()
    for alpha in order.arrange(closure.atoms):
        candidate = kept | {alpha}
        if _keeps_policy(tbox, policy, candidate):
            kept = candidate
    return ABox(kept)


def enumerate_optimal_ga_censors(
    tbox: TBox, policy: Policy, abox: ABox, limit: int | None = None
) -> frozenset[ABox]:
    """All maximal policy-consistent subsets of the closure.  Exponential in
    the worst case; guarded by `limit` (default 24 closure atoms)."""
    _require_preconditions(tbox, policy, abox)
    limit = default_size_guard() if limit is None else limit
    closure = abox_closure(tbox, abox)
    if len(closure) > limit:
        raise SizeGuardError(len(closure), limit)

    atoms = sorted(closure.atoms, key=atom_order_key)
    suffixes = [frozenset(atoms[i:]) for i in range(len(atoms) + 1)]
    found: set[frozenset[Atom]] = set()

    def record(candidate: frozenset[Atom]) -> None:
        for extra in atoms:
            if extra not in candidate and _keeps_policy(tbox, policy, candidate | {extra}):
                return
        found.add(candidate)

    def explore(i: int, chosen: frozenset[Atom]) -> None:
        # branch and bound: everything below is contained in `potential`
        potential = chosen | suffixes[i]
        if any(potential <= m for m in found):
            return
        if _keeps_policy(tbox, policy, potential):
            record(potential)
            return
        if i == len(atoms):
            record(chosen)
            return
        with_alpha = chosen | {atoms[i]}
        if _keeps_policy(tbox, policy, with_alpha):
            explore(i + 1, with_alpha)
        explore(i + 1, chosen)

    explore(0, frozenset())
    return frozenset(ABox(s) for s in found)


def censor_entails(tbox: TBox, theory: CensorTheory, q: ConjunctiveQuery) -> bool:
    """Membership of `q` in the theory spanned by the censor representative."""
    return cq_entailed(tbox, theory.representative, q)


def ib_entail(
    tbox: TBox, policy: Policy, abox: ABox, q: ConjunctiveQuery, limit: int | None = None
) -> bool:
    """Skeptical entailment: `q` must hold in every optimal censor theory."""
    censors = enumerate_optimal_ga_censors(tbox, policy, abox, limit)
    return all(censor_entails(tbox, CensorTheory(rep), q) for rep in censors)


def _iter_hom_images(
    atoms: list[Atom], rel, binding: dict
) -> Iterator[dict]:
    if not atoms:
        yield binding
        return

    def boundness(a: Atom) -> int:
        return sum(1 for t in a.args if t.is_const or t in binding)

    best = max(atoms, key=boundness)
    rest = [a for a in atoms if a is not best]
    for row in rel.candidates(best, binding):
        nb = _extend(best, row, binding)
        if nb is not None:
            yield from _iter_hom_images(rest, rel, nb)


def secrets(tbox: TBox, policy: Policy, abox: ABox) -> SecretSet:
    """All minimal closure subsets inconsistent with the TBox and policy.

    Every homomorphic image of a rewritten denial body is such a violating
    set, and every minimal violating set arises this way, so it suffices to
    collect the images and keep the subset-minimal ones.  A per-element
    consistency pass re-verifies minimality afterwards."""
    _require_preconditions(tbox, policy, abox)
    closure = abox_closure(tbox, abox)
    rel = _abox_relations(closure)
    images: set[frozenset[Atom]] = set()
    for d in policy.denials:
        for rewritten in perfect_ref(denial_query(d), tbox):
            for binding in _iter_hom_images(list(rewritten.atoms), rel, {}):
                image = frozenset(
                    Atom(a.predicate, tuple(binding.get(t, t) for t in a.args))
                    for a in rewritten.atoms
                )
                images.add(image)

    by_size = sorted(images, key=lambda s: (len(s), sorted(map(atom_order_key, s))))
    minimal: list[frozenset[Atom]] = []
    for s in by_size:
        if not any(m < s for m in minimal):
            minimal.append(s)

    def violates(atoms: frozenset[Atom]) -> bool:
        return not _keeps_policy(tbox, policy, atoms)

    verified = frozenset(
        s
        for s in minimal
        if violates(s) and all(not violates(s - {sigma}) for sigma in s)
    )
    return SecretSet(verified)


def iar_repair(tbox: TBox, policy: Policy, abox: ABox) -> ABox:
    """The closure minus every atom that occurs in some secret; equals the
    intersection of all maximal policy-consistent subsets."""
    closure = abox_closure(tbox, abox)
    hidden = secrets(tbox, policy, abox).union()
    return ABox(closure.atoms - hidden)


def qib_entail(tbox: TBox, policy: Policy, abox: ABox, q: ConjunctiveQuery) -> bool:
    """Entailment under the quasi-optimal censor: query the repair."""
    return cq_entailed(tbox, iar_repair(tbox, policy, abox), q)


def qib_entail_bruteforce(
    tbox: TBox, policy: Policy, abox: ABox, q: ConjunctiveQuery, limit: int | None = None
) -> bool:
    """Oracle for `qib_entail`: search for a closure subset that entails the
    query while avoiding every secret, by plain subset enumeration."""
    _require_preconditions(tbox, policy, abox)
    limit = default_size_guard() if limit is None else limit
    closure = abox_closure(tbox, abox)
    if len(closure) > limit:
        raise SizeGuardError(len(closure), limit)
    atoms = sorted(closure.atoms, key=atom_order_key)
    secret_sets = secrets(tbox, policy, abox).secrets

    forbidden = 0
    index = {a: i for i, a in enumerate(atoms)}
    for s in secret_sets:
        for a in s:
            forbidden |= 1 << index[a]

    for mask in range(1 << len(atoms)):
        if mask & forbidden:
            continue
        subset = frozenset(a for i, a in enumerate(atoms) if mask >> i & 1)
        if _entailed_unchecked(tbox, ABox(subset), q):
            return True
    return False
