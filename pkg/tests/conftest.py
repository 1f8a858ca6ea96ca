import pytest

from cqelite import parse_abox, parse_policy, parse_query, parse_tbox


@pytest.fixture
def supplier_tbox():
    return parse_tbox("ProjA [= Supplier\nProjB [= Supplier")


@pytest.fixture
def supplier_policy():
    return parse_policy("denial :- ProjA(X), ProjB(X)")


@pytest.fixture
def supplier_abox():
    return parse_abox("ProjA(c)\nProjB(c)")


def q(text: str):
    return parse_query(f"q :- {text}")
