"""Shared fixtures: small XXZ chains reused across the suite.

The canonical instance (lam=0.3, seed=7, J12=J3=0.02, R=1) is deliberately
identical everywhere so certified constants and weights can be frozen once
and asserted as literals.
"""

import pytest

import decorr as dc
from decorr.algebra import GlobalOperator
from decorr.lattice import Region
from decorr.model import PAULI_BY_NAME


def chain(n, **overrides):
    params = dict(lam=0.3, seed=7, J12=0.02, J3=0.02, R=1)
    params.update(overrides)
    return dc.xxz_spec(n, **params)


def pauli_at(site, name, q=2):
    """Single-site Pauli observable as a GlobalOperator."""
    if isinstance(site, int):
        site = (site,)
    return GlobalOperator(Region([tuple(site)]), q, PAULI_BY_NAME[name].astype(complex))


@pytest.fixture(scope="session")
def chain5():
    return chain(5)


@pytest.fixture(scope="session")
def chain6():
    return chain(6)


@pytest.fixture(scope="session")
def chain8():
    return chain(8)


@pytest.fixture(scope="session")
def chain9():
    return chain(9)


@pytest.fixture(scope="session")
def chain10():
    return chain(10)


@pytest.fixture(scope="session")
def free6():
    """Unperturbed 6-site chain: uniform fields, no couplings."""
    return chain(6, lam=0.0, J12=0.0, J3=0.0, seed=0)
