"""Shared toy-parameter fixtures.

The toy group (p=23, q=11) and toy Paillier modulus (n=35) are small enough
that every expected value in the unit tests was computed by hand or by an
independent oracle before the implementation existed.
"""

import random

import pytest

from verfu.algebra import GroupDesc
from verfu.codec import FixedPointSpec
from verfu.commitment import ComParams, Trapdoor
from verfu.lhh import LhhParams
from verfu.paillier import PaillierPublicKey, PaillierSecretKey
from verfu.protocol import ProtocolParams


@pytest.fixture
def toy_group():
    return GroupDesc(p_mod=23, q_order=11, seed=b"toy")


@pytest.fixture
def toy_lhh(toy_group):
    # generators 2 and 4 both lie in the order-11 subgroup of Z_23*
    return LhhParams(group=toy_group, generators=(2, 4))


@pytest.fixture
def toy_com(toy_group):
    # h = g^alpha with g=2, alpha=3: 2^3 = 8
    return ComParams(group=toy_group, g_com=2, h_com=8)


@pytest.fixture
def toy_trapdoor(toy_com):
    return Trapdoor(alpha=3, params=toy_com)


@pytest.fixture
def toy_paillier():
    # p=5, q=7: n=35, lambda=lcm(4,6)=12, mu=12^-1 mod 35 = 3
    pk = PaillierPublicKey(35)
    sk = PaillierSecretKey(lam=12, mu=3, p=5, q=7)
    return pk, sk


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
