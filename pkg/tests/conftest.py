import random

import pytest

from xorcast.gf2 import ClientDecoder
from xorcast.policy import NetworkState


@pytest.fixture
def rng():
    return random.Random(0xC0DE)


def random_decoder(k: int, rank: int, rng: random.Random) -> ClientDecoder:
    """Decoder with exactly the requested rank, from random inserts."""
    dec = ClientDecoder(k)
    while dec.rank < rank:
        dec.insert(rng.randrange(1, 1 << k))
    return dec


def random_state(k: int, ranks, rng: random.Random) -> NetworkState:
    return NetworkState(k, tuple(random_decoder(k, r, rng) for r in ranks))
