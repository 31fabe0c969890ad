"""Transmitter-side codeword selection for XOR multicast to three clients.

The access point knows every client's span and, per transmission, picks the
nonzero codeword that is innovative for the largest number of unsatisfied
clients. The search is exhaustive over the 2^k - 1 candidates, which doubles
as the oracle for the combinatorial guarantees in this module.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .gf2 import ClientDecoder, CodingVector

N_CLIENTS = 3

# Exhaustive scans are the intended realization for desk-scale k only.
MAX_SCAN_DIM = 20


class AllClientsSatisfiedError(RuntimeError):
    """Nothing to send: every client already has full rank."""


class RankProfileError(ValueError):
    """State does not match the rank profile the operation requires."""


class CoverageSearchError(RuntimeError):
    """Exhaustive scan found no all-client innovative codeword where one must exist."""


@dataclass
class NetworkState:
    """Joint state of the three client decoders; the simulator's ground truth."""

    k: int
    clients: tuple[ClientDecoder, ClientDecoder, ClientDecoder]

    def __post_init__(self):
        if len(self.clients) != N_CLIENTS:
            raise ValueError(f"exactly {N_CLIENTS} clients required, got {len(self.clients)}")
        if any(c.k != self.k for c in self.clients):
            raise ValueError("all clients must share dimension k")
        self.clients = tuple(self.clients)

    @classmethod
    def empty(cls, k: int) -> "NetworkState":
        return cls(k, tuple(ClientDecoder(k) for _ in range(N_CLIENTS)))

    def ranks(self) -> tuple[int, int, int]:
        return tuple(c.rank for c in self.clients)

    def unsatisfied(self) -> list[int]:
        return [i for i, c in enumerate(self.clients) if not c.is_satisfied()]

    def all_satisfied(self) -> bool:
        return all(c.is_satisfied() for c in self.clients)


def _scan_spans(spans: list[frozenset[int]], k: int, tie_break: str,
                rng: random.Random | None) -> tuple[int, int]:
    """Pick the nonzero w maximizing the number of spans that miss it.

    spans holds only the unsatisfied clients' spans. Returns (bits, covered).
    """
    if k > MAX_SCAN_DIM:
        raise ValueError(f"exhaustive scan supports k <= {MAX_SCAN_DIM}, got {k}")
    best_bits = 0
    best_cov = -1
    ties: list[int] = []
    for w in range(1, 1 << k):
        cov = sum(1 for sp in spans if w not in sp)
        if cov > best_cov:
            best_cov = cov
            best_bits = w
            if tie_break == "random":
                ties = [w]
            if tie_break == "smallest" and cov == len(spans):
                break
        elif cov == best_cov:
            if tie_break == "largest":
                best_bits = w
            elif tie_break == "random":
                ties.append(w)
    if tie_break == "random":
        if rng is None:
            raise ValueError("random tie-break needs an rng")
        best_bits = rng.choice(ties)
    elif tie_break not in ("smallest", "largest"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    return best_bits, best_cov


def greedy_codeword(state: NetworkState, tie_break: str = "smallest",
                    rng: random.Random | None = None) -> tuple[CodingVector, int]:
    """Codeword innovative for the most unsatisfied clients, with its coverage.

    Ties are broken deterministically by default: numerically smallest bit
    pattern ("smallest", the default) or largest ("largest"). tie_break
    "random" picks uniformly among the argmax set using rng, for checking
    that the expected transmission count is tie-break insensitive.
    """
    spans = [state.clients[i].span() for i in state.unsatisfied()]
    if not spans:
        raise AllClientsSatisfiedError("all clients satisfied")
    bits, covered = _scan_spans(spans, state.k, tie_break, rng)
    return CodingVector(bits, state.k), covered


def sufficient_by_counting(ranks, k: int) -> bool:
    """Counting test guaranteeing an all-client innovative codeword exists.

    Sums 2^r - 1 over unsatisfied clients only; a satisfied client constrains
    nothing. The test is sufficient, not necessary.
    """
    if any(not 0 <= r <= k for r in ranks):
        raise ValueError(f"ranks {tuple(ranks)} out of range for k={k}")
    total = sum((1 << r) - 1 for r in ranks if r < k)
    return total < (1 << k) - 1


def lemma1_construct(state: NetworkState) -> CodingVector:
    """Codeword innovative for all three clients at rank profile (k-1, k-1, k-2).

    Existence argument, in matrix terms: append the unknown vector w as a last
    row to each client matrix. In the two rank-(k-1) matrices some pair of
    columns becomes linearly dependent after column additions (ignoring the
    last row); in the rank-(k-2) matrix some triple does. w is innovative for
    a client exactly when the corresponding columns, now including w's entries,
    stay independent, which yields one linear inequation over GF(2) per
    rank-(k-1) client and a disjunction of three for the rank-(k-2) client.
    Three constraints over k >= 2 free bits always admit a solution.

    Worked instance, k=4: client spans
        span{1000, 0100, 0010}, span{0100, 0010, 0001}, span{1111, 0101}
    (bit order packet 1 first). The constraints exclude exactly the union of
    the three spans; scanning finds 1001 = p1+p4, innovative for all three.

    This implementation realizes the guarantee by the equivalent exhaustive
    scan over the 2^k - 1 candidates, which is exact at desk scale.
    """
    profile = tuple(sorted(state.ranks()))
    k = state.k
    if k < 2 or profile != (k - 2, k - 1, k - 1):
        raise RankProfileError(
            f"rank profile {state.ranks()} is not a permutation of (k-1, k-1, k-2) for k={k}")
    spans = [c.span() for c in state.clients]
    bits, covered = _scan_spans(spans, k, "smallest", None)
    if covered != N_CLIENTS:
        raise CoverageSearchError(
            f"no all-client innovative codeword at ranks {state.ranks()}, k={k}")
    return CodingVector(bits, k)


def lemma1_counterexample(k: int) -> NetworkState:
    """State with all ranks k-1 where no codeword is innovative for all three.

    The spans are the hyperplanes cut out by the functionals w_2, w_1 and
    w_1 + w_2; a vector outside all three would need w_1 = w_2 = 1 and
    w_1 + w_2 = 1 at once. For k=2 this is exactly the state where the
    clients hold p1, p2 and p1+p2.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    tail = [1 << j for j in range(2, k)]
    bases = [
        [0b01] + tail,  # w_2 = 0: holds p1
        [0b10] + tail,  # w_1 = 0: holds p2
        [0b11] + tail,  # w_1 + w_2 = 0: holds p1+p2
    ]
    clients = tuple(
        ClientDecoder.from_vectors(k, rows) for rows in bases
    )
    return NetworkState(k, clients)


def distinct_dependent_count(state: NetworkState) -> int:
    """Number of distinct nonzero codewords dependent for some unsatisfied client."""
    union: set[int] = set()
    for i in state.unsatisfied():
        union |= state.clients[i].span()
    union.discard(0)
    return len(union)
