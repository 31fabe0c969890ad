"""Absorbing Markov chains for greedy XOR multicast to three clients.

Two chain families live here. The aggregated chains for k=2 (12 states) and
k=3 (29 states) have hand-entered transition matrices whose entries are exact
bivariate polynomials in (s, p); storing them symbolically lets the row-sum
identity sum == 1 under p = 1-s be checked with integer arithmetic, which
catches entry slips that numeric spot checks would miss. The fine-grained
chain enumerates raw joint decoder states under the greedy policy and is the
independent oracle the aggregated matrices are validated against.

Expected transmission counts solve the standard absorption-time system
mu_i = 1 + sum_j a_ij mu_j over transient states, mu = 0 at the absorbing
state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .gf2 import rref_insert, span_of_rows
from .policy import _scan_spans

RESIDUAL_TOL = 1e-9

# Joint-state space is (number of subspaces of GF(2)^k)^3; 4 is the desk limit.
MAX_FINE_DIM = 4


class SolverError(RuntimeError):
    """Absorption-time solve failed its residual check; must not occur for p < 1."""


_TERM_RE = re.compile(r"^(\d*)(?:s(\d*))?(?:p(\d*))?$")


def _parse_terms(text: str) -> list[tuple[int, int, int]]:
    """Parse entries like '3s2p', 'p3+sp2', '2sp(s+p)' into (coef, s_pow, p_pow)."""
    monomials: list[tuple[int, int, int]] = []
    cleaned = text.replace(" ", "").replace("(s+p)", "~")
    for term in cleaned.split("+"):
        factor_sp = term.endswith("~")
        if factor_sp:
            term = term[:-1]
        m = _TERM_RE.match(term)
        if not m or not term:
            raise ValueError(f"bad transition term {term!r}")
        coef = int(m.group(1)) if m.group(1) else 1
        s_pow = (int(m.group(2)) if m.group(2) else 1) if m.group(2) is not None else 0
        p_pow = (int(m.group(3)) if m.group(3) else 1) if m.group(3) is not None else 0
        if factor_sp:
            monomials.append((coef, s_pow + 1, p_pow))
            monomials.append((coef, s_pow, p_pow + 1))
        else:
            monomials.append((coef, s_pow, p_pow))
    return monomials


@dataclass(frozen=True)
class TransitionPoly:
    """One transition probability as an exact sum of c * s^a * p^b monomials."""

    monomials: tuple[tuple[int, int, int], ...]

    @classmethod
    def parse(cls, text: str) -> "TransitionPoly":
        return cls(tuple(_parse_terms(text)))

    @classmethod
    def zero(cls) -> "TransitionPoly":
        return cls(())

    def evaluate(self, p: float) -> float:
        s = 1.0 - p
        return sum(c * s**a * p**b for c, a, b in self.monomials)

    def coeffs_in_s(self) -> list[int]:
        """Integer coefficients over powers of s after substituting p = 1 - s."""
        if not self.monomials:
            return [0]
        degree = max(a + b for _, a, b in self.monomials)
        out = [0] * (degree + 1)
        for c, a, b in self.monomials:
            for j in range(b + 1):
                out[a + j] += c * ((-1) ** j) * comb(b, j)
        return out

    def __add__(self, other: "TransitionPoly") -> "TransitionPoly":
        merged: dict[tuple[int, int], int] = {}
        for c, a, b in self.monomials + other.monomials:
            merged[(a, b)] = merged.get((a, b), 0) + c
        return TransitionPoly(tuple(sorted((c, a, b) for (a, b), c in merged.items() if c)))

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        return " + ".join(f"{c}*s^{a}*p^{b}" for c, a, b in self.monomials)


@dataclass(frozen=True)
class MarkovChainSpec:
    """Aggregated chain: labeled states and a symbolic transition matrix."""

    k: int
    descriptions: tuple[str, ...]
    matrix: tuple[tuple[TransitionPoly, ...], ...]
    absorbing_index: int

    @property
    def n_states(self) -> int:
        return len(self.descriptions)


# Aggregated chain for k=2. Rows indexed by state, sparse {column: entry}.
_K2_DESCRIPTIONS = (
    "ranks (0,0,0)",
    "ranks (1,0,0)",
    "ranks (1,1,0), 1 distinct dependent codeword",
    "ranks (2,0,0)",
    "ranks (1,1,0), 2 distinct dependent codewords",
    "ranks (1,1,1), at most 2 distinct dependent codewords",
    "ranks (2,1,0)",
    "ranks (1,1,1), 3 distinct dependent codewords (no all-client codeword)",
    "ranks (2,1,1)",
    "ranks (2,2,0)",
    "ranks (2,2,1)",
    "ranks (2,2,2), absorbing",
)

_K2_ROWS: tuple[dict[int, str], ...] = (
    {0: "p3", 1: "3sp2", 2: "3s2p", 5: "s3"},
    {1: "p3", 3: "sp2", 4: "2sp2", 5: "s2p", 6: "2s2p", 8: "s3"},
    {2: "p3", 5: "sp2", 6: "2sp2", 8: "2s2p", 9: "s2p", 10: "s3"},
    {3: "p2", 6: "2sp", 8: "s2"},
    {4: "p3", 6: "2sp2", 7: "sp2", 8: "2s2p", 9: "s2p", 10: "s3"},
    {5: "p3", 8: "3sp2", 10: "3s2p", 11: "s3"},
    {6: "p2", 8: "sp", 9: "sp", 10: "s2"},
    {7: "p3+sp2", 8: "2sp2+2s2p", 10: "s3+s2p"},
    {8: "p2", 10: "2sp", 11: "s2"},
    {9: "p", 10: "s"},
    {10: "p", 11: "s"},
    {11: "1"},
)

# Aggregated chain for k=3.
_K3_DESCRIPTIONS = (
    "ranks (0,0,0)",
    "ranks (1,0,0)",
    "ranks (1,1,0), 1 distinct dependent codeword",
    "ranks (2,0,0)",
    "ranks (1,1,0), 2 distinct dependent codewords",
    "ranks (2,1,0), 3 distinct dependent codewords",
    "ranks (2,1,0), 4 distinct dependent codewords",
    "ranks (3,0,0)",
    "ranks (1,1,1), 1 distinct dependent codeword",
    "ranks (1,1,1), 2 distinct dependent codewords",
    "ranks (1,1,1), 3 distinct dependent codewords",
    "ranks (2,1,1)",
    "ranks (2,2,0), dependent count other than 5",
    "ranks (3,1,0)",
    "ranks (2,2,0), 5 distinct dependent codewords",
    "ranks (2,1,1), 4 distinct dependent codewords",
    "ranks (2,1,1), 3 or 5 distinct dependent codewords",
    "ranks (2,2,1)",
    "ranks (3,1,1)",
    "ranks (3,2,0)",
    "ranks (2,2,1), 5 or 6 distinct dependent codewords",
    "ranks (2,2,2), 2 to 6 distinct dependent codewords",
    "ranks (3,2,1)",
    "ranks (3,3,0)",
    "ranks (2,2,2), 7 distinct dependent codewords (no all-client codeword)",
    "ranks (3,2,2)",
    "ranks (3,3,1)",
    "ranks (3,3,2)",
    "ranks (3,3,3), absorbing",
)

_K3_ROWS: tuple[dict[int, str], ...] = (
    {0: "p3", 1: "3sp2", 2: "3s2p", 8: "s3"},
    {1: "p3", 3: "sp2", 4: "2sp2", 5: "2s2p", 9: "s2p", 16: "s3"},
    {2: "p3", 5: "2sp2", 9: "sp2", 11: "2s2p", 12: "s2p", 17: "s3"},
    {3: "p3", 6: "2sp2", 7: "sp2", 11: "s2p", 13: "2s2p", 18: "s3"},
    {4: "p3", 6: "2sp2", 10: "sp2", 14: "s2p", 15: "2s2p", 20: "s3"},
    {5: "p3", 13: "sp2", 14: "sp2", 15: "sp2", 17: "s2p", 18: "s2p", 19: "s2p", 22: "s3"},
    {6: "p3", 13: "sp2", 14: "sp2", 16: "sp2", 17: "s2p", 18: "s2p", 19: "s2p", 22: "s3"},
    {7: "p2", 13: "2sp", 18: "s2"},
    {8: "p3", 16: "3sp2", 17: "3s2p", 21: "s3"},
    {9: "p3", 15: "3sp2", 17: "3s2p", 21: "s3"},
    {10: "p3", 15: "2sp2", 16: "sp2", 17: "3s2p", 21: "s3"},
    {11: "p3", 17: "2sp2", 18: "sp2", 21: "s2p", 22: "2s2p", 25: "s3"},
    {12: "p3", 17: "sp2", 19: "2sp2", 22: "2s2p", 23: "s2p", 26: "s3"},
    {13: "p2", 18: "sp", 19: "sp", 22: "s2"},
    {14: "p3", 19: "2sp2", 20: "sp2", 22: "2s2p", 23: "s2p", 26: "s3"},
    {15: "p3", 17: "sp2", 18: "sp2", 20: "sp2", 21: "s2p", 22: "2s2p", 25: "s3"},
    {16: "p3", 18: "sp2", 20: "2sp2", 21: "s2p", 22: "2s2p", 25: "s3"},
    {17: "p3", 21: "sp2", 22: "2sp2", 25: "2s2p", 26: "s2p", 27: "s3"},
    {18: "p2", 22: "2sp", 25: "s2"},
    {19: "p2", 22: "sp", 23: "sp", 26: "s2"},
    {20: "p3", 22: "2sp2", 24: "sp2", 25: "2s2p", 26: "s2p", 27: "s3"},
    {21: "p3", 25: "3sp2", 27: "3s2p", 28: "s3"},
    {22: "p2", 25: "sp", 26: "sp", 27: "s2"},
    {23: "p", 26: "s"},
    {24: "p2(s+p)", 25: "2sp(s+p)", 27: "s2(s+p)"},
    {25: "p2", 27: "2sp", 28: "s2"},
    {26: "p", 27: "s"},
    {27: "p", 28: "s"},
    {28: "1"},
)


def _assemble(k: int, descriptions, rows) -> MarkovChainSpec:
    n = len(descriptions)
    zero = TransitionPoly.zero()
    matrix = tuple(
        tuple(TransitionPoly.parse(row[j]) if j in row else zero for j in range(n))
        for row in rows
    )
    return MarkovChainSpec(k=k, descriptions=tuple(descriptions), matrix=matrix,
                           absorbing_index=n - 1)


@lru_cache(maxsize=None)
def build_chain(k: int) -> MarkovChainSpec:
    """Aggregated chain for k packets; only k=2 and k=3 are modeled."""
    if k == 2:
        return _assemble(2, _K2_DESCRIPTIONS, _K2_ROWS)
    if k == 3:
        return _assemble(3, _K3_DESCRIPTIONS, _K3_ROWS)
    raise ValueError(f"aggregated chain only available for k in {{2, 3}}, got {k}")


def row_sum_coeffs(chain: MarkovChainSpec, i: int) -> list[int]:
    """Integer s-polynomial coefficients of row i's sum after p = 1 - s."""
    total = TransitionPoly.zero()
    for entry in chain.matrix[i]:
        total = total + entry
    return total.coeffs_in_s()


def check_conservation(chain: MarkovChainSpec) -> None:
    """Raise if any row fails the exact sum == 1 polynomial identity."""
    for i in range(chain.n_states):
        coeffs = row_sum_coeffs(chain, i)
        if coeffs[0] != 1 or any(c != 0 for c in coeffs[1:]):
            raise AssertionError(f"row {i} sums to polynomial {coeffs}, expected [1]")


def format_chain(chain: MarkovChainSpec) -> str:
    """Debug dump: one line per nonzero transition entry."""
    lines = []
    for i in range(chain.n_states):
        for j, entry in enumerate(chain.matrix[i]):
            if entry.monomials:
                lines.append(f"{i}, {chain.descriptions[i]}, -> {j}: {entry}")
    return "\n".join(lines)


def _solve_absorption(dense: np.ndarray, absorbing_index: int, start: int) -> float:
    """Expected steps to absorption from start, solving (I - Q) mu = 1."""
    n = dense.shape[0]
    transient = [i for i in range(n) if i != absorbing_index]
    q = dense[np.ix_(transient, transient)]
    a = np.eye(len(transient)) - q
    b = np.ones(len(transient))
    try:
        mu = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"absorption system singular: {exc}") from exc
    residual = np.max(np.abs(a @ mu - b))
    if residual > RESIDUAL_TOL:
        mu = mu + np.linalg.solve(a, b - a @ mu)
        residual = np.max(np.abs(a @ mu - b))
        if residual > RESIDUAL_TOL:
            raise SolverError(f"absorption solve residual {residual:.3e} after refinement")
    return float(mu[transient.index(start)])


def _dense_matrix(matrix, n: int, p: float) -> np.ndarray:
    dense = np.zeros((n, n))
    for i, row in enumerate(matrix):
        for j, entry in enumerate(row):
            if entry.monomials:
                dense[i, j] = entry.evaluate(p)
    return dense


def _check_p(p: float) -> None:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"loss probability must satisfy 0 <= p < 1, got {p} "
                         "(expected transmissions diverge at p = 1)")


def expected_absorption_time(chain: MarkovChainSpec, p: float) -> float:
    """Exact expected transmissions until all clients reach full rank."""
    _check_p(p)
    dense = _dense_matrix(chain.matrix, chain.n_states, p)
    return _solve_absorption(dense, chain.absorbing_index, start=0)


@dataclass(frozen=True)
class FineChain:
    """Joint decoder-state chain under the greedy policy; the validation oracle.

    states are triples of RREF basis-row tuples, index 0 the all-empty state.
    mask_successors[i][m] is the successor when reception mask m (bit c set =
    client c received) occurs; transitions aggregate the 8 masks into
    polynomial entries.
    """

    k: int
    tie_break: str
    states: tuple[tuple[tuple[int, ...], ...], ...]
    choices: tuple[int | None, ...]
    mask_successors: tuple[tuple[int, ...] | None, ...]
    transitions: tuple[dict[int, TransitionPoly], ...]
    absorbing_index: int

    @property
    def n_states(self) -> int:
        return len(self.states)


@lru_cache(maxsize=None)
def build_fine_chain(k: int, tie_break: str = "smallest") -> FineChain:
    """Breadth-first closure of joint states reachable from empty under greedy.

    Treat the result as immutable; instances are cached and shared.
    """
    if not 1 <= k <= MAX_FINE_DIM:
        raise ValueError(f"fine chain supports 1 <= k <= {MAX_FINE_DIM}, got {k}: "
                         "joint state space grows as the cube of the subspace count")
    if tie_break not in ("smallest", "largest"):
        raise ValueError(f"fine chain needs a deterministic tie_break, got {tie_break!r}")

    full = tuple(1 << j for j in range(k))
    start = ((), (), ())
    states: list[tuple[tuple[int, ...], ...]] = [start]
    index: dict[tuple, int] = {start: 0}
    choices: list[int | None] = []
    mask_successors: list[tuple[int, ...] | None] = []
    absorbing_index = -1

    i = 0
    while i < len(states):
        state = states[i]
        if all(rows == full for rows in state):
            absorbing_index = i
            choices.append(None)
            mask_successors.append(None)
            i += 1
            continue
        spans = [span_of_rows(rows) for rows in state if len(rows) < k]
        w, _ = _scan_spans(spans, k, tie_break, None)
        succ = []
        for mask in range(8):
            rows_out = []
            for c in range(3):
                rows = state[c]
                if (mask >> c) & 1 and len(rows) < k:
                    inserted = rref_insert(rows, w)
                    rows = inserted if inserted is not None else rows
                rows_out.append(rows)
            key = tuple(rows_out)
            nxt = index.get(key)
            if nxt is None:
                nxt = len(states)
                index[key] = nxt
                states.append(key)
            succ.append(nxt)
        choices.append(w)
        mask_successors.append(tuple(succ))
        i += 1

    if absorbing_index < 0:
        raise SolverError("fine chain closure never reached the full-rank state")

    transitions: list[dict[int, TransitionPoly]] = []
    for i, succ in enumerate(mask_successors):
        if succ is None:
            transitions.append({i: TransitionPoly.parse("1")})
            continue
        agg: dict[int, TransitionPoly] = {}
        for mask, j in enumerate(succ):
            a = bin(mask).count("1")
            mono = TransitionPoly(((1, a, 3 - a),))
            agg[j] = agg.get(j, TransitionPoly.zero()) + mono
        transitions.append(agg)

    return FineChain(k=k, tie_break=tie_break, states=tuple(states), choices=tuple(choices),
                     mask_successors=tuple(mask_successors), transitions=tuple(transitions),
                     absorbing_index=absorbing_index)


def absorption_time_fine(chain: FineChain, p: float) -> float:
    """Expected transmissions to absorption in the fine-grained chain."""
    _check_p(p)
    n = chain.n_states
    dense = np.zeros((n, n))
    for i, row in enumerate(chain.transitions):
        for j, entry in row.items():
            dense[i, j] = entry.evaluate(p)
    return _solve_absorption(dense, chain.absorbing_index, start=0)
