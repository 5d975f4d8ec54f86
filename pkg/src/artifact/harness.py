"""Query-counting oracles, exact distance search, trial runner and spectral diagnostics."""

from __future__ import annotations

import math
import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Iterable, Sequence

import numpy as np

from .gsf import GSFFamily, covers_family, is_family_free
from .structures import BOTTOM, Bottom, DomainError, Graph, Structure, TupleAnswer, answer_query

DEFAULT_ENUMERATION_CAP = 10**7
DENSE_LIMIT = 64


class QueryCeilingExceeded(Exception):
    pass


class CountingOracle:
    """Query access to a structure or graph that counts (and optionally logs) every query.

    For a graph the i-th query returns the i-th neighbour; for a structure it
    returns the i-th tuple containing the element.  Element ids, the
    signature and the degree bound are public and free.
    """

    def __init__(self, X: Structure, log: bool = True, ceiling: int | None = None):
        self.X = X
        self.is_graph = isinstance(X, Graph)
        self.keep_log = log
        self.ceiling = ceiling
        self.count = 0
        self.log: list[tuple[str, int]] = []

    @property
    def signature(self):
        return self.X.signature

    @property
    def degree_bound(self) -> int:
        return self.X.degree_bound

    @property
    def universe(self) -> tuple[str, ...]:
        return self.X.universe

    def __len__(self) -> int:
        return len(self.X.universe)

    def index_of(self, a: str) -> int:
        try:
            return self.X.position[a]
        except KeyError:
            raise DomainError(f"unknown element {a!r}") from None

    def query(self, a: str, i: int) -> TupleAnswer | Bottom | str:
        if self.ceiling is not None and self.count >= self.ceiling:
            raise QueryCeilingExceeded(f"query ceiling {self.ceiling} reached")
        ans = self.X.neighbor_query(a, i) if self.is_graph else answer_query(self.X, a, i)
        self.count += 1
        if self.keep_log:
            self.log.append((a, i))
        return ans

    def reset(self) -> None:
        self.count = 0
        self.log = []


# --- distance ---------------------------------------------------------------


@dataclass
class DistanceResult:
    verdict: str  # close, far or exhausted
    budget: int
    witness: tuple = ()
    searched_size: int = -1  # every set up to this size was checked
    candidates: int = 0

    def __str__(self) -> str:
        if self.verdict == "exhausted":
            return f"exhausted({self.searched_size})"
        return self.verdict


def _structure_moves(A: Structure) -> list[tuple[str, str, tuple]]:
    moves = [("del", name, t) for name, t in A.tuples()]
    room = {a: A.degree_bound - len(A.incident(a)) for a in A.universe}
    for name, arity in A.signature.symbols:
        for t in product(A.universe, repeat=arity):
            if not A.has(name, t) and all(room[a] > 0 for a in set(t)):
                moves.append(("add", name, t))
    return moves


def _graph_moves(G: Graph) -> list[tuple[str, str, str]]:
    moves = [("del", u, v) for u, v in G.edges]
    d = G.degree_bound
    for u, v in combinations(G.vertices, 2):
        if not G.adjacent(u, v) and G.graph_degree(u) < d and G.graph_degree(v) < d:
            moves.append(("add", u, v))
    return moves


def apply_moves(X: Structure, moves: Sequence[tuple]) -> Structure | None:
    """The modified structure or graph, or None when the result breaks the degree bound."""
    try:
        if isinstance(X, Graph):
            return X.with_edges(
                add=[(u, v) for op, u, v in moves if op == "add"],
                remove=[(u, v) for op, u, v in moves if op == "del"],
            )
        return X.with_changes(
            add=[(name, t) for op, name, t in moves if op == "add"],
            remove=[(name, t) for op, name, t in moves if op == "del"],
        )
    except DomainError:
        return None


def modification_budget(X: Structure, eps: float) -> int:
    return math.floor(eps * X.degree_bound * len(X.universe) + 1e-9)


def epsilon_distance(
    X: Structure,
    membership: Callable[[Structure], bool],
    eps: float,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> DistanceResult:
    """Exact search for a member within floor(eps*d*n) modifications.

    Sets are tried by increasing size, so a witness is also a smallest one.
    Modifications delete a tuple (edge) or insert a degree-respecting one.
    """
    budget = modification_budget(X, eps)
    moves = _graph_moves(X) if isinstance(X, Graph) else _structure_moves(X)
    seen = 0
    for size in range(0, min(budget, len(moves)) + 1):
        for combo in combinations(moves, size):
            if seen >= cap:
                return DistanceResult("exhausted", budget, searched_size=size - 1, candidates=seen)
            seen += 1
            Y = apply_moves(X, combo)
            if Y is not None and membership(Y):
                return DistanceResult("close", budget, tuple(combo), size, seen)
    return DistanceResult("far", budget, searched_size=budget, candidates=seen)


# --- trials -----------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class TesterReport:
    trials: int
    acceptances: int
    queries_per_trial: list[int]
    logs: list[list[tuple[str, int]]] = field(default_factory=list, repr=False)
    aborted: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.acceptances > self.trials:
            raise DomainError("more acceptances than trials")

    @property
    def estimate(self) -> float:
        return self.acceptances / self.trials if self.trials else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.acceptances, self.trials)

    def merge(self, other: "TesterReport") -> "TesterReport":
        return TesterReport(
            self.trials + other.trials,
            self.acceptances + other.acceptances,
            self.queries_per_trial + other.queries_per_trial,
            self.logs + other.logs,
            self.aborted + other.aborted,
        )

    def lines(self) -> list[str]:
        lo, hi = self.interval
        out = [
            f"trials: {self.trials}",
            f"accept: {self.acceptances}",
            f"est: {self.estimate:.6f} {lo:.6f} {hi:.6f}",
            "queries: " + " ".join(str(q) for q in self.queries_per_trial),
        ]
        out += [f"aborted: {msg}" for msg in self.aborted]
        return out


def trial_rng(seed: int, t: int) -> random.Random:
    return random.Random(f"{seed}/{t}")


def run_trials(
    tester: Callable,
    X: Structure,
    trials: int,
    seed: int = 0,
    query_ceiling: int | None = None,
    threads: int = 1,
) -> TesterReport:
    """Run ``tester(oracle, rng) -> bool`` with a fresh oracle and generator per trial.

    A trial that hits the query ceiling counts as a rejection and leaves a diagnostic.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")

    def one(t: int):
        oracle = CountingOracle(X, ceiling=query_ceiling)
        try:
            ok = bool(tester(oracle, trial_rng(seed, t)))
            msg = None
        except QueryCeilingExceeded as exc:
            ok, msg = False, f"trial {t}: {exc}"
        return ok, oracle.count, oracle.log, msg

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    return TesterReport(
        trials,
        sum(ok for ok, *_ in results),
        [q for _, q, _, _ in results],
        [log for _, _, log, _ in results],
        [msg for *_, msg in results if msg],
    )


def always_accept(oracle, rng) -> bool:
    return True


def coin_tester(oracle, rng) -> bool:
    return rng.random() < 0.5


def explore_ball(oracle: CountingOracle, a: str, r: int) -> Structure:
    """The r-ball around ``a`` rebuilt from queries alone."""
    X = oracle.X
    d = oracle.degree_bound
    dist = {a: 0}
    queue = deque([a])
    found: set = set()
    while queue:
        x = queue.popleft()
        if dist[x] >= r:
            continue
        for i in range(1, d + 1):
            ans = oracle.query(x, i)
            if isinstance(ans, Bottom):
                break
            if oracle.is_graph:
                found.add(("E", (x, ans)))
                nbrs = [ans]
            else:
                found.add((ans.symbol, ans.elements))
                nbrs = ans.elements
            for y in nbrs:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
    members = [v for v in X.universe if v in dist]
    if oracle.is_graph:
        # edges between two boundary vertices are invisible to the search but belong to the ball
        for x in members:
            if dist[x] == r:
                for i in range(1, d + 1):
                    y = oracle.query(x, i)
                    if isinstance(y, Bottom):
                        break
                    if y in dist:
                        found.add(("E", (x, y)))
        return Graph(members, [t for _, t in found if t[0] != t[1]], X.degree_bound)
    for x in members:
        if dist[x] == r:
            for i in range(1, d + 1):
                ans = oracle.query(x, i)
                if isinstance(ans, Bottom):
                    break
                if all(y in dist for y in ans.elements):
                    found.add((ans.symbol, ans.elements))
    rels: dict[str, list] = {}
    for name, t in found:
        rels.setdefault(name, []).append(t)
    return Structure(X.signature, members, rels, X.degree_bound)


def forbidden_type_tester(rho, samples: int = 1) -> Callable:
    """Basic test: sample elements, explore their r-balls, reject on a type with upper bound 0."""
    from .neighborhoods import Ball, type_key

    r = rho.catalog.radius
    allowed = {k for k, (_, hi) in zip(rho.catalog.keys, rho.bounds) if hi is None or hi > 0}

    def tester(oracle, rng) -> bool:
        n = len(oracle)
        if n == 0:
            return True
        for _ in range(samples):
            a = oracle.universe[rng.randrange(n)]
            ball = explore_ball(oracle, a, r)
            if type_key(Ball(ball, a, r)) not in allowed:
                return False
        return True

    return tester


# --- spectra ----------------------------------------------------------------


def _regular_degree(G: Graph) -> int:
    if not G.vertices:
        raise DomainError("spectral gap of the empty graph")
    degs = {G.graph_degree(v) for v in G.vertices}
    if len(degs) != 1:
        raise DomainError(f"graph is not regular (degrees {sorted(degs)})")
    (k,) = degs
    if k == 0:
        raise DomainError("graph has no edges")
    return k


def normalized_adjacency(G: Graph) -> np.ndarray:
    k = _regular_degree(G)
    n = len(G.vertices)
    M = np.zeros((n, n))
    for u, v in G.edges:
        M[G.position[u], G.position[v]] = M[G.position[v], G.position[u]] = 1.0
    for v in G.loops:
        M[G.position[v], G.position[v]] = 1.0
    return M / k


def dense_gap(M: np.ndarray) -> float:
    ev = np.sort(np.abs(np.linalg.eigvalsh(M)))[::-1]
    return float(ev[1]) if len(ev) > 1 else 0.0


def _power_gap(M, n: int, tol: float = 1e-14, max_iter: int = 20000, seed: int = 0):
    """Largest |eigenvalue| on the complement of the constant vector, by power iteration on M^2."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    one = np.ones(n) / math.sqrt(n)
    x -= one * (one @ x)
    x /= np.linalg.norm(x)
    prev = None
    for _ in range(max_iter):
        y = M @ (M @ x)
        y -= one * (one @ y)
        lam2 = float(x @ y)
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
        if prev is not None and abs(lam2 - prev) < tol:
            return math.sqrt(max(lam2, 0.0))
        prev = lam2
    return None


def spectral_gap(G: Graph) -> float:
    """Second-largest absolute eigenvalue of the degree-normalised adjacency of a regular graph.

    Dense for small graphs; otherwise power iteration with the constant
    eigenvector deflated, falling back to the dense solver without convergence.
    """
    M = normalized_adjacency(G)
    n = len(M)
    if n <= DENSE_LIMIT:
        return dense_gap(M)
    from scipy.sparse import csr_matrix

    lam = _power_gap(csr_matrix(M), n)
    return dense_gap(M) if lam is None else lam


def rotation_gap(rot) -> float:
    """Spectral gap of the multigraph behind a rotation map (always degree-regular)."""
    n, D = rot.n, rot.degree
    M = np.zeros((n, n))
    for (v, _), (w, _) in rot.table.items():
        M[v, w] += 1.0
    return dense_gap(M / D)


# --- propagation ------------------------------------------------------------


@dataclass
class ProbeReport:
    covers: bool
    repair: int | None  # smallest repair size found, None if the budget ran out
    witness: tuple = ()
    local: bool | None = None  # every modified edge touches B or a neighbour of B

    def lines(self) -> list[str]:
        return [
            f"covers: {str(self.covers).lower()}",
            f"repair: {'none' if self.repair is None else self.repair}",
            f"local: {'n/a' if self.local is None else str(self.local).lower()}",
        ]


def propagation_probe(G: Graph, fam: GSFFamily, B: Iterable[str], budget: int, cap: int = DEFAULT_ENUMERATION_CAP) -> ProbeReport:
    """Cover check plus the smallest family-free repair within ``budget`` modifications."""
    B = set(B)
    covers = covers_family(G, B, fam)
    member = lambda H: is_family_free(H, fam)  # noqa: E731
    eps = budget / (G.degree_bound * len(G.vertices)) if G.vertices and G.degree_bound else 0.0
    res = epsilon_distance(G, member, eps, cap=cap) if budget > 0 else None
    if member(G):
        return ProbeReport(covers, 0, (), True)
    if res is None or res.verdict != "close":
        return ProbeReport(covers, None)
    near = set(B)
    for b in B:
        near.update(G.neighbors(b))
    local = all(u in near or v in near for _, u, v in res.witness)
    return ProbeReport(covers, len(res.witness), res.witness, local)
