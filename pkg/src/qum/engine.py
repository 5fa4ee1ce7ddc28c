"""Explicit-state chain construction, transient probability, counterexamples.

The chain is built breadth-first over global states (per component: state id,
then its attribute values, matching the generated variable order). Transient
probabilities use uniformization with the target states made absorbing. The
counterexample search runs best-first over the uniformized jump chain and
reports, per path, the product of jump probabilities times the probability of
at least that many uniformization steps within the time bound; the sum over
collected paths is a lower bound on the transient probability.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from .compose import GlobalModel

UNIFORMIZATION_PADDING = 1.02
MAX_POISSON_TERMS = 50_000_000


class StateSpaceLimit(Exception):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"state space exceeds {cap} states")


class TargetUnreachable(Exception):
    pass


class StiffModel(Exception):
    pass


@dataclass(frozen=True)
class CtmcEdge:
    source: int
    target: int
    rate: float
    label: str


@dataclass
class Ctmc:
    states: list[tuple[int, ...]]
    edges: list[CtmcEdge]
    initial: int = 0
    var_names: tuple[str, ...] = ()
    out_edges: list[list[int]] = field(default_factory=list)
    exit_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_parts(
        cls,
        states: Sequence[tuple[int, ...]],
        edges: Sequence[CtmcEdge],
        initial: int = 0,
        var_names: tuple[str, ...] = (),
    ) -> "Ctmc":
        ctmc = cls(list(states), list(edges), initial, var_names)
        ctmc.out_edges = [[] for _ in ctmc.states]
        exits = np.zeros(len(ctmc.states))
        for idx, edge in enumerate(ctmc.edges):
            ctmc.out_edges[edge.source].append(idx)
            exits[edge.source] += edge.rate
        ctmc.exit_rates = exits
        return ctmc

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return len(self.edges)


PhiSpec = Union[Callable[[tuple[int, ...]], bool], Sequence[bool], np.ndarray]


def phi_vector(ctmc: Ctmc, phi: PhiSpec) -> np.ndarray:
    if callable(phi):
        return np.fromiter((bool(phi(s)) for s in ctmc.states), dtype=bool, count=ctmc.n_states)
    arr = np.asarray(phi, dtype=bool)
    if arr.shape != (ctmc.n_states,):
        raise ValueError("phi vector length does not match the state count")
    return arr


def build_ctmc(gm: GlobalModel, state_cap: int = 1_000_000) -> Ctmc:
    """Breadth-first product construction over the composed machines."""
    n_comps = len(gm.machines)
    initial = gm.initial_state
    states: list[tuple[int, ...]] = [initial]
    index: dict[tuple[int, ...], int] = {initial: 0}
    edges: list[CtmcEdge] = []
    queue = [0]
    head = 0

    def intern(state: tuple[int, ...]) -> int:
        found = index.get(state)
        if found is None:
            if len(states) >= state_cap:
                raise StateSpaceLimit(state_cap)
            found = len(states)
            index[state] = found
            states.append(state)
            queue.append(found)
        return found

    while head < len(queue):
        src_idx = queue[head]
        head += 1
        state = states[src_idx]
        for comp in range(n_comps):
            pos = gm.state_pos[comp]
            for flat in gm.local_by_src[comp].get(state[pos], []):
                nxt = list(state)
                nxt[pos] = flat.target
                edges.append(CtmcEdge(src_idx, intern(tuple(nxt)), flat.rate, flat.label))
        for op in gm.sync_actions:
            caller_idx, callee_idx = gm.op_parties[op]
            cpos, tpos = gm.state_pos[caller_idx], gm.state_pos[callee_idx]
            calls = gm.calls_by_src.get(op, {}).get(state[cpos], [])
            if not calls:
                continue
            triggers = gm.triggers_by_src.get(op, {}).get(state[tpos], [])
            for call in calls:
                for trig in triggers:
                    nxt = list(state)
                    nxt[cpos] = call.target
                    nxt[tpos] = trig.target
                    edges.append(CtmcEdge(src_idx, intern(tuple(nxt)), call.rate, op))

    return Ctmc.from_parts(states, edges, 0, gm.var_names)


def uniformization_constant(ctmc: Ctmc) -> float:
    if ctmc.n_states == 0 or ctmc.exit_rates.size == 0:
        return 0.0
    return UNIFORMIZATION_PADDING * float(ctmc.exit_rates.max())


def _jump_matrix(ctmc: Ctmc, phi: np.ndarray, lam: float) -> sparse.csr_matrix:
    """Column-stochastic uniformized matrix with phi states absorbing.

    Self-loop edges never enter the generator, so the diagonal comes from the
    non-self exit mass alone.
    """
    n = ctmc.n_states
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    nonself_exit = np.zeros(n)
    for edge in ctmc.edges:
        if phi[edge.source] or edge.source == edge.target:
            continue
        nonself_exit[edge.source] += edge.rate
        rows.append(edge.target)
        cols.append(edge.source)
        vals.append(edge.rate / lam)
    diag = np.ones(n)
    active = ~phi
    diag[active] = 1.0 - nonself_exit[active] / lam
    for s in range(n):
        rows.append(s)
        cols.append(s)
        vals.append(diag[s])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def transient_until(ctmc: Ctmc, phi: PhiSpec, time_bound: float, eps: float = 1e-9) -> float:
    """Probability of reaching a phi state within the time bound."""
    phi_arr = phi_vector(ctmc, phi)
    if time_bound < 0:
        raise ValueError("time bound must be nonnegative")
    if phi_arr[ctmc.initial]:
        return 1.0
    if time_bound == 0:
        return 0.0
    lam = uniformization_constant(ctmc)
    if lam == 0.0:
        return 0.0
    mu = lam * time_bound
    k_max = int(poisson.ppf(1.0 - eps / 2.0, mu)) + 1
    if k_max > MAX_POISSON_TERMS:
        raise StiffModel(
            f"uniformization needs {k_max} terms; rates too stiff for this time bound"
        )

    matrix = _jump_matrix(ctmc, phi_arr, lam)
    pi = np.zeros(ctmc.n_states)
    pi[ctmc.initial] = 1.0

    result = 0.0
    cum_w = 0.0
    chunk = 1 << 16
    k = 0
    while k <= k_max:
        hi = min(k + chunk, k_max + 1)
        weights = poisson.pmf(np.arange(k, hi), mu)
        for w in weights:
            mass = float(pi[phi_arr].sum())
            result += w * mass
            cum_w += w
            if cum_w >= 1.0 - eps / 2.0:
                return float(min(1.0, result))
            pi = matrix @ pi
        k = hi
    return float(min(1.0, result))


# ---------------------------------------------------------------------------
# Counterexample search


@dataclass(frozen=True)
class CxPath:
    labels: tuple[str, ...]
    states: tuple[int, ...]  # state indices, initial included
    bound: float


@dataclass
class Counterexample:
    paths: tuple[CxPath, ...]
    total_mass: float
    transient: float
    time_bound: float
    lam: float
    stopped_by: str  # "mass" | "path_cap" | "exhausted"


def _co_reachable(ctmc: Ctmc, phi: np.ndarray) -> np.ndarray:
    """States from which some phi state is reachable."""
    reverse: list[list[int]] = [[] for _ in ctmc.states]
    for edge in ctmc.edges:
        reverse[edge.target].append(edge.source)
    seen = phi.copy()
    stack = list(np.flatnonzero(phi))
    while stack:
        node = stack.pop()
        for prev in reverse[node]:
            if not seen[prev]:
                seen[prev] = True
                stack.append(prev)
    return seen


def collect_counterexample(
    ctmc: Ctmc,
    phi: PhiSpec,
    time_bound: float,
    mass_fraction: float = 0.9,
    path_cap: int = 10_000,
    eps: float = 1e-9,
    transient: Optional[float] = None,
) -> Counterexample:
    """Most-probable evidence paths into phi, by descending probability bound.

    Each popped path extends by one uniformized jump (self-loops count as
    jumps); a path ending in phi contributes
    prod(rate_i / lam) * P[Poisson(lam*T) >= steps] to the collected mass.
    Collection stops once the mass reaches `mass_fraction` of the transient
    probability or `path_cap` paths are recorded.
    """
    phi_arr = phi_vector(ctmc, phi)
    useful = _co_reachable(ctmc, phi_arr)
    if not phi_arr.any() or not useful[ctmc.initial]:
        raise TargetUnreachable("no path from the initial state satisfies the target")
    if transient is None:
        transient = transient_until(ctmc, phi_arr, time_bound, eps)
    lam = uniformization_constant(ctmc)
    mu = lam * time_bound

    sf_cache: dict[int, float] = {}

    def steps_prob(length: int) -> float:
        # P[at least `length` jumps within the bound]
        found = sf_cache.get(length)
        if found is None:
            found = 1.0 if length == 0 else float(poisson.sf(length - 1, mu))
            sf_cache[length] = found
        return found

    counter = itertools.count()
    # Node: (state_idx, parent_node, edge_idx); path rebuilt on record.
    root = (ctmc.initial, None, None)
    heap: list[tuple[float, int, int, float, tuple]] = [
        (-1.0 * steps_prob(0), 0, next(counter), 1.0, root)
    ]
    recorded: list[CxPath] = []
    total = 0.0
    target_mass = mass_fraction * transient
    stopped_by = "exhausted"

    while heap:
        neg_bound, length, _, prod, node = heapq.heappop(heap)
        state_idx = node[0]
        if phi_arr[state_idx]:
            labels: list[str] = []
            states: list[int] = []
            cursor = node
            while cursor is not None:
                states.append(cursor[0])
                if cursor[2] is not None:
                    labels.append(ctmc.edges[cursor[2]].label)
                cursor = cursor[1]
            labels.reverse()
            states.reverse()
            recorded.append(CxPath(tuple(labels), tuple(states), -neg_bound))
            total += -neg_bound
            if total >= target_mass and total > 0.0:
                stopped_by = "mass"
                break
            if len(recorded) >= path_cap:
                stopped_by = "path_cap"
                break
            continue
        for edge_idx in ctmc.out_edges[state_idx]:
            edge = ctmc.edges[edge_idx]
            if not useful[edge.target]:
                continue
            child_prod = prod * (edge.rate / lam)
            child_len = length + 1
            child_bound = child_prod * steps_prob(child_len)
            heapq.heappush(
                heap,
                (
                    -child_bound,
                    child_len,
                    next(counter),
                    child_prod,
                    (edge.target, node, edge_idx),
                ),
            )

    recorded.sort(key=lambda p: (-p.bound, len(p.labels), p.labels))
    return Counterexample(
        paths=tuple(recorded),
        total_mass=math.fsum(p.bound for p in recorded),
        transient=transient,
        time_bound=time_bound,
        lam=lam,
        stopped_by=stopped_by,
    )


# ---------------------------------------------------------------------------
# Exports


def export_tra(ctmc: Ctmc) -> str:
    lines = [f"{ctmc.n_states} {ctmc.n_transitions}"]
    for edge in ctmc.edges:
        lines.append(f"{edge.source} {edge.target} {repr(edge.rate)}")
    return "\n".join(lines) + "\n"


def export_sta(ctmc: Ctmc) -> str:
    header = "(" + ",".join(ctmc.var_names) + ")"
    lines = [header]
    for idx, state in enumerate(ctmc.states):
        lines.append(f"{idx}:(" + ",".join(str(v) for v in state) + ")")
    return "\n".join(lines) + "\n"
