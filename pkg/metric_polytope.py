"""
Metric polytopes MET(G) and MET(G, Sigma), the arccos correspondence,
tight odd cycles and their dual stresses
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from certificates import StressVector
from config import get_config
from errors import DegenerateTightCycle, InvalidInput, TooLarge
from graphs import Graph, norm_edge
from logger_config import logger
from signed_graphs import EVEN, ODD, SignedCycle, SignedGraph, enumerate_odd_cycles, is_odd_k4_minor_free, simple_cycles

TIGHT_TOL = 1e-9
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class MetPoint:
    """x: edge -> value in [0, 1]"""
    x: Dict[tuple, float]

    def __post_init__(self):
        for e, v in self.x.items():
            if not -1e-15 <= v <= 1 + 1e-15:
                raise InvalidInput(f"x{e} = {v!r} is outside [0, 1]")

    def __getitem__(self, e):
        return self.x[e]


@dataclass(frozen=True)
class MetCheck:
    member: bool
    margin: float
    cycle: Optional[Tuple[int, ...]] = None
    odd_edges: Tuple[tuple, ...] = ()

    def to_dict(self):
        return {'member': self.member, 'margin': self.margin,
                'cycle': list(self.cycle) if self.cycle else None,
                'odd_edges': [list(e) for e in self.odd_edges]}


def arccos_map(c) -> MetPoint:
    """x(e) = arccos(c(e)) / pi"""
    return MetPoint({e: math.acos(max(-1.0, min(1.0, float(w)))) / math.pi for e, w in c.items()})


def _cycle_pairs(cycle):
    return [norm_edge(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]


def _check_cap(n, cap):
    cap = get_config().cycle_cap if cap is None else cap
    if n > cap:
        raise TooLarge(f"Cycle enumeration on {n} vertices exceeds cap {cap}")


def met_membership(G: Graph, x, cap=None) -> MetCheck:
    """
    Check every cycle inequality sum_{C - F} x - sum_F x >= 1 - |F|, |F| odd

    For one cycle the most violated F takes the edges with x > 1/2, fixing
    parity with the edge closest to 1/2.

    Raises:
        TooLarge: G has more vertices than the cycle cap
    """
    _check_cap(G.n, cap)
    xs = x.x if isinstance(x, MetPoint) else x
    worst = MetCheck(True, math.inf)
    for cycle in simple_cycles(G):
        pairs = _cycle_pairs(cycle)
        vals = [xs[e] for e in pairs]
        F = [i for i, v in enumerate(vals) if v > 0.5]
        if len(F) % 2 == 0:
            j = min(range(len(vals)), key=lambda i: abs(1 - 2 * vals[i]))
            F = sorted(set(F) ^ {j})
        lhs = sum(v for i, v in enumerate(vals) if i not in F) - sum(vals[i] for i in F)
        margin = lhs - (1 - len(F))
        if margin < worst.margin:
            worst = MetCheck(margin >= -TIGHT_TOL, margin, tuple(cycle), tuple(pairs[i] for i in F))
    return worst


def _signed_value(x, u, v, sign):
    if (u, v, sign) in x:
        return x[(u, v, sign)]
    return x[(u, v)]


def cycle_margin(C: SignedCycle, x) -> float:
    """sum sigma(e) x(e) - (1 - |C & Sigma|), sigma = -1 on odd edges"""
    total = sum((-1.0 if s == ODD else 1.0) * _signed_value(x, u, v, s) for u, v, s in C.edges)
    return total - (1 - C.odd_count)


def met_membership_signed(SG: SignedGraph, x, cap=None) -> MetCheck:
    """
    Check sum sigma(e) x(e) >= 1 - |E(C) & Sigma| over every odd cycle C

    Args:
        x: values keyed by (u, v, sign) or by (u, v) when both copies agree
    """
    _check_cap(SG.n, cap)
    xs = x.x if isinstance(x, MetPoint) else x
    worst = MetCheck(True, math.inf)
    for C in enumerate_odd_cycles(SG):
        margin = cycle_margin(C, xs)
        if margin < worst.margin:
            worst = MetCheck(margin >= -TIGHT_TOL, margin, C.vertices,
                             tuple(e for e in C.edges if e[2] == ODD))
    return worst


def signed_weights(inst) -> Dict[Tuple[int, int, str], float]:
    """c per signed edge: ge and eq give the even copy, le and eq the odd copy"""
    out = {}
    for con in inst.constraints:
        if con.kind in ('ge', 'eq'):
            out[(con.u, con.v, EVEN)] = con.c
        if con.kind in ('le', 'eq'):
            out[(con.u, con.v, ODD)] = con.c
    return out


def tight_cycles(SG: SignedGraph, c, cap=None) -> List[SignedCycle]:
    """
    Odd cycles of length >= 3 with sum sigma(e) arccos(c(e))/pi = 1 - |E(C) & Sigma|

    Digons of an eq pair are always tight and are left out.
    """
    _check_cap(SG.n, cap)
    x = arccos_map(c).x
    return [C for C in enumerate_odd_cycles(SG) if len(C) >= 3 and abs(cycle_margin(C, x)) <= TIGHT_TOL]


def _circle_realization(C: SignedCycle, c):
    """
    Unit vectors in R^2 realizing c on C: walk the circle by arccos(c) on even
    edges and pi - arccos(c) on odd ones, negating after each odd edge
    """
    coords = []
    phi, tau = 0.0, 1.0
    for u, v, s in C.edges:
        coords.append(tau * np.array([math.cos(phi), math.sin(phi)]))
        a = math.acos(max(-1.0, min(1.0, _signed_value(c, u, v, s))))
        if s == ODD:
            phi += math.pi - a
            tau = -tau
        else:
            phi += a
    return np.array(coords)


def _instance_key(inst, u, v, sign):
    if inst is None:
        return (u, v, 'le' if sign == ODD else 'ge')
    weights = inst.weights
    preferred = 'le' if sign == ODD else 'ge'
    if (u, v, preferred) in weights:
        return (u, v, preferred)
    if (u, v, 'eq') in weights:
        return (u, v, 'eq')
    raise InvalidInput(f"Instance has no constraint carrying the {sign} copy of ({u}, {v})")


def tight_cycle_dual(C: SignedCycle, c, n=None, inst=None) -> StressVector:
    """
    The stress supported on a tight odd cycle, unique up to scale

    It is in equilibrium for the circle realization of C, PSD with corank 2
    on the cycle vertices and properly signed; max |w(e)| = 1.

    Args:
        C: tight odd cycle (length >= 3)
        c: weights keyed by (u, v, sign) or (u, v)
        n: vertex count of the result (defaults to max vertex + 1)
        inst: instance whose edge keys the result uses

    Raises:
        DegenerateTightCycle: some |c(e)| on C is within 1e-10 of 1
    """
    if len(C) < 3:
        raise InvalidInput("Tight-cycle duals need a cycle of length >= 3")
    for u, v, s in C.edges:
        if abs(_signed_value(c, u, v, s)) > 1 - DEGENERATE_TOL:
            raise DegenerateTightCycle(f"Edge ({u}, {v}) on the cycle has weight {_signed_value(c, u, v, s)!r}")
    L = len(C)
    P = _circle_realization(C, c)
    # unknowns: w(v_0..v_{L-1}) then w(e_0..e_{L-1}), e_i = v_i v_{i+1}
    A = np.zeros((2 * L, 2 * L))
    for i in range(L):
        rows = slice(2 * i, 2 * i + 2)
        A[rows, i] = P[i]
        A[rows, L + i] = P[(i + 1) % L] / 2
        A[rows, L + (i - 1) % L] = P[(i - 1) % L] / 2
    _, sv, Vt = np.linalg.svd(A)
    w = Vt[-1]
    if sv[-2] <= 1e-9 * max(1.0, sv[0]):
        logger.warning(f"Equilibrium system on cycle {C.vertices} has a null space of dimension > 1")
    if np.sum(w[:L]) < 0:
        w = -w
    w = w / np.max(np.abs(w[L:]))

    n = max(C.vertices) + 1 if n is None else n
    vertex = np.zeros(n)
    vertex[list(C.vertices)] = w[:L]
    if inst is not None:
        keys = inst.keys
    else:
        keys = tuple(sorted(_instance_key(None, u, v, s) for u, v, s in C.edges))
    vals = dict.fromkeys(keys, 0.0)
    for i, (u, v, s) in enumerate(C.edges):
        vals[_instance_key(inst, u, v, s)] += w[L + i]
    return StressVector(vertex, keys, [vals[k] for k in keys])


def circle_framework_coords(C: SignedCycle, c):
    """Circle realization of a cycle as an array aligned with C.vertices"""
    return _circle_realization(C, c)


@dataclass(frozen=True)
class LaurentResult:
    feasible: bool
    exact: bool
    check: MetCheck

    def to_dict(self):
        return {'feasible': self.feasible, 'exact': self.exact, 'check': self.check.to_dict()}


def laurent_feasibility(SG: SignedGraph, c, cap=None) -> LaurentResult:
    """
    Decide c in E(G, Sigma) by MET(G, Sigma) membership of arccos(c)/pi

    Exact when (G, Sigma) has no odd-K4 minor; otherwise only a necessary
    condition (exact=False).
    """
    exact = is_odd_k4_minor_free(SG)
    if not exact:
        logger.info(f"{SG} has an odd-K4 minor; metric membership is only necessary")
    check = met_membership_signed(SG, arccos_map(c), cap)
    return LaurentResult(check.member, exact, check)


def instance_met_check(inst, cap=None) -> LaurentResult:
    return laurent_feasibility(inst.signed_graph(), signed_weights(inst), cap)


def candidate_stage_one(inst, cap=None) -> StressVector:
    """
    Sum of the tight-cycle duals over every tight odd cycle of the instance;
    degenerate tight cycles are skipped
    """
    c = signed_weights(inst)
    total = StressVector.zero(inst.n, inst.keys)
    for C in tight_cycles(inst.signed_graph(), c, cap):
        try:
            total = total + tight_cycle_dual(C, c, n=inst.n, inst=inst)
        except DegenerateTightCycle as e:
            logger.debug(f"Skipping cycle {C.vertices}: {e}")
    return total
