"""R-elimination: marking power positions with freshly named propositions.

A depth-one subformula [R] psi holds at a point of a play iff psi holds on
every trace from every endpoint of a related play, and those endpoints are
exactly the local information set of the power position reached.  Marking
therefore replaces [R] psi by a fresh proposition that labels precisely the
power positions whose whole information set universally satisfies psi;
empty information sets are marked (universal quantification over nothing).
"""

from __future__ import annotations

from collections import deque

from .arena import Arena
from .errors import NameCollisionError
from .formula import (Formula, Not, atoms, depth1_r_subformulas,
                      format_formula, fresh_atom_name, r_depth, substitute)
from .ltlgame import Caps, DEFAULT_CAPS, ltl_to_nba

__all__ = [
    "MarkingReport", "position_models_ltl", "trace_counterexample",
    "satisfying_positions", "eliminate_r", "format_marking_report",
]


class MarkingReport:
    """What was marked: fresh atom -> source [R] subformula and positions.

    Also carries the power arena the marking lives on, which downstream
    strategy pullback and debugging dumps need.
    """

    def __init__(self, atom_sources: dict, marked_positions: dict, power):
        self.atom_sources = dict(atom_sources)
        self.marked_positions = {k: frozenset(v) for k, v in marked_positions.items()}
        self.power = power


def _violation_product(arena: Arena, psi: Formula, caps: Caps):
    """Buchi product hunting traces that violate psi.

    Returns (nba, read) where read(q, u) gives the automaton successors
    after the state q consumes the label of position u.
    """
    ap = frozenset(atoms(psi))
    letters = sorted({arena.labels[u] & ap for u in arena.positions},
                     key=lambda s: tuple(sorted(s)))
    nba = ltl_to_nba(Not(psi), letters=letters, caps=caps)

    def read(q, u):
        # stable order keeps searches (and hence witnesses) reproducible
        return sorted(nba.transitions[(q, arena.labels[u] & ap)], key=str)

    return nba, read


def trace_counterexample(arena: Arena, v, psi: Formula, caps: Caps = DEFAULT_CAPS):
    """A trace from v violating LTL psi, as (stem, cycle) position lists,
    or None when every infinite trace from v satisfies psi.

    An accepting lasso of the violation product is the witness; anchors are
    tried in breadth-first discovery order so short witnesses come first.
    """
    nba, read = _violation_product(arena, psi, caps)
    initial = [(v, q) for q in sorted(nba.initial, key=str)]
    parent: dict = {node: None for node in initial}
    order = list(initial)
    queue = deque(initial)
    while queue:
        node = queue.popleft()
        u, q = node
        for q2 in read(q, u):
            for u2 in arena.successors(u):
                nxt = (u2, q2)
                if nxt not in parent:
                    parent[nxt] = node
                    order.append(nxt)
                    queue.append(nxt)

    for anchor in order:
        if anchor[1] not in nba.accepting:
            continue
        local_parent = {anchor: None}
        frontier = deque([anchor])
        while frontier:
            node = frontier.popleft()
            u, q = node
            for q2 in read(q, u):
                for u2 in arena.successors(u):
                    nxt = (u2, q2)
                    if nxt == anchor:
                        back = []
                        cur = node
                        while cur is not None:
                            back.append(cur)
                            cur = local_parent[cur]
                        cycle_nodes = list(reversed(back))
                        stem_nodes = []
                        cur = anchor
                        while cur is not None:
                            stem_nodes.append(cur)
                            cur = parent[cur]
                        stem_nodes.reverse()
                        stem = [n[0] for n in stem_nodes[:-1]]
                        cyc = [n[0] for n in cycle_nodes]
                        return stem, cyc
                    if nxt not in local_parent:
                        local_parent[nxt] = node
                        frontier.append(nxt)
    return None


def position_models_ltl(arena: Arena, v, psi: Formula, caps: Caps = DEFAULT_CAPS) -> bool:
    """Does every infinite trace from v satisfy the LTL formula psi?"""
    if r_depth(psi) != 0:
        raise ValueError("position_models_ltl needs a plain LTL formula")
    return trace_counterexample(arena, v, psi, caps=caps) is None


def satisfying_positions(arena: Arena, psi: Formula, caps: Caps = DEFAULT_CAPS) -> frozenset:
    """All positions from which every infinite trace satisfies psi.

    One product and one cycle analysis answer the question for every
    position at once: a position fails iff one of its initial product nodes
    can reach a cycle through an accepting state.
    """
    nba, read = _violation_product(arena, psi, caps)
    nodes = [(u, q) for u in arena.positions for q in nba.states]
    succ = {}
    for u, q in nodes:
        targets = []
        for q2 in read(q, u):
            for u2 in arena.successors(u):
                targets.append((u2, q2))
        succ[(u, q)] = targets

    # iterative Tarjan SCC
    index = {}
    low = {}
    on_stack = set()
    stack = []
    counter = [0]
    in_accepting_cycle = set()

    def strongconnect(root):
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(succ[child])))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent_node = work[-1][0]
                low[parent_node] = min(low[parent_node], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                has_edge_inside = (
                    len(component) > 1
                    or any(t == node for t in succ[node])
                )
                if has_edge_inside and any(m[1] in nba.accepting for m in component):
                    in_accepting_cycle.update(component)

    for node in nodes:
        if node not in index:
            strongconnect(node)

    # positions whose product can reach an accepting cycle are violating
    pred: dict = {node: [] for node in nodes}
    for node in nodes:
        for t in succ[node]:
            pred[t].append(node)
    bad = set(in_accepting_cycle)
    queue = deque(bad)
    while queue:
        node = queue.popleft()
        for p in pred[node]:
            if p not in bad:
                bad.add(p)
                queue.append(p)
    return frozenset(
        u for u in arena.positions
        if all((u, q) not in bad for q in nba.initial)
    )


def eliminate_r(arena: Arena, t, phi: Formula, caps: Caps = DEFAULT_CAPS):
    """One elimination round: (G, T, phi) -> (G', T', phi') with one less
    level of R nesting, plus the marking report.

    G' is the power arena relabelled with a fresh proposition per depth-one
    [R] subformula; T' is the lifted relation; phi' substitutes the fresh
    propositions in.  The relation of t must be restricted to play pairs.
    """
    from .powerset import build_power_arena, lift_transducer
    from .transducer import trim

    if r_depth(phi) < 1:
        raise ValueError("eliminate_r needs a formula with at least one R")
    targets = depth1_r_subformulas(phi)
    power = build_power_arena(arena, t, cap=caps.power_positions)
    lifted = trim(lift_transducer(t, power))

    used = set(atoms(phi)) | set(arena.propositions)
    atom_sources: dict = {}
    marked_positions: dict = {}
    new_labels = {p: set(power.arena.labels[p]) for p in power.arena.positions}
    for index, r_sub in enumerate(targets):
        name = fresh_atom_name(index, r_sub.sub, used)
        if name in used:
            raise NameCollisionError(f"fresh proposition {name!r} is already in use")
        used.add(name)
        atom_sources[name] = r_sub
        good = satisfying_positions(arena, r_sub.sub, caps=caps)
        marked = []
        for p in power.arena.positions:
            if p.info <= good:
                marked.append(p)
                new_labels[p].add(name)
        marked_positions[name] = marked

    phi_hat = phi
    for name, r_sub in atom_sources.items():
        phi_hat = substitute(phi_hat, r_sub, name)
    assert r_depth(phi_hat) == r_depth(phi) - 1

    marked_arena = Arena(
        positions=power.arena.positions,
        owner=power.arena.owner,
        edges=power.arena.edges,
        initial=power.arena.initial,
        labels={p: frozenset(ls) for p, ls in new_labels.items()},
        name=f"{arena.name}^",
    )
    report = MarkingReport(atom_sources, marked_positions, power)
    return marked_arena, lifted, phi_hat, report


def format_marking_report(report: MarkingReport) -> str:
    lines = []
    for name, source in report.atom_sources.items():
        lines.append(f"atom {name} := {format_formula(source)}")
        marked = report.marked_positions[name]
        ordered = [p for p in report.power.arena.positions if p in marked]
        for p in ordered:
            lines.append(f"  at {p}")
    return "\n".join(lines) + "\n"
