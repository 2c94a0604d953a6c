"""Finite state transducers over position alphabets.

A transducer is a nondeterministic two-tape automaton; transitions read one
input symbol or nothing and write one output symbol or nothing (epsilon is
represented by None).  The recognized relation is the set of word pairs
labelling paths from the initial state to an accepting state.
"""

from __future__ import annotations

from collections import deque

from .arena import Arena
from .errors import EncodingError, InputFormatError

__all__ = [
    "EPSILON", "Transducer", "recognizes", "compose", "trim", "union",
    "restrict_to_plays", "build_observation_equivalence",
    "build_morphism_equivalence", "identity_transducer", "length_transducer",
    "parse_transducer", "format_transducer",
]

EPSILON = None


class Transducer:
    def __init__(self, states, input_alphabet, output_alphabet, initial,
                 accepting, transitions, name="fst"):
        self.name = name
        self.states = tuple(dict.fromkeys(states))
        self.state_index = {q: i for i, q in enumerate(self.states)}
        self.input_alphabet = frozenset(input_alphabet)
        self.output_alphabet = frozenset(output_alphabet)
        self.initial = initial
        self.accepting = frozenset(accepting)
        self.transitions = tuple(dict.fromkeys(transitions))
        if self.initial not in self.state_index:
            raise InputFormatError(f"initial state {self.initial!r} not declared")
        for q in self.accepting:
            if q not in self.state_index:
                raise InputFormatError(f"accepting state {q!r} not declared")
        by_state: dict = {q: [] for q in self.states}
        for q, a, b, q2 in self.transitions:
            if q not in by_state or q2 not in self.state_index:
                raise InputFormatError(f"transition references undeclared state: {(q, a, b, q2)!r}")
            if a is not EPSILON and a not in self.input_alphabet:
                raise InputFormatError(f"transition reads undeclared symbol {a!r}")
            if b is not EPSILON and b not in self.output_alphabet:
                raise InputFormatError(f"transition writes undeclared symbol {b!r}")
            by_state[q].append((a, b, q2))
        self._from = {q: tuple(ts) for q, ts in by_state.items()}

    def transitions_from(self, q):
        return self._from[q]

    def __len__(self):
        return len(self.states)


def recognizes(t: Transducer, w, w2) -> bool:
    """Is (w, w2) in the relation recognized by t?

    Decided by search over configurations (state, consumed, produced); the
    visited set makes epsilon cycles harmless.
    """
    w, w2 = tuple(w), tuple(w2)
    n, m = len(w), len(w2)
    start = (t.initial, 0, 0)
    seen = {start}
    queue = deque([start])
    while queue:
        q, i, j = queue.popleft()
        if i == n and j == m and q in t.accepting:
            return True
        for a, b, q2 in t.transitions_from(q):
            if a is EPSILON:
                i2 = i
            elif i < n and w[i] == a:
                i2 = i + 1
            else:
                continue
            if b is EPSILON:
                j2 = j
            elif j < m and w2[j] == b:
                j2 = j + 1
            else:
                continue
            conf = (q2, i2, j2)
            if conf not in seen:
                seen.add(conf)
                queue.append(conf)
    return False


def compose(t1: Transducer, t2: Transducer, name=None) -> Transducer:
    """Transducer for the relational composition [t1] o [t2].

    Product over synchronized symbols: an output x of t1 pairs with a read
    of x by t2; epsilon-output moves of t1 and epsilon-input moves of t2
    advance alone.  Only states reachable from the initial pair are kept.
    """
    if t1.output_alphabet != t2.input_alphabet:
        raise EncodingError("alphabet mismatch: composition requires "
                            "output alphabet of t1 = input alphabet of t2")
    t2_by_in: dict = {q: {} for q in t2.states}
    t2_eps_in: dict = {q: [] for q in t2.states}
    for q, a, b, q2 in t2.transitions:
        if a is EPSILON:
            t2_eps_in[q].append((b, q2))
        else:
            t2_by_in[q].setdefault(a, []).append((b, q2))

    init = (t1.initial, t2.initial)
    order = {init: None}
    transitions = []
    queue = deque([init])
    while queue:
        q1, q2 = queue.popleft()
        moves = []
        for a, x, q1b in t1.transitions_from(q1):
            if x is EPSILON:
                moves.append((a, EPSILON, (q1b, q2)))
            else:
                for b, q2b in t2_by_in[q2].get(x, ()):
                    moves.append((a, b, (q1b, q2b)))
        for b, q2b in t2_eps_in[q2]:
            moves.append((EPSILON, b, ((q1, q2b))))
        for a, b, tgt in moves:
            transitions.append(((q1, q2), a, b, tgt))
            if tgt not in order:
                order[tgt] = None
                queue.append(tgt)
    accepting = [s for s in order if s[0] in t1.accepting and s[1] in t2.accepting]
    return Transducer(
        states=list(order),
        input_alphabet=t1.input_alphabet,
        output_alphabet=t2.output_alphabet,
        initial=init,
        accepting=accepting,
        transitions=transitions,
        name=name or f"{t1.name}o{t2.name}",
    )


def trim(t: Transducer) -> Transducer:
    """Remove states that are unreachable or cannot reach acceptance.

    Preserves the recognized relation; the initial state is always kept.
    """
    reach = {t.initial}
    queue = deque([t.initial])
    while queue:
        q = queue.popleft()
        for _, _, q2 in t.transitions_from(q):
            if q2 not in reach:
                reach.add(q2)
                queue.append(q2)
    pred: dict = {q: [] for q in t.states}
    for q, _, _, q2 in t.transitions:
        pred[q2].append(q)
    coacc = set(t.accepting)
    queue = deque(coacc)
    while queue:
        q = queue.popleft()
        for p in pred[q]:
            if p not in coacc:
                coacc.add(p)
                queue.append(p)
    keep = (reach & coacc) | {t.initial}
    return Transducer(
        states=[q for q in t.states if q in keep],
        input_alphabet=t.input_alphabet,
        output_alphabet=t.output_alphabet,
        initial=t.initial,
        accepting=[q for q in t.accepting if q in keep],
        transitions=[tr for tr in t.transitions if tr[0] in keep and tr[3] in keep],
        name=t.name,
    )


def union(t1: Transducer, t2: Transducer, name=None) -> Transducer:
    """Transducer for [t1] | [t2] (fresh start with epsilon moves to both)."""
    if (t1.input_alphabet != t2.input_alphabet
            or t1.output_alphabet != t2.output_alphabet):
        raise EncodingError("alphabet mismatch in transducer union")
    start = "u0"
    states = [start] + [(0, q) for q in t1.states] + [(1, q) for q in t2.states]
    transitions = [
        (start, EPSILON, EPSILON, (0, t1.initial)),
        (start, EPSILON, EPSILON, (1, t2.initial)),
    ]
    transitions += [((0, q), a, b, (0, q2)) for q, a, b, q2 in t1.transitions]
    transitions += [((1, q), a, b, (1, q2)) for q, a, b, q2 in t2.transitions]
    accepting = [(0, q) for q in t1.accepting] + [(1, q) for q in t2.accepting]
    return Transducer(states, t1.input_alphabet, t1.output_alphabet, start,
                      accepting, transitions, name=name or f"{t1.name}|{t2.name}")


def restrict_to_plays(t: Transducer, arena: Arena) -> Transducer:
    """Intersect the relation with pairs of finite plays of the arena.

    Three-way product: both tapes are additionally run through a prefix
    automaton of the arena (state = last position seen, None before the
    first one); acceptance requires both tapes to hold nonempty plays.
    """
    def step(last, v):
        if v not in arena:
            return False, None
        if last is None:
            return (v == arena.initial), v
        return (v in arena.successors(last)), v

    init = (None, t.initial, None)
    order = {init: None}
    transitions = []
    queue = deque([init])
    while queue:
        state = queue.popleft()
        s_in, q, s_out = state
        for a, b, q2 in t.transitions_from(q):
            if a is EPSILON:
                s_in2 = s_in
            else:
                ok, s_in2 = step(s_in, a)
                if not ok:
                    continue
            if b is EPSILON:
                s_out2 = s_out
            else:
                ok, s_out2 = step(s_out, b)
                if not ok:
                    continue
            tgt = (s_in2, q2, s_out2)
            transitions.append((state, a, b, tgt))
            if tgt not in order:
                order[tgt] = None
                queue.append(tgt)
    accepting = [s for s in order
                 if s[1] in t.accepting and s[0] is not None and s[2] is not None]
    positions = frozenset(arena.positions)
    return Transducer(
        states=list(order),
        input_alphabet=positions,
        output_alphabet=positions,
        initial=init,
        accepting=accepting,
        transitions=transitions,
        name=f"{t.name}|plays",
    )


def build_observation_equivalence(arena: Arena, obs_classes, by_action=True) -> Transducer:
    """Transducer for observational play equivalence, restricted to plays.

    obs_classes must partition exactly the Player 1 positions; Player 2
    positions are related iff they carry equal label sets (the action
    proposition) when by_action, and only to themselves otherwise.
    """
    p1 = [v for v in arena.positions if arena.owner[v] == 1]
    blocks = [tuple(block) for block in obs_classes]
    seen: dict = {}
    for block in blocks:
        for v in block:
            if v not in arena or arena.owner[v] != 1:
                raise EncodingError(f"non-partition: {v!r} is not a Player 1 position")
            if v in seen:
                raise EncodingError(f"non-partition: {v!r} occurs in two classes")
            seen[v] = block
    missing = [v for v in p1 if v not in seen]
    if missing:
        raise EncodingError(f"non-partition: {missing[0]!r} is in no class")

    groups = list(blocks)
    p2 = [v for v in arena.positions if arena.owner[v] == 2]
    if by_action:
        by_label: dict = {}
        for v in p2:
            by_label.setdefault(arena.labels[v], []).append(v)
        groups += [tuple(vs) for _, vs in sorted(by_label.items(), key=lambda kv: sorted(kv[0]))]
    else:
        groups += [(v,) for v in p2]

    q0 = "q0"
    transitions = [(q0, u, v, q0) for block in groups for u in block for v in block]
    positions = frozenset(arena.positions)
    raw = Transducer([q0], positions, positions, q0, [q0], transitions,
                     name="obs-equiv")
    return restrict_to_plays(raw, arena)


def build_morphism_equivalence(arena: Arena, h: dict) -> Transducer:
    """Transducer relating plays with equal images under the morphism h.

    h maps every position to an observation or to None (unobserved);
    unobserved positions are consumed and produced silently.  The result is
    restricted to pairs of plays.
    """
    missing = [v for v in arena.positions if v not in h]
    if missing:
        raise EncodingError(f"morphism is not total: missing {missing[0]!r}")
    q0 = "q0"
    transitions = []
    for u in arena.positions:
        if h[u] is None:
            transitions.append((q0, u, EPSILON, q0))
            transitions.append((q0, EPSILON, u, q0))
    for u in arena.positions:
        if h[u] is None:
            continue
        for v in arena.positions:
            if h[v] == h[u]:
                transitions.append((q0, u, v, q0))
    positions = frozenset(arena.positions)
    raw = Transducer([q0], positions, positions, q0, [q0], transitions,
                     name="morphism-equiv")
    return restrict_to_plays(raw, arena)


def play_projection_transducers(arena: Arena, project, plain_alphabet=None) -> tuple:
    """Deterministic transducers between plays of a product arena and their
    projections.

    `project` maps each arena position to its underlying symbol.  The first
    transducer reads a play of `arena` and writes its projection; the
    second reads a projection and writes the corresponding play, threading
    the current position through its own state.  Both accept exactly valid
    plays of `arena` on the structured tape.
    """
    start = ("proj-start",)
    states = [start] + list(arena.positions)
    down, up = [], []
    pairs = [(start, arena.initial)]
    pairs += [(src, dst) for src in arena.positions for dst in arena.successors(src)]
    for src, dst in pairs:
        down.append((src, dst, project(dst), dst))
        up.append((src, project(dst), dst, dst))
    structured = frozenset(arena.positions)
    if plain_alphabet is None:
        plain_alphabet = {project(v) for v in arena.positions}
    plain = frozenset(plain_alphabet)
    t_down = Transducer(states, structured, plain, start, list(arena.positions),
                        down, name="down")
    t_up = Transducer(states, plain, structured, start, list(arena.positions),
                      up, name="up")
    return t_down, t_up


def identity_transducer(alphabet, name="id") -> Transducer:
    q0 = "q0"
    alphabet = frozenset(alphabet)
    transitions = [(q0, v, v, q0) for v in sorted(alphabet, key=str)]
    return Transducer([q0], alphabet, alphabet, q0, [q0], transitions, name=name)


def length_transducer(alphabet, name="len") -> Transducer:
    """Relates every pair of equal-length words."""
    q0 = "q0"
    alphabet = frozenset(alphabet)
    symbols = sorted(alphabet, key=str)
    transitions = [(q0, u, v, q0) for u in symbols for v in symbols]
    return Transducer([q0], alphabet, alphabet, q0, [q0], transitions, name=name)


# ---------------------------------------------------------------------------
# Text format

def parse_transducer(text: str) -> Transducer:
    """Parse the line-oriented transducer format.

    fst <name>
    state <id> [init] [accept]
    trans <q> <in|-> <out|-> <q'>
    """
    name = "fst"
    states, accepting, transitions = [], [], []
    initial = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "fst":
            name = parts[1] if len(parts) > 1 else name
        elif kind == "state":
            if len(parts) < 2:
                raise InputFormatError("state line needs an identifier", lineno)
            ident = parts[1]
            states.append(ident)
            for flag in parts[2:]:
                if flag == "init":
                    initial = ident
                elif flag == "accept":
                    accepting.append(ident)
                else:
                    raise InputFormatError(f"unknown state flag {flag!r}", lineno)
        elif kind == "trans":
            if len(parts) != 5:
                raise InputFormatError("trans line needs <q> <in> <out> <q'>", lineno)
            a = None if parts[2] == "-" else parts[2]
            b = None if parts[3] == "-" else parts[3]
            transitions.append((parts[1], a, b, parts[4]))
        else:
            raise InputFormatError(f"unknown directive {kind!r}", lineno)
    if initial is None:
        raise InputFormatError("missing init state")
    inputs = {a for _, a, _, _ in transitions if a is not None}
    outputs = {b for _, _, b, _ in transitions if b is not None}
    return Transducer(states, inputs, outputs, initial, accepting, transitions, name=name)


def format_transducer(t: Transducer) -> str:
    def sid(q):
        return "".join(str(q).split())

    lines = [f"fst {t.name}"]
    for q in t.states:
        flags = ""
        if q == t.initial:
            flags += " init"
        if q in t.accepting:
            flags += " accept"
        lines.append(f"state {sid(q)}{flags}")
    for q, a, b, q2 in t.transitions:
        sa = "-" if a is None else "".join(str(a).split())
        sb = "-" if b is None else "".join(str(b).split())
        lines.append(f"trans {sid(q)} {sa} {sb} {sid(q2)}")
    return "\n".join(lines) + "\n"
