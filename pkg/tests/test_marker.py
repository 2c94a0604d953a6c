from conftest import lassos_of, make_branching, make_g0
from unistrat.formula import Atom, R, format_formula, parse, r_depth
from unistrat.marker import (eliminate_r, format_marking_report,
                             position_models_ltl, satisfying_positions,
                             trace_counterexample)
from unistrat.oracle import bounded_semantics, lasso_eval
from unistrat.transducer import (identity_transducer, length_transducer,
                                 restrict_to_plays, trim)


def restricted(t, arena):
    return trim(restrict_to_plays(t, arena))


def test_position_models_single_lasso():
    g0 = make_g0()
    assert position_models_ltl(g0, "v0", parse("G(p -> X !p)"))
    assert lasso_eval([], [{"p"}, set()], parse("G(p -> X !p)"))


def test_position_models_true_everywhere():
    g0 = make_g0()
    for v in g0.positions:
        assert position_models_ltl(g0, v, parse("true"))


def test_position_models_universal_quantification():
    arena = make_branching(owner_v0=2)
    assert not position_models_ltl(arena, "v0", parse("F p"))
    assert position_models_ltl(arena, "a", parse("F p"))


def test_trace_counterexample_is_a_violating_trace():
    arena = make_branching()
    psi = parse("F p")
    witness = trace_counterexample(arena, "v0", psi)
    assert witness is not None
    stem, cycle = witness
    path = list(stem) + list(cycle)
    assert path[0] == "v0"
    for u, v in zip(path, path[1:]):
        assert v in arena.successors(u)
    assert cycle[0] in arena.successors(path[-1])
    assert not lasso_eval([arena.labels[v] for v in stem],
                          [arena.labels[v] for v in cycle], psi)


def test_satisfying_positions_matches_pointwise():
    arena = make_branching()
    for text in ["F p", "G !p", "X p", "p U q", "G(p -> X !p)"]:
        psi = parse(text)
        want = frozenset(v for v in arena.positions
                         if position_models_ltl(arena, v, psi))
        assert satisfying_positions(arena, psi) == want


def test_eliminate_r_true_marks_everything():
    g0 = make_g0()
    t = restricted(identity_transducer(g0.positions), g0)
    marked, lifted, phi_hat, report = eliminate_r(g0, t, parse("[R] true"))
    name = next(iter(report.atom_sources))
    assert report.marked_positions[name] == frozenset(marked.positions)
    assert r_depth(phi_hat) == 0
    assert phi_hat == Atom(name)


def test_eliminate_r_depth_two_single_pass():
    g0 = make_g0()
    t = restricted(identity_transducer(g0.positions), g0)
    marked, lifted, phi_hat, report = eliminate_r(g0, t, parse("[R] X [R] q"))
    assert r_depth(phi_hat) == 1
    assert len(report.atom_sources) == 1
    src = next(iter(report.atom_sources.values()))
    assert src == R(Atom("q"))


def test_marking_agrees_with_per_position_checks():
    arena = make_branching()
    t = restricted(length_transducer(arena.positions), arena)
    phi = parse("G([R] p | [R] !p)")
    marked, lifted, phi_hat, report = eliminate_r(arena, t, phi)
    for name, source in report.atom_sources.items():
        for p in marked.positions:
            want = all(position_models_ltl(arena, u, source.sub) for u in p.info)
            assert (p in report.marked_positions[name]) == want
            assert (name in marked.labels[p]) == want


def test_marking_vacuous_on_empty_information_sets():
    g0 = make_g0()
    # transducer with no accepting states: empty relation, empty info sets
    from unistrat.transducer import Transducer
    t = Transducer(["q0"], frozenset(g0.positions), frozenset(g0.positions),
                   "q0", [], [("q0", "v0", "v0", "q0"), ("q0", "v1", "v1", "q0")])
    marked, lifted, phi_hat, report = eliminate_r(g0, t, parse("[R] false"))
    name = next(iter(report.atom_sources))
    assert report.marked_positions[name] == frozenset(marked.positions)


def test_elimination_transfer_on_lassos():
    """The rewritten formula on the marked arena agrees with the bounded
    evaluator for the original formula on every lasso play."""
    fixtures = [
        (make_g0(), identity_transducer(make_g0().positions), "G([R] p | [R] !p)"),
        (make_branching(), length_transducer(make_branching().positions),
         "X G(<R> p & <R> !p)"),
        (make_branching(), length_transducer(make_branching().positions),
         "F [R] !p"),
    ]
    for arena, raw, text in fixtures:
        phi = parse(text)
        t = restricted(raw, arena)
        marked, lifted, phi_hat, report = eliminate_r(arena, t, phi)
        power = report.power
        for stem, cycle in lassos_of(arena):
            want = bounded_semantics(arena, t, "all", (stem, cycle), 0, phi)
            if want is None:
                continue
            hat = power.lift_play(tuple(stem) + tuple(cycle))
            stem_l = [marked.labels[p] for p in hat[:len(stem)]]
            cycle_l = [marked.labels[p] for p in hat[len(stem):]]
            got = lasso_eval(stem_l, cycle_l, phi_hat)
            assert got == want, (text, stem, cycle)


def test_marks_do_not_interact():
    arena = make_branching()
    t = restricted(length_transducer(arena.positions), arena)
    phi = parse("([R] p) & ([R] !p)")
    _, _, _, both = eliminate_r(arena, t, phi)
    solo_p = eliminate_r(arena, t, parse("[R] p"))[3]
    solo_np = eliminate_r(arena, t, parse("[R] !p"))[3]
    by_source = {format_formula(src): frozenset(
        p.v for p in both.marked_positions[name])
        for name, src in both.atom_sources.items()}
    for solo in (solo_p, solo_np):
        name, src = next(iter(solo.atom_sources.items()))
        assert by_source[format_formula(src)] == frozenset(
            p.v for p in solo.marked_positions[name])


def test_marking_report_dump_is_deterministic():
    g0 = make_g0()
    t = restricted(identity_transducer(g0.positions), g0)
    reports = [eliminate_r(g0, t, parse("[R] p"))[3] for _ in range(2)]
    texts = [format_marking_report(r) for r in reports]
    assert texts[0] == texts[1]
    assert "atom @R0#" in texts[0]
