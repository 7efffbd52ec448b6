import random

from kmboard.domains import tc_domain, TimePoset
from kmboard.duhamel import (
    Atom,
    Conj,
    Evolve,
    FLeaf,
    Prod,
    as_flow,
    build_dtree,
    estimate_schedule,
    expand,
    expand_oracle,
    expand_text,
    integrated_expand,
    mark_dtree,
    normalize,
    render_expr,
    substitute_times,
    unclogged_count,
)
from kmboard.moves import MoveState, allowable_permutations, apply_signed_km, apply_wild, km_admissible_indices
from kmboard.pairs import TimePermutation, enumerate_pairs, random_pair, validate_pair

QUINTIC = validate_pair(7, (1, 1, 1, 2, 3, 6, 6), "++--++-")

X1_TEXT = (
    "U_{1,3}[(U_{3,5}(|U_{5,15}phi|^4U_{5,15}phi))(|U_{3,15}phi|^2)"
    "(conj(U_{3,9}(|U_{9,15}phi|^4U_{9,15}phi)))(U_{3,11}(|U_{11,15}phi|^4U_{11,15}phi))]"
)
X1P_TEXT = (
    "conj(U_{1,7}[(|U_{7,15}phi|^2U_{7,15}phi)"
    "(conj(U_{7,13}(|U_{13,15}phi|^4U_{13,15}phi)))(U_{7,15}(|phi|^4phi))])"
)


def test_dtree_of_quintic_example():
    dt = build_dtree(QUINTIC)
    assert dt.root == (2, 6)
    assert dt.kids[2] == (4, FLeaf(2, "+"), 8, 10, FLeaf(3, "-"))
    assert dt.kids[6] == (FLeaf(1, "-"), 12, 14, FLeaf(7, "+"), FLeaf(7, "-"))
    assert dt.kids[4] == (
        FLeaf(1, "+"), FLeaf(4, "+"), FLeaf(4, "-"), FLeaf(5, "+"), FLeaf(5, "-"),
    )
    assert dt.parent[14] == 6 and dt.parent[2] == 0


def test_dtree_smallest():
    dt = build_dtree(validate_pair(1, (1,), "+"))
    assert dt.root == (2, FLeaf(1, "-"))
    assert all(isinstance(c, FLeaf) for c in dt.kids[2])


def test_marks_of_quintic_example():
    marked = mark_dtree(build_dtree(QUINTIC))
    assert {x: set(s) for x, s in marked.marks.items()} == {
        2: {"phi"}, 4: {"phi"}, 8: {"phi"}, 10: {"phi"}, 12: {"phi"},
        6: {"phi", "R"}, 14: {"R"},
    }
    assert unclogged_count(marked) == 6


def test_left_chain_is_fully_unclogged():
    p = validate_pair(6, (1,) * 6, "++++++")
    assert unclogged_count(build_dtree(p)) == 5


def test_schedule_of_quintic_example():
    schedule = estimate_schedule(mark_dtree(build_dtree(QUINTIC)))
    assert schedule.small_factor_power == 6
    assert schedule.h_norm_power == 24
    assert schedule.constant_power == 7
    assert dict(schedule.cases)[3] == "phi-R"
    assert dict(schedule.cases)[1] == "phi"


def test_schedule_smallest():
    schedule = estimate_schedule(build_dtree(validate_pair(1, (1,), "+")))
    assert schedule.cases == ()
    assert schedule.small_factor_power == 0
    assert schedule.h_norm_power == 6


def test_schedule_small_power_equals_unclogged_random():
    rng = random.Random(14)
    for _ in range(500):
        p = random_pair(rng.randint(1, 7), rng)
        dt = build_dtree(p)
        assert estimate_schedule(mark_dtree(dt)).small_factor_power == unclogged_count(dt)


def _unclogged_fast(mu, sgn):
    # a coupling is congested iff its node fills all five child slots
    k = len(mu)
    child_count = [0] * (k + 1)
    seen = {}
    for j in range(1, k + 1):
        key = (mu[j - 1], sgn[j - 1])
        if key in seen:
            child_count[seen[key]] += 1
        elif mu[j - 1] > 1:
            v = mu[j - 1]
            child_count[v // 2 if v % 2 == 0 else (v - 1) // 2] += 1
        seen[key] = j
    return sum(1 for l in range(1, k) if child_count[l] < 5)


def test_unclogged_fast_scan_matches_tree():
    for k in range(1, 5):
        for p in enumerate_pairs(k, signed=True):
            assert _unclogged_fast(p.mu, p.sgn) == unclogged_count(build_dtree(p))


def test_minimum_unclogged_fraction_report():
    # recorded, not asserted: the guaranteed decay fraction is asymptotic
    from itertools import product

    from kmboard.pairs import enumerate_mus

    for k in range(1, 7):
        worst = min(
            _unclogged_fast(mu, sgn) / k
            for mu in enumerate_mus(k)
            for sgn in product("+-", repeat=k)
        )
        print(f"k={k}: minimum unclogged fraction {worst:.3f}")


def test_rough_marks_sit_on_ancestor_chain():
    rng = random.Random(15)
    for _ in range(200):
        p = random_pair(rng.randint(2, 7), rng)
        dt = mark_dtree(build_dtree(p))
        rough = {x for x, s in dt.marks.items() if "R" in s}
        assert rough == {2 * p.k, *dt.ancestors(2 * p.k)}
        for l in range(1, p.k):
            assert ("phi" in dt.marks.get(2 * l, frozenset())) == dt.has_f_child(2 * l)


def test_expansion_text_of_quintic_example():
    assert expand_text(QUINTIC) == X1_TEXT + "\n" + X1P_TEXT + "\n"


def test_expansion_text_smallest():
    assert expand_text(validate_pair(1, (1,), "+")) == (
        "U_{1,3}(|phi|^4phi)\nconj(U_{1,3}phi)\n"
    )


def test_oracle_trace_reproduces_printed_intermediates():
    _, snapshots = expand_oracle(QUINTIC, trace=True)
    state = dict(snapshots)
    after13 = state[7]
    assert render_expr(after13[6][0]) == "U_{13,15}phi"
    assert render_expr(after13[6][1]) == "conj(U_{13,15}(|phi|^4phi))"
    after11 = state[6]
    assert render_expr(after11[6][0]) == "U_{11,13}(|U_{13,15}phi|^4U_{13,15}phi)"
    assert render_expr(after11[6][1]) == "conj(U_{11,15}(|phi|^4phi))"
    after7 = state[4]
    assert render_expr(after7[2][0]) == "U_{7,15}phi"
    assert render_expr(after7[2][1]) == "conj(U_{7,9}(|U_{9,15}phi|^4U_{9,15}phi))"
    assert render_expr(after7[3][0]) == "U_{7,11}(|U_{11,15}phi|^4U_{11,15}phi)"
    assert render_expr(after7[3][1]) == "conj(U_{7,15}phi)"
    assert render_expr(after7[6][0]) == "U_{7,13}(|U_{13,15}phi|^4U_{13,15}phi)"
    assert render_expr(after7[6][1]) == "conj(U_{7,15}(|phi|^4phi))"


def test_expand_equals_oracle_small_and_random():
    for k in (1, 2, 3):
        for p in enumerate_pairs(k, signed=True):
            assert expand(p) == tuple(map(normalize, expand_oracle(p)))
    rng = random.Random(16)
    for _ in range(60):
        p = random_pair(rng.randint(4, 6), rng)
        assert expand(p) == tuple(map(normalize, expand_oracle(p)))


def test_normalize_basic_laws():
    phi = Atom()
    assert normalize(Conj(Conj(phi))) == phi
    assert normalize(Evolve(3, 5, Evolve(5, 15, phi))) == Evolve(3, 15, phi)
    assert normalize(Evolve(3, 3, phi)) == phi
    # conjugation flips the propagator orientation; |phi|^2 is self-conjugate
    lhs = normalize(Conj(Evolve(3, 5, Prod((phi, Conj(phi))))))
    assert lhs == normalize(Evolve(5, 3, Prod((phi, Conj(phi)))))


def _random_expr(rng, depth):
    roll = rng.random()
    if depth <= 0 or roll < 0.25:
        return Atom()
    if roll < 0.5:
        return Conj(_random_expr(rng, depth - 1))
    if roll < 0.75:
        a = rng.choice([None, 1, 3, 5, 7, 9])
        b = rng.choice([1, 3, 5, 7, 9, None])
        if a is None and b is None:
            b = 7
        return Evolve(a, b, _random_expr(rng, depth - 1))
    return Prod(tuple(_random_expr(rng, depth - 1) for _ in range(rng.randint(2, 4))))


def test_normalize_is_idempotent_on_random_expressions():
    rng = random.Random(99)
    for _ in range(1000):
        e = _random_expr(rng, 5)
        n = normalize(e)
        assert normalize(n) == n
        assert normalize(Conj(Conj(e))) == n


def test_conj_commutes_through_evolve_with_flip():
    rng = random.Random(100)
    for _ in range(300):
        e = _random_expr(rng, 4)
        lhs = normalize(Conj(Evolve(3, 9, e)))
        rhs = normalize(Evolve(9, 3, Conj(e)))
        assert lhs == rhs


def test_substitute_times_identity_and_composition():
    rng = random.Random(101)
    p = validate_pair(3, (1, 2, 3), "+-+")
    left, _ = expand(p)
    assert substitute_times(left, TimePermutation.identity(3)) == normalize(left)
    a = TimePermutation(3, (4, 2, 6))
    b = TimePermutation(3, (2, 6, 4))
    assert substitute_times(substitute_times(left, b), a) == substitute_times(
        left, a.compose(b)
    )


def test_wild_kernel_identity_on_wild_example():
    reference = validate_pair(7, (1, 1, 1, 2, 3, 7, 7), "++--++-")
    want = tuple(normalize(as_flow(e, 7)) for e in expand(reference))
    for rho in allowable_permutations(reference):
        moved = apply_wild(MoveState.start(reference), rho).pair
        got = tuple(
            substitute_times(as_flow(e, 7), rho.inverse()) for e in expand(moved)
        )
        assert got == want


def test_km_relabeling_identity_report():
    # tested and reported, not asserted: the adjacent-move analogue of the
    # wild relabeling identity, in flow basing
    held = failed = 0
    cases = []
    for p in enumerate_pairs(3, signed=True):
        cases.extend((p, j) for j in km_admissible_indices(p))
    rng = random.Random(18)
    for _ in range(60):
        p = random_pair(5, rng)
        js = km_admissible_indices(p)
        if js:
            cases.append((p, rng.choice(js)))
    for p, j in cases:
        state = apply_signed_km(MoveState.start(p), j)
        want = tuple(normalize(as_flow(e, p.k)) for e in expand(p))
        got = tuple(
            substitute_times(as_flow(e, p.k), state.sigma.inverse())
            for e in expand(state.pair)
        )
        if got == want:
            held += 1
        else:
            failed += 1
    print(f"km relabeling identity: held {held}, failed {failed} of {held + failed}")
    assert held + failed == len(cases)


def test_integrated_bounds_of_quintic_example():
    integrated = integrated_expand(QUINTIC)
    assert integrated.outer == (15, 0, 1)
    assert integrated.bounds == {
        2: (0, 1), 4: (0, 3), 6: (15, 1), 8: (0, 3), 10: (0, 3), 12: (0, 7),
    }
    text = integrated.render_text()
    assert text.startswith("Int[t15:0..t1] Int[t3:0..t1] Int[t7:t15..t1]")


def test_integrated_bounds_smallest():
    integrated = integrated_expand(validate_pair(1, (1,), "-"))
    assert integrated.bounds == {} and integrated.outer == (3, 0, 1)


def test_integrated_bounds_graph_matches_compatible_domain():
    rng = random.Random(19)
    for _ in range(100):
        p = random_pair(rng.randint(1, 7), rng)
        integrated = integrated_expand(p)
        from_bounds = TimePoset.from_relations(p.k, integrated.relation_pairs())
        assert from_bounds == TimePoset.from_relations(
            p.k, list(tc_domain(p).reduction()) + [(1, 2 * p.k + 1)]
        )


def test_flow_basing_rebases_the_profile():
    # U_{1,3}(|phi|^4 phi) becomes U_{1,3}(|U_3 phi0|^4 U_3 phi0)
    left, right = expand(validate_pair(1, (1,), "+"))
    u3 = Evolve(3, None, Atom())
    assert normalize(as_flow(left, 1)) == normalize(
        Evolve(1, 3, Prod((u3, u3, u3, Conj(u3), Conj(u3))))
    )
    # the conjugate side conj(U_{1,3} phi) becomes conj(U_1 phi0)
    assert normalize(as_flow(right, 1)) == normalize(Conj(Evolve(1, None, Atom())))
