"""Routing: star extraction, ramps, planning, scheduling, simulation."""

import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from clsnet.evolve import (
    ProtocolSchedule,
    Segment,
    end_hamiltonian,
    evolve_static,
    fidelity,
    run_schedule,
)
from clsnet.lattice import (
    SiteGraph,
    TimedHamiltonian,
    LinearRamp,
    build_dll,
    build_star,
    evaluate_at,
    star_graph,
    seven_graph,
    build_seven,
)
from clsnet.routing import (
    RoutePlan,
    Timeline,
    build_ramp,
    dimer_adjacency,
    extract_star,
    plan_route,
    schedule_multi,
    simulate_route,
    timeline_schedule,
    transfer_member_for,
    verify_timeline,
)
from clsnet.spectral import dimer_state

J, V = 0.25, 0.5  # uniform lattice matching the shortest flip transfer


def dll(nx, ny):
    return build_dll(nx, ny, J, V)


# ---------------------------------------------------------------- stars


def test_extract_star_of_standalone_star_is_whole_graph():
    g = star_graph()
    H = build_star(J, V)
    sv = extract_star(g, H, 2)
    assert sv.sites == (0, 1, 2, 3, 4)
    assert sv.dimer_in == (0, 1) and sv.dimer_out == (3, 4)
    assert sv.boundary_entries == ()


def test_extract_star_boundary_partitions_crossing_edges():
    g, H = dll(2, 2)
    for hub in g.hubs():
        adjacent = [d for d in g.dimers()
                    if hub in (set(g.neighbors(d[0])) & set(g.neighbors(d[1])))]
        if len(adjacent) < 2:
            continue
        sv = extract_star(g, H, hub)
        sites = set(sv.sites)
        crossing = {e for e in g.edges
                    if (e[0] in sites) + (e[1] in sites) == 1}
        assert set(sv.boundary_entries) == crossing
        # spokes stay inside; boundary entries never touch the center pair
        for e in sv.boundary_entries:
            assert (e[0] in sites) != (e[1] in sites)


def test_extract_star_direction_override():
    g, H = dll(2, 1)
    sv = extract_star(g, H, 5, dimer_in=(6, 7), dimer_out=(1, 2))
    assert sv.sites == (6, 7, 5, 1, 2)


def test_extract_star_rejects_non_hub():
    g, H = dll(1, 1)
    with pytest.raises(ValueError, match="not a hub"):
        extract_star(g, H, 1)


def test_extract_star_rejects_single_dimer_hub():
    # the seven-site hub only touches connectors, never a dimer
    g = seven_graph()
    H = build_seven(J, V)
    with pytest.raises(ValueError, match="fewer than two"):
        extract_star(g, H, 3)


def test_extract_star_rejects_foreign_or_equal_dimers():
    g, H = dll(2, 2)
    with pytest.raises(ValueError, match="not adjacent"):
        extract_star(g, H, 0, dimer_in=(11, 12))
    with pytest.raises(ValueError, match="must differ"):
        extract_star(g, H, 0, dimer_in=(1, 2), dimer_out=(1, 2))


# ---------------------------------------------------------------- ramps


def test_build_ramp_hits_exact_endpoints():
    g, H = dll(2, 1)
    sv = extract_star(g, H, 0)
    down = build_ramp(H, sv.boundary_entries, "down", 0.7)
    up = build_ramp(H, sv.boundary_entries, "up", 0.7, t0=3.0)
    M0 = evaluate_at(down.H, 0.0)
    M1 = evaluate_at(down.H, 0.7)
    for e in sv.boundary_entries:
        assert M0[e] == J
        assert M1[e] == 0.0
        assert evaluate_at(up.H, 0.0)[e] == 0.0
        assert evaluate_at(up.H, 0.7)[e] == J
    assert (up.t_start, up.t_end) == (3.0, 3.7)


def test_build_ramp_validates_input():
    g, H = dll(2, 1)
    entries = ((1, 5), (2, 5))
    with pytest.raises(ValueError, match="positive"):
        build_ramp(H, entries, "down", 0.0)
    with pytest.raises(ValueError, match="direction"):
        build_ramp(H, entries, "sideways", 1.0)
    with pytest.raises(ValueError, match="duplicate"):
        build_ramp(H, ((1, 5), (5, 1)), "down", 1.0)
    with pytest.raises(ValueError, match="diagonal"):
        build_ramp(H, ((3, 3),), "down", 1.0)
    with pytest.raises(ValueError, match="not in the ramp set"):
        build_ramp(H, entries, "down", 1.0, paired=(((1, 5), (0, 3)),))
    H2 = H.with_entry((2, 5), 0.9 * J)
    with pytest.raises(ValueError, match="unequal base"):
        build_ramp(H2, entries, "down", 1.0, paired=(entries,))


def test_symmetric_ramp_preserves_stored_state():
    # couplings of the occupied dimer ramp in matched pairs; the state
    # never notices, for any ramp duration
    g, H = dll(2, 1)
    sv = extract_star(g, H, 0, dimer_in=(1, 2), dimer_out=(3, 4))
    psi = dimer_state(g.n_sites, (1, 2))
    rng = np.random.default_rng(71)
    for dt in rng.uniform(0.01, 10.0, size=50):
        seg = build_ramp(H, sv.boundary_entries, "down", float(dt),
                         paired=(((1, 5), (2, 5)),))
        traj = run_schedule(ProtocolSchedule(H, (seg,)), psi, tol=1e-12)
        assert fidelity(traj.final_state, psi) >= 1.0 - 1e-10


def test_asymmetric_ramp_leaks_population():
    # a 10% profile mismatch between the two dimer couplings pushes
    # occupation out of the dimer far above integrator error
    g, H = dll(2, 1)
    psi = dimer_state(g.n_sites, (1, 2))
    dt, tol = 1.0, 1e-11
    Hr = TimedHamiltonian(H.base, {
        (1, 5): LinearRamp(J, 0.0, dt),
        (2, 5): LinearRamp(J, 0.1 * J, dt),
    })
    traj = run_schedule(ProtocolSchedule(H, (Segment(0.0, dt, Hr),)),
                        psi, tol=tol)
    inside = np.sum(np.abs(traj.final_state[[1, 2]]) ** 2)
    assert 1.0 - inside > 100 * tol * dt


def test_down_ramped_star_evolves_like_isolated_star():
    # once the boundary is exactly zero the five sites are their own
    # closed system
    g, H = dll(2, 1)
    sv = extract_star(g, H, 0, dimer_in=(1, 2), dimer_out=(3, 4))
    M = np.array(H.base, copy=True)
    for e in sv.boundary_entries:
        M[e] = M[e[::-1]] = 0.0
    psi = np.zeros(g.n_sites, dtype=complex)
    psi[1] = psi[2] = 1 / np.sqrt(2)  # symmetric: moves through the hub
    t = 3.7
    full = evolve_static(M, psi, t)
    sub = evolve_static(M[np.ix_(sv.sites, sv.sites)], psi[list(sv.sites)], t)
    assert np.max(np.abs(full[list(sv.sites)] - sub)) < 1e-10
    assert np.max(np.abs(np.delete(full, sv.sites))) < 1e-12


# ------------------------------------------------------------- planning


def _oracle_hops(g):
    """Dimer hop-count matrix straight from neighbor sets."""
    dimers = list(g.dimers())
    idx = {d: k for k, d in enumerate(dimers)}
    A = np.zeros((len(dimers), len(dimers)))
    for a in dimers:
        for b in dimers:
            if a != b and (set(g.neighbors(a[0])) & set(g.neighbors(b[0]))
                           - set(a) - set(b)):
                A[idx[a], idx[b]] = 1
    return shortest_path(A, unweighted=True), idx


def test_dimer_adjacency_matches_neighbor_sets():
    g, _ = dll(3, 2)
    adj = dimer_adjacency(g)
    _, idx = _oracle_hops(g)
    assert set(adj) == set(idx)
    for d, nbrs in adj.items():
        for h, d2 in nbrs:
            assert h in set(g.neighbors(d[0])) & set(g.neighbors(d2[0]))
        # symmetric relation
        for h, d2 in nbrs:
            assert any(dd == d for _, dd in adj[d2])


def test_plan_route_lengths_match_shortest_path_oracle():
    g, H = dll(3, 2)
    dist, idx = _oracle_hops(g)
    dimers = list(idx)
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = rng.choice(len(dimers), size=2, replace=False)
        plan = plan_route(g, H, dimers[a], dimers[b])
        assert len(plan.jumps) == dist[a, b]


def test_plan_route_deterministic_lexicographic_tie_break():
    # two shortest routes exist; the smaller (hub, dimer) moves win
    g, H = dll(2, 2)
    plan = plan_route(g, H, (3, 4), (8, 9))
    hubs = tuple(j.star.center for j in plan.jumps)
    assert hubs == (0, 5)
    assert plan.jumps[0].star.dimer_out == (1, 2)


def test_plan_route_trivial_and_bad_input():
    g, H = dll(1, 1)
    assert plan_route(g, H, (1, 2), (1, 2)).jumps == ()
    with pytest.raises(ValueError, match="lattice dimers"):
        plan_route(g, H, (0, 1), (3, 4))
    with pytest.raises(ValueError, match="variant"):
        plan_route(g, H, (1, 2), (3, 4), variant="teleport")


def test_plan_route_disconnected_raises():
    labels = ("dimer-upper", "dimer-lower", "hub", "dimer-upper",
              "dimer-lower") * 2
    edges = [(0, 2), (1, 2), (2, 3), (2, 4), (5, 7), (6, 7), (7, 8), (7, 9)]
    g = SiteGraph(10, tuple(edges), labels)
    M = np.zeros((10, 10))
    for e in edges:
        M[e] = M[e[::-1]] = J
    np.fill_diagonal(M, V)
    H = TimedHamiltonian(M, {})
    with pytest.raises(ValueError, match="no route"):
        plan_route(g, H, (0, 1), (5, 6))


def test_plan_route_requires_uniform_lattice():
    g, H = dll(1, 1)
    with pytest.raises(ValueError, match="uniform"):
        plan_route(g, H.with_entry((0, 1), 2 * J), (1, 2), (3, 4))


def test_transfer_member_lookup():
    p = transfer_member_for(0.25, 0.5)
    assert (p.k1, p.k2) == (1, 0) and p.T == pytest.approx(2 * np.pi)
    p = transfer_member_for(0.25, -0.5)
    assert (p.k1, p.k2) == (0, 0)
    # detuned lattice: admissible only at a higher winding pair
    p = transfer_member_for(0.25, 0.5 / 3)
    assert p.T > 2 * np.pi
    with pytest.raises(ValueError, match="no flip-transfer"):
        transfer_member_for(0.25, 0.0)  # parity obstruction at v = 0
    with pytest.raises(ValueError, match="no flip-transfer"):
        transfer_member_for(0.3, 0.3)


# ----------------------------------------------------------- scheduling


def test_schedule_disjoint_routes_start_together():
    g, H = dll(3, 3)
    r1 = plan_route(g, H, (1, 2), (6, 7))     # jump at hub 5
    r2 = plan_route(g, H, (31, 32), (36, 37))  # jump at hub 35
    tl = schedule_multi([r1, r2])
    assert tl.starts == (0.0, 0.0)
    verify_timeline(tl)


def test_schedule_shared_star_delays_second_request():
    g, H = dll(3, 3)
    r1 = plan_route(g, H, (16, 17), (21, 22))  # hub 20, horizontal
    r2 = plan_route(g, H, (8, 9), (23, 24))    # hub 20, vertical
    tl = schedule_multi([r1, r2])
    assert tl.starts[0] == 0.0
    assert tl.starts[1] == r1.jumps[0].duration
    verify_timeline(tl)
    # priority follows request order
    tl2 = schedule_multi([r2, r1])
    assert tl2.starts == (0.0, r2.jumps[0].duration)


def test_schedule_overlap_only_where_stars_differ():
    g, H = dll(3, 3)
    r1 = plan_route(g, H, (16, 17), (26, 27))  # hubs 20 then 25
    r2 = plan_route(g, H, (8, 9), (23, 24))    # hub 20 only
    tl = schedule_multi([r1, r2])
    # second route waits for hub 20 to free, then runs concurrently
    # with the first route's second jump at hub 25
    assert tl.starts[1] == r1.jumps[0].duration
    assert tl.starts[1] < r1.duration
    verify_timeline(tl)


def test_verify_timeline_rejects_double_booked_star():
    g, H = dll(3, 3)
    r = plan_route(g, H, (16, 17), (21, 22))
    tl = Timeline(routes=(r, r), starts=(0.0, 0.0),
                  busy=(r.busy_relative(), r.busy_relative()))
    with pytest.raises(ValueError, match="both occupy star 20"):
        verify_timeline(tl)


def test_route_plan_rejects_broken_chain():
    g, H = dll(3, 1)
    r = plan_route(g, H, (1, 2), (6, 7))
    with pytest.raises(ValueError, match="chain"):
        RoutePlan(r.jumps, (1, 2), (11, 12))
    with pytest.raises(ValueError, match="chain"):
        RoutePlan(r.jumps, (3, 4), (6, 7))


# ----------------------------------------------------------- simulation


def test_single_jump_transfer_on_smallest_lattice():
    g, H = dll(1, 1)
    for variant in ("phase-flip-transfer", "hopping-flip-transfer"):
        plan = plan_route(g, H, (1, 2), (3, 4), variant=variant)
        assert len(plan.jumps) == 1
        tl = schedule_multi([plan])
        report = simulate_route(g, H, tl)
        assert report.fidelities[0] >= 1.0 - 1e-10
        assert report.norm_drift <= 1e-10


def test_timeline_schedule_restores_base_hamiltonian():
    g, H = dll(2, 1)
    plan = plan_route(g, H, (1, 2), (6, 7), variant="hopping-flip-transfer")
    tl = schedule_multi([plan])
    s = timeline_schedule(g, H, tl)
    assert np.allclose(end_hamiltonian(s), H.base, atol=1e-12)
    assert s.t_final == pytest.approx(plan.duration)


def test_two_jump_route_passes_through_intermediate_dimer():
    g, H = dll(3, 1)
    plan = plan_route(g, H, (1, 2), (11, 12))
    assert len(plan.jumps) == 2
    tl = schedule_multi([plan])
    report = simulate_route(g, H, tl)
    assert report.fidelities[0] >= 1.0 - 1e-9
    times, fids = zip(*report.per_jump[0])
    assert times == pytest.approx((plan.jumps[0].duration, plan.duration))
    assert all(f >= 1.0 - 1e-9 for f in fids)


def test_crossing_routes_share_star_at_distinct_times():
    g, H = dll(3, 3)
    r1 = plan_route(g, H, (16, 17), (26, 27))  # east through 20, 25
    r2 = plan_route(g, H, (8, 9), (23, 24))    # north through 20
    tl = schedule_multi([r1, r2])
    report = simulate_route(g, H, tl)
    assert all(f >= 1.0 - 1e-8 for f in report.fidelities)
    assert report.norm_drift <= 1e-10


def test_concurrent_disjoint_routes_keep_unit_fidelity():
    g, H = dll(2, 1)
    r1 = plan_route(g, H, (1, 2), (6, 7))
    r2 = plan_route(g, H, (3, 4), (3, 4))  # parked state, zero jumps
    tl = schedule_multi([r1, r2])
    report = simulate_route(g, H, tl)
    assert report.fidelities[0] >= 1.0 - 1e-10
    assert report.fidelities[1] >= 1.0 - 1e-10


def test_empty_timeline_report():
    g, H = dll(1, 1)
    plan = plan_route(g, H, (1, 2), (1, 2))
    report = simulate_route(g, H, schedule_multi([plan]))
    assert abs(report.fidelities[0] - 1.0) < 1e-12
    assert report.per_jump == ((),)


def test_simulation_is_deterministic():
    g, H = dll(1, 1)
    plan = plan_route(g, H, (1, 2), (3, 4))
    tl = schedule_multi([plan])
    a = simulate_route(g, H, tl)
    b = simulate_route(g, H, tl)
    assert np.array_equal(a.final_states[0], b.final_states[0])
    assert a.fidelities == b.fidelities


def test_jump_duration_and_busy_accounting():
    g, H = dll(2, 1)
    plan = plan_route(g, H, (1, 2), (6, 7), dt=0.5)
    (center, b0, b1), = plan.busy_relative()
    assert center == 5
    assert b0 == 0.0
    assert b1 == pytest.approx(1.0 + 2 * np.pi)
    assert plan.duration == b1
