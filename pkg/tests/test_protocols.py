import numpy as np
import pytest
from numpy.testing import assert_allclose

from clsnet.evolve import (
    ProtocolSchedule,
    end_hamiltonian,
    evolve_static,
    fidelity,
    run_schedule,
)
from clsnet.lattice import build_star, evaluate_at
from clsnet.protocols import (
    GenerationParams,
    TransferParams,
    build_schedule,
    cls_state,
    fastest_transfer_params,
    hopping_flip,
    phase_flip,
    solve_generation_params,
    solve_seven_transfer_params,
    solve_transfer_params,
    target_locally_symmetric,
)

ROOT2 = np.sqrt(2.0)


# ---------------------------------------------------------------- params


def test_transfer_params_reference_point():
    p = solve_transfer_params(1, 0, 0.25)
    assert_allclose(p.v, 0.5, atol=1e-15)
    assert_allclose(p.T, 2 * np.pi, rtol=1e-15)


def test_transfer_params_negative_potential_member():
    p = solve_transfer_params(0, 0, 0.25)
    assert_allclose(p.v, -0.5, atol=1e-15)
    assert_allclose(p.T, 2 * np.pi, rtol=1e-15)


def test_transfer_params_slow_member():
    p = solve_transfer_params(2, 1, 0.25)
    assert_allclose(p.v, 1.0 / 6.0, rtol=1e-15)
    assert_allclose(p.T, 6 * np.pi, rtol=1e-15)


def test_transfer_params_rejects_negative_duration():
    with pytest.raises(ValueError):
        solve_transfer_params(1, -1, 0.25)


def test_transfer_params_rejects_non_integer_index():
    with pytest.raises(ValueError):
        solve_transfer_params(0.5, 0, 0.25)


def test_transfer_params_consistency_guard():
    with pytest.raises(ValueError):
        TransferParams(v=0.3, T=2 * np.pi, k1=1, k2=0, J=0.25)


def test_fastest_transfer_prefers_short_time_then_small_potential():
    p = fastest_transfer_params(0.25)
    assert_allclose(p.T, np.pi / (2 * 0.25), rtol=1e-15)
    assert p.k2 == 0
    assert abs(p.v) <= 2 * 0.25 + 1e-15


def test_generation_params_reference_point():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    assert_allclose(p.v, 0.5, rtol=1e-15)
    assert_allclose(p.T, np.pi, rtol=1e-15)


def test_generation_params_branch_one():
    p = solve_generation_params(1, 1, 0, 1.0)
    assert_allclose(p.v, 3 * ROOT2, rtol=1e-15)
    assert_allclose(p.T, 3 * np.pi / (2 * p.v), rtol=1e-15)


def test_generation_params_scale_with_coupling():
    a = solve_generation_params(1, 1, 0, 1.0)
    b = solve_generation_params(1, 1, 0, 2.0)
    assert_allclose(b.v, 2 * a.v, rtol=1e-15)
    assert_allclose(b.T, a.T / 2, rtol=1e-15)


def test_generation_params_rejects_zero_coupling():
    with pytest.raises(ValueError):
        solve_generation_params(2, 0, 1, 0.0)


def test_generation_params_rejects_unknown_branch():
    with pytest.raises(ValueError):
        solve_generation_params(3, 0, 1, 1.0)


def test_generation_params_consistency_guard():
    with pytest.raises(ValueError):
        GenerationParams(branch=2, k1p=0, k2p=1, Jp=1.0, v=0.5, T=np.pi)


# ----------------------------------------------------------------- flips


def test_phase_flip_converts_antisymmetric_to_symmetric():
    psi = phase_flip(cls_state("star", "I"), 1)
    assert_allclose(psi, cls_state("star", "L"), atol=1e-15)


def test_phase_flip_is_involution():
    rng = np.random.default_rng(7)
    psi = rng.normal(size=5) + 1j * rng.normal(size=5)
    assert_allclose(phase_flip(phase_flip(psi, 3), 3), psi, atol=0)


def test_phase_flip_leaves_other_amplitudes():
    psi = phase_flip(cls_state("star", "I"), 4)
    assert_allclose(psi, cls_state("star", "I"), atol=1e-15)


def test_phase_flip_rejects_bad_site():
    with pytest.raises(IndexError):
        phase_flip(cls_state("star", "I"), 5)


def test_hopping_flip_negates_one_coupling():
    H = build_star(0.25, 0.5)
    Hf = hopping_flip(H, (0, 2))
    assert Hf.base[0, 2] == -0.25
    assert Hf.base[2, 0] == -0.25
    assert H.base[0, 2] == 0.25


def test_hopping_flip_is_involution():
    H = build_star(0.25, 0.5)
    Hf = hopping_flip(hopping_flip(H, (2, 3)), (3, 2))
    assert_allclose(Hf.base, H.base, atol=0)


def test_hopping_flip_pair_preserves_star_spectrum():
    # negating J1 and J3 relabels eigenvectors but not energies
    H = build_star(0.25, 0.5)
    Hf = hopping_flip(hopping_flip(H, (0, 2)), (2, 3))
    assert_allclose(np.linalg.eigvalsh(Hf.base), np.linalg.eigvalsh(H.base),
                    atol=1e-14)
    assert_allclose(sorted(np.linalg.eigvalsh(H.base)),
                    [0.0, 0.5, 0.5, 0.5, 1.0], atol=1e-14)


def test_single_hopping_flip_swaps_dimer_eigenstate():
    # with only J2 negated the symmetric combination decouples instead
    H = hopping_flip(build_star(0.25, 0.5), (1, 2))
    M = H.base
    sym = cls_state("star", "L")
    anti = cls_state("star", "I")
    assert np.linalg.norm(M @ sym - 0.5 * sym) < 1e-14
    assert np.linalg.norm(M @ anti - 0.5 * anti) > 0.3


def test_hopping_flip_rejects_diagonal():
    with pytest.raises(ValueError):
        hopping_flip(build_star(0.25, 0.5), (2, 2))


def test_hopping_flip_rejects_out_of_range():
    with pytest.raises(IndexError):
        hopping_flip(build_star(0.25, 0.5), (0, 7))


# ------------------------------------------------------------- schedules


def _run_fidelity(s, tol=1e-11):
    traj = run_schedule(s, s.initial_state, tol=tol)
    return fidelity(traj.final_state, s.target_state), traj


def test_star_phase_flip_transfer_reaches_unit_fidelity():
    s = build_schedule("star", "phase-flip-transfer",
                       solve_transfer_params(1, 0, 0.25))
    fid, traj = _run_fidelity(s)
    assert fid >= 1 - 1e-12
    assert abs(traj.norm_drift) <= 1e-12


def test_star_transfer_family_grid():
    # every valid index pair in a small grid transfers exactly
    for k1 in range(-2, 4):
        for k2 in range(0, 3):
            s = build_schedule("star", "phase-flip-transfer",
                               solve_transfer_params(k1, k2, 0.25))
            fid, _ = _run_fidelity(s)
            assert fid >= 1 - 1e-12, (k1, k2, fid)


def test_star_hopping_flip_transfer_reaches_unit_fidelity():
    s = build_schedule("star", "hopping-flip-transfer",
                       solve_transfer_params(1, 0, 0.25))
    fid, traj = _run_fidelity(s)
    assert fid >= 1 - 1e-12
    kinds = [ev[1] for ev in traj.events]
    assert kinds.count("hopping-flip") == 4


def test_star_hopping_alternate_pair_option():
    s = build_schedule("star", "hopping-flip-transfer",
                       solve_transfer_params(1, 0, 0.25), pair="J2J4")
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12


def test_star_phase_flip_alternate_sites():
    s = build_schedule("star", "phase-flip-transfer",
                       solve_transfer_params(1, 0, 0.25),
                       in_site=0, out_site=3)
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12


def test_seven_phase_flip_transfer():
    s = build_schedule("seven", "phase-flip-transfer",
                       solve_seven_transfer_params(0, 1.0))
    assert_allclose(s.t_final, np.pi / ROOT2, rtol=1e-15)
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12


def test_seven_hopping_flip_transfer():
    s = build_schedule("seven", "hopping-flip-transfer",
                       solve_seven_transfer_params(0, 1.0))
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12


def test_seven_transfer_with_potential_offset():
    # the seven-site timing works for any uniform potential
    s = build_schedule("seven", "phase-flip-transfer",
                       solve_seven_transfer_params(0, 1.0, v=0.7))
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12


def test_generation_reaches_symmetric_state_before_flip():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    s = build_schedule("star", "generation", p, final_flip=False)
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12
    assert_allclose(s.target_state, cls_state("star", "L"), atol=1e-15)


def test_generation_ends_in_stored_state():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    s = build_schedule("star", "generation", p)
    fid, traj = _run_fidelity(s)
    assert fid >= 1 - 1e-12
    # stored state must be an eigenvector of the final Hamiltonian
    M = end_hamiltonian(s)
    res = M @ traj.final_state - p.v * traj.final_state
    assert np.linalg.norm(res) < 1e-10


def test_reverse_generation_recovers_hub_state():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    s = build_schedule("star", "reverse-generation", p)
    fid, _ = _run_fidelity(s)
    assert fid >= 1 - 1e-12


def test_generation_roundtrip_is_identity():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    rev = build_schedule("star", "reverse-generation", p)
    gen = build_schedule("star", "generation", p)
    mid = run_schedule(rev, cls_state("star", "I"), tol=1e-11).final_state
    out = run_schedule(gen, mid, tol=1e-11).final_state
    assert fidelity(out, cls_state("star", "I")) >= 1 - 1e-12


def test_piecewise_transfer_through_hub():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    s = build_schedule("star", "piecewise-transfer", p)
    assert_allclose(s.t_final, 2 * np.pi, rtol=1e-15)
    fid, traj = _run_fidelity(s)
    assert fid >= 1 - 1e-12
    # the state really passes through the hub at the midpoint
    mid = np.argmin(np.abs(traj.times - np.pi))
    assert abs(traj.states[mid][2]) > 1 - 1e-6


def test_piecewise_halves_match_direct_transfer_time():
    p = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    t = solve_transfer_params(1, 0, 0.25)
    assert_allclose(2 * p.T, t.T, rtol=1e-15)


def test_schedules_end_with_symmetric_target_dimer():
    p = solve_transfer_params(1, 0, 0.25)
    g = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    for s in (
        build_schedule("star", "phase-flip-transfer", p),
        build_schedule("star", "hopping-flip-transfer", p),
        build_schedule("star", "generation", g),
        build_schedule("star", "reverse-generation", g),
        build_schedule("star", "piecewise-transfer", g),
        build_schedule("seven", "phase-flip-transfer",
                       solve_seven_transfer_params(0, 1.0)),
        build_schedule("seven", "hopping-flip-transfer",
                       solve_seven_transfer_params(0, 1.0)),
    ):
        assert target_locally_symmetric(s)


def test_target_symmetry_helper_flags_broken_end():
    p = solve_transfer_params(1, 0, 0.25)
    base = build_star((0.25, 0.25, 0.25, 0.3), p.v)
    from clsnet.evolve import PhaseFlip, Segment

    s = ProtocolSchedule(
        base,
        (PhaseFlip(0.0, 1), Segment(0.0, p.T), PhaseFlip(p.T, 4)),
        initial_state=cls_state("star", "I"),
        target_state=cls_state("star", "F"),
    )
    assert not target_locally_symmetric(s)


def test_build_schedule_rejects_unsupported_combinations():
    g = solve_generation_params(2, 0, 1, 3 * ROOT2 / 4)
    with pytest.raises(ValueError):
        build_schedule("seven", "generation", g)
    with pytest.raises(ValueError):
        build_schedule("star", "generation",
                       solve_transfer_params(1, 0, 0.25))
    with pytest.raises(ValueError):
        build_schedule("star", "phase-flip-transfer", g)
    with pytest.raises(ValueError):
        build_schedule("ring", "phase-flip-transfer",
                       solve_transfer_params(1, 0, 0.25))
    with pytest.raises(ValueError):
        build_schedule("seven", "phase-flip-transfer",
                       solve_transfer_params(1, 0, 0.25))
    with pytest.raises(ValueError):
        build_schedule("star", "warp", solve_transfer_params(1, 0, 0.25))


def test_build_schedule_rejects_unknown_option():
    with pytest.raises(TypeError):
        build_schedule("star", "phase-flip-transfer",
                       solve_transfer_params(1, 0, 0.25), speed="fast")


def test_stored_state_is_stationary_between_flips():
    # before the first flip the antisymmetric state only gains phase
    p = solve_transfer_params(1, 0, 0.25)
    H = build_star(p.J, p.v)
    psi = evolve_static(H, cls_state("star", "I"), 1.3)
    expected = np.exp(-1j * p.v * 1.3) * cls_state("star", "I")
    assert_allclose(psi, expected, atol=1e-13)


def test_cls_state_validation():
    with pytest.raises(ValueError):
        cls_state("star", "Q")
    with pytest.raises(ValueError):
        cls_state("chain", "I")
    assert_allclose(np.linalg.norm(cls_state("seven", "F")), 1.0, rtol=1e-15)
    assert cls_state("seven", "c")[3] == 1.0


def test_evaluate_at_star_base_matches_params():
    p = solve_transfer_params(1, 0, 0.25)
    s = build_schedule("star", "phase-flip-transfer", p)
    M = evaluate_at(s.base, 0.0)
    assert_allclose(np.diag(M), p.v, atol=1e-15)
    assert M[0, 2] == p.J
