from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from goldfish.dynamics import (
    CoefficientState,
    CollisionError,
    MatrixFlowState,
    ModelSpec,
    ParticleState,
    System,
    build_matrix_initial_data,
    detect_period,
    eigenvalue_paths,
    eval_rhs,
    pde_residual,
    residual_ansatz_offdiag,
    residual_boundary_row,
    residual_coupling_identity,
    residual_quartic_n2,
    residual_rank_one,
    residual_velocity_diagonal,
    simulate,
    structural_residuals,
    trick_tau,
    trick_transform,
    trick_transform_state,
)
from goldfish.linalg import Trajectory, eigenvalues, permutation_order


def multiset_dev(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def trajectory_multiset_dev(r1, r2):
    return max(multiset_dev(a, b) for a, b in zip(r1.values, r2.values))


def random_state(rng, n, scale=0.4):
    return ParticleState(
        scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)),
        scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)),
    )


# ---------------------------------------------------------------------------
# eval_rhs


def test_rhs_single_body_no_pairs():
    spec = ModelSpec(System.GOLD, 1)
    out = eval_rhs(spec, ParticleState([1.0], [0.0]))
    assert np.allclose(out, [2.0])


def test_rhs_two_body_hand_value():
    spec = ModelSpec(System.GOLD, 2)
    out = eval_rhs(spec, ParticleState([1.0, -1.0], [0.0, 0.0]))
    assert np.allclose(out, [3.0, -3.0])


def test_rhs_coefficient_equilibrium():
    a2 = 0.37 + 0.21j
    spec = ModelSpec(System.ALTGOLD, 2, a2=a2)
    out = eval_rhs(spec, CoefficientState([0.0, -a2], [0.0, 0.0]))
    assert np.max(np.abs(out)) < 1e-14


def test_rhs_collision_detected():
    spec = ModelSpec(System.GOLD, 2)
    with pytest.raises(CollisionError):
        eval_rhs(spec, ParticleState([1.0, 1.0 + 1e-12], [0.0, 0.0]))


def test_rhs_shape_mismatch():
    spec = ModelSpec(System.GOLD, 3)
    with pytest.raises(ValueError):
        eval_rhs(spec, ParticleState([1.0, 2.0], [0.0, 0.0]))


# ---------------------------------------------------------------------------
# matrix initial data


def test_matrix_init_hand_value():
    spec = ModelSpec(System.GOLD, 2)
    init = build_matrix_initial_data(spec, ParticleState([1.0, -1.0], [0.0, 0.0]))
    assert np.allclose(init.U, np.diag([1.0, -1.0]))
    assert np.allclose(init.Udot, [[0.0, 1.0], [1.0, 0.0]])


def test_matrix_init_single_body_collapses():
    spec = ModelSpec(System.GOLD, 1, a2=0.3)
    init = build_matrix_initial_data(spec, ParticleState([0.5 + 0.1j], [0.2 - 0.3j]))
    assert np.allclose(init.Udot, [[0.2 - 0.3j]])


def test_matrix_init_sign_flip_is_similarity():
    rng = np.random.default_rng(9)
    spec = ModelSpec(System.GOLD, 3, a2=-0.5)
    state = random_state(rng, 3, scale=1.0)
    init = build_matrix_initial_data(spec, state)
    flip = np.diag([1.0, -1.0, 1.0])
    t = np.linspace(0, 0.8, 9)
    mspec = ModelSpec(System.MATRIX_U, 3, a2=-0.5)
    r1 = simulate(mspec, init, t, tol=1e-12)
    r2 = simulate(mspec, MatrixFlowState(init.U, flip @ init.Udot @ flip), t, tol=1e-12)
    for row1, row2 in zip(r1.trajectory.states, r2.trajectory.states):
        e1 = eigenvalues(row1[:9].reshape(3, 3))
        e2 = eigenvalues(row2[:9].reshape(3, 3))
        assert multiset_dev(e1, e2) < 1e-9


def test_matrix_init_velocity_diagonal():
    rng = np.random.default_rng(21)
    spec = ModelSpec(System.GOLD, 3, a2=0.2 + 0.1j)
    state = random_state(rng, 3, scale=1.0)
    init = build_matrix_initial_data(spec, state)
    assert residual_velocity_diagonal(init.U, init.Udot, state.z, state.zdot) < 1e-12


# ---------------------------------------------------------------------------
# simulate: direct vs spectral oracles


def test_pole_closed_form():
    spec = ModelSpec(System.GOLD, 1)
    res = simulate(spec, ParticleState([1.0], [1.0]), [0.0, 0.5], tol=1e-12)
    assert abs(res.values[-1, 0] - 2.0) < 1e-8


def test_rcm_single_body_quarter_period():
    spec = ModelSpec(System.RCM, 1)
    z0, v0 = 0.3 + 0.2j, 0.7 - 0.1j
    res = simulate(spec, ParticleState([z0], [v0]), [0.0, np.pi / 2], "spectral")
    assert abs(res.values[-1, 0] - v0) < 1e-14


def test_gold_direct_vs_spectral():
    rng = np.random.default_rng(2)
    spec = ModelSpec(System.GOLD, 2, a2=-1.0)
    state = random_state(rng, 2)
    t = np.linspace(0, 1, 11)
    d = simulate(spec, state, t, "direct", tol=1e-12)
    s = simulate(spec, state, t, "spectral", tol=1e-12)
    assert trajectory_multiset_dev(d, s) < 1e-8


def test_coefficient_spectral_matches_direct():
    rng = np.random.default_rng(4)
    for system, a2 in ((System.ALTGOLD, 0.3 - 0.2j), (System.ALTISOGOLD, 0.0)):
        spec = ModelSpec(system, 3, a2=a2)
        c0 = 0.25 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        cd0 = 0.25 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        t = np.linspace(0, 1, 9)
        d = simulate(spec, CoefficientState(c0, cd0), t, "direct", tol=1e-12)
        s = simulate(spec, CoefficientState(c0, cd0), t, "spectral", tol=1e-12)
        assert np.max(np.abs(d.trajectory.states - s.trajectory.states)) < 1e-7


def test_veselov_direct_vs_spectral():
    spec = ModelSpec(System.VESELOV, 2, g=0.4, phi_poly=(0.0, 0.0, 1.0))
    state = ParticleState([0.8 + 0.2j, -0.6 - 0.4j], [0.1 - 0.1j, 0.2 + 0.3j])
    t = np.linspace(0, 0.7, 8)
    d = simulate(spec, state, t, "direct", tol=1e-12)
    s = simulate(spec, state, t, "spectral", tol=1e-12)
    assert trajectory_multiset_dev(d, s) < 1e-9


def test_rcm_direct_vs_closed_form():
    spec = ModelSpec(System.RCM, 2, g=0.3)
    state = ParticleState([0.8 + 0.2j, -0.6 - 0.4j], [0.1 - 0.1j, 0.2 + 0.3j])
    t = np.linspace(0, 0.7, 8)
    d = simulate(spec, state, t, "direct", tol=1e-12)
    s = simulate(spec, state, t, "spectral")
    assert trajectory_multiset_dev(d, s) < 1e-9


def test_general_gold_reduction_invariance():
    # the shifted and time-rescaled general model reproduces the reduced one
    rng = np.random.default_rng(8)
    alpha, beta, gamma = 0.3 - 0.2j, 0.4 + 0.1j, 2.0
    spec_g = ModelSpec(System.GENERAL_GOLD, 2, alpha=alpha, beta=beta, gamma=gamma)
    state = random_state(rng, 2)
    t = np.linspace(0, 0.7, 8)
    rg = simulate(spec_g, state, t, tol=1e-12)
    alpha_red = (alpha - beta ** 2 / (4 * gamma)) / gamma
    spec_r = ModelSpec(System.GENERAL_GOLD, 2, alpha=alpha_red, beta=0.0, gamma=1.0)
    shifted = ParticleState(state.z + beta / (2 * gamma), state.zdot / gamma)
    rr = simulate(spec_r, shifted, t * gamma, tol=1e-12)
    assert np.max(np.abs(rg.values + beta / (2 * gamma) - rr.values)) < 1e-7


def test_spectral_velocities_match_direct():
    rng = np.random.default_rng(5)
    spec = ModelSpec(System.GOLD, 3, a2=0.2 + 0.1j)
    state = random_state(rng, 3, scale=1.0)
    t = np.linspace(0, 0.4, 5)
    d = simulate(spec, state, t, "direct", tol=1e-12)
    s = simulate(spec, state, t, "spectral", tol=1e-12)
    for j in range(len(t)):
        cost = np.abs(d.values[j][:, None] - s.values[j][None, :])
        rows, cols = linear_sum_assignment(cost)
        assert float(np.max(cost[rows, cols])) < 1e-9
        assert np.max(np.abs(d.velocities[j][rows] - s.velocities[j][cols])) < 1e-8


# ---------------------------------------------------------------------------
# the exponential time substitution


def test_trick_path_endpoints():
    assert abs(trick_tau(0.0)) < 1e-15
    assert abs(trick_tau(2 * np.pi)) < 1e-12


def test_trick_zero_maps_to_zero():
    t = np.linspace(0, 3, 7)
    zero = Trajectory(t, np.zeros((7, 4), dtype=complex))
    out = trick_transform("forward", zero, "particle")
    assert np.all(out.states == 0)


def test_trick_forward_backward_inverse():
    rng = np.random.default_rng(6)
    q = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    qd = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    for kind in ("particle", "coefficient"):
        val, vel = trick_transform_state("forward", q, qd, kind, 0.7)
        back_q, back_qd = trick_transform_state("backward", val, vel, kind, 0.7)
        assert np.max(np.abs(back_q - q)) < 1e-13
        assert np.max(np.abs(back_qd - qd)) < 1e-13


def test_trick_matrix_flow_consistency():
    # the isochronous matrix flow equals the transported rational-time flow
    rng = np.random.default_rng(10)
    z0 = 0.3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    v0 = 0.3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    init_iso = build_matrix_initial_data(ModelSpec(System.ISOGOLD, 2), ParticleState(z0, v0))
    q0, qd0 = trick_transform_state("backward", z0, v0, "particle", 0.0)
    init_tau = build_matrix_initial_data(
        ModelSpec(System.GOLD, 2, a2=0.0), ParticleState(q0, qd0)
    )
    t = np.linspace(0, 2, 9)
    tau_run = simulate(
        ModelSpec(System.MATRIX_U, 2, a2=0.0), init_tau, t, tol=1e-12, time_path="trick"
    )
    iso_run = simulate(ModelSpec(System.MATRIX_UTILDE, 2), init_iso, t, tol=1e-12)
    forwarded = trick_transform("forward", tau_run.trajectory, "matrix")
    assert np.max(np.abs(forwarded.states - iso_run.trajectory.states)) < 1e-7


def test_trick_coefficient_transport_satisfies_dynamics():
    rng = np.random.default_rng(12)
    n = 3
    ct0 = 0.1 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    ctd0 = 0.1 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    g0, gd0 = trick_transform_state("backward", ct0, ctd0, "coefficient", 0.0)
    t = np.linspace(0, 1.0, 201)
    tau_run = simulate(
        ModelSpec(System.GAMMATAU, n),
        CoefficientState(g0, gd0),
        t,
        tol=1e-13,
        time_path="trick",
    )
    forwarded = trick_transform("forward", tau_run.trajectory, "coefficient")
    spec_iso = ModelSpec(System.ALTISOGOLD, n)
    # residual oracle: five-point second difference against the stated dynamics
    h = t[1] - t[0]
    cs, cds = forwarded.states[:, :n], forwarded.states[:, n:]
    worst = 0.0
    for j in range(2, len(t) - 2):
        fd = (-cs[j - 2] + 16 * cs[j - 1] - 30 * cs[j] + 16 * cs[j + 1] - cs[j + 2]) / (
            12 * h * h
        )
        rhs = eval_rhs(spec_iso, CoefficientState(cs[j], cds[j]))
        worst = max(worst, float(np.max(np.abs(fd - rhs))))
    assert worst < 1e-7


# ---------------------------------------------------------------------------
# periodicity


def test_detect_period_constant():
    k = 8
    t = np.arange(2 * k + 1) * (2 * np.pi / k)
    traj = Trajectory(t, np.ones((t.size, 4), dtype=complex))
    rep = detect_period(traj, "particle", p_max=1, tol=1e-12)
    assert rep.p == 1 and rep.deviation == 0.0


def test_detect_period_synthetic_swap():
    k = 16
    t = np.arange(3 * k + 1) * (2 * np.pi / k)
    zs = np.array([[np.exp(0.5j * tt), -np.exp(0.5j * tt)] for tt in t])
    vs = 0.5j * zs * np.array([1, -1])[None, :] ** 0  # d/dt of each column
    vs = np.array([[0.5j * np.exp(0.5j * tt), -0.5j * np.exp(0.5j * tt)] for tt in t])
    traj = Trajectory(t, np.hstack([zs, vs]))
    rep = detect_period(traj, "particle", p_max=3, tol=1e-9)
    assert rep.p == 2


def test_detect_period_too_short():
    k = 8
    t = np.arange(k + 1) * (2 * np.pi / k)
    traj = Trajectory(t, np.ones((t.size, 2), dtype=complex))
    with pytest.raises(ValueError):
        detect_period(traj, "particle", p_max=2, tol=1e-9)


def test_isochronous_small_system_period():
    rng = np.random.default_rng(14)
    spec = ModelSpec(System.ISOGOLD, 2)
    state = random_state(rng, 2, scale=0.15)
    k = 32
    t = np.arange(3 * k + 1) * (2 * np.pi / k)
    res = simulate(spec, state, t, tol=1e-11)
    rep = detect_period(res.trajectory, "particle", p_max=2, tol=1e-6)
    assert rep.p is not None and rep.p <= 2


def test_matrix_flow_monodromy_order():
    rng = np.random.default_rng(15)
    z0 = 0.25 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    v0 = 0.25 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    init = build_matrix_initial_data(ModelSpec(System.ISOGOLD, 2), ParticleState(z0, v0))
    t = np.linspace(0, 2 * np.pi, 257)
    run = simulate(ModelSpec(System.MATRIX_UTILDE, 2), init, t, tol=1e-11)
    paths = eigenvalue_paths(run)
    assert permutation_order(paths.monodromy) in (1, 2)


# ---------------------------------------------------------------------------
# generating-polynomial residuals


def test_pde_residual_static_equilibrium():
    from goldfish.equilibria import enumerate_iso_equilibria

    rng = np.random.default_rng(16)
    cfg = [c for c in enumerate_iso_equilibria(3) if (c.nu, c.mu) == (1, 2)][0]
    c = np.array([complex(x) for x in cfg.cbar])
    t = np.linspace(0, 1, 7)
    states = np.tile(np.concatenate([c, np.zeros(3)]), (7, 1))
    traj = Trajectory(t, states)
    zs = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    assert pde_residual(traj, ModelSpec(System.ALTISOGOLD, 3), zs) < 1e-10


def test_pde_residual_along_trajectories():
    rng = np.random.default_rng(12)
    zs = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    for system, a2 in ((System.ALTGOLD, 0.4 + 0.3j), (System.ALTISOGOLD, 0.0)):
        spec = ModelSpec(system, 3, a2=a2)
        c0 = 0.15 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        cd0 = 0.15 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        t = np.linspace(0, 1, 251)
        res = simulate(spec, CoefficientState(c0, cd0), t, tol=1e-12)
        assert pde_residual(res.trajectory, spec, zs) < 1e-6


def test_pde_residual_single_body_reduction():
    # for one body the polynomial-form residual equals the equation-of-motion
    # residual, independently of the probe point
    z1, v1 = 0.4 + 0.2j, -0.3 + 0.5j
    acc = 0.9 - 0.4j  # deliberately NOT the dynamics' acceleration
    a2 = 0.2 + 0.1j
    spec = ModelSpec(System.ALTGOLD, 1, a2=a2)
    h = 1e-2
    t = np.arange(5) * h - 2 * h
    t = t - t[0]
    rows = []
    for tt in np.arange(5) * h - 2 * h:
        z = z1 + v1 * tt + 0.5 * acc * tt * tt
        v = v1 + acc * tt
        rows.append([-z, -v])
    traj = Trajectory(np.arange(5) * h, np.array(rows))
    gold_residual = abs(acc - (2 * z1 * (z1 ** 2 - a2)))
    got = pde_residual(traj, spec, [0.7 - 0.3j, 1.1 + 0.9j])
    assert abs(got - gold_residual) < 1e-6


# ---------------------------------------------------------------------------
# structural identities


def test_quartic_constant_equilibrium_state():
    a2 = 0.6 - 0.1j
    c = np.array([0.0, -a2, 0.0, 0.0])  # equilibrium: all chained derivatives vanish
    traj = Trajectory(np.arange(3.0), np.tile(c, (3, 1)))
    assert residual_quartic_n2(traj, a2) < 1e-14


def test_quartic_along_trajectory():
    spec = ModelSpec(System.ALTGOLD, 2, a2=0.7 - 0.2j)
    state = CoefficientState([0.4 + 0.1j, -0.3 + 0.2j], [0.1 - 0.2j, 0.2 + 0.1j])
    res = simulate(spec, state, np.linspace(0, 1, 41), tol=1e-12)
    assert residual_quartic_n2(res.trajectory, spec.a2) < 1e-10


def test_coupling_identity_exact_pair():
    a2 = 0.8 + 0.3j
    r = residual_coupling_identity(-a2, 0.0, 1.0, [(1.0, 1j)])
    assert r < 1e-15


def test_rank_one_minors_vanish():
    rng = np.random.default_rng(18)
    spec = ModelSpec(System.GOLD, 4, a2=1 + 1j)
    state = random_state(rng, 4, scale=1.0)
    assert residual_rank_one(spec, state) < 1e-10


def test_ansatz_offdiag_identity():
    rng = np.random.default_rng(19)
    spec = ModelSpec(System.GOLD, 3, a2=1 + 1j)
    state = random_state(rng, 3, scale=1.0)
    res = simulate(spec, state, np.linspace(0, 0.4, 21), tol=1e-12)
    assert residual_ansatz_offdiag(spec, res.trajectory) < 1e-6


def test_boundary_row_vanishes():
    rng = np.random.default_rng(20)
    spec = ModelSpec(System.ALTGOLD, 4, a2=0.3 - 0.8j)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    cd = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert residual_boundary_row(spec, CoefficientState(c, cd)) < 1e-13


def test_structural_dispatcher():
    a2 = 0.6 - 0.1j
    c = np.array([0.0, -a2, 0.0, 0.0])
    traj = Trajectory(np.arange(3.0), np.tile(c, (3, 1)))
    rep = structural_residuals("quartic_n2", traj=traj, a2=a2)
    assert rep.kind == "QUARTIC_N2" and rep.max_abs < 1e-14
    with pytest.raises(ValueError):
        structural_residuals("nope")


# ---------------------------------------------------------------------------
# coefficients of the spectral determinant obey the coefficient dynamics


def test_spectral_coefficients_satisfy_dynamics():
    rng = np.random.default_rng(22)
    spec = ModelSpec(System.ALTGOLD, 3, a2=-0.4 + 0.2j)
    c0 = 0.1 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
    cd0 = 0.1 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
    t = np.linspace(0, 1, 201)
    res = simulate(spec, CoefficientState(c0, cd0), t, "spectral", tol=1e-12)
    h = t[1] - t[0]
    cs, cds = res.values, res.velocities
    worst = 0.0
    for j in range(2, len(t) - 2, 10):
        fd = (-cs[j - 2] + 16 * cs[j - 1] - 30 * cs[j] + 16 * cs[j + 1] - cs[j + 2]) / (
            12 * h * h
        )
        rhs = eval_rhs(spec, CoefficientState(cs[j], cds[j]))
        worst = max(worst, float(np.max(np.abs(fd - rhs))))
    assert worst < 1e-6
