import dataclasses

import numpy as np
import pytest

import oracle
from kssav.assembly import assemble_operators
from kssav.diagnostics import (
    FLAG_COND_DIFF,
    FLAG_PECLET,
    StabilityReport,
    discrete_energy,
    dissipation,
    energy_decay_ok,
    mass,
    stability_conditions,
)
from kssav.mesh import build_interval_mesh, build_rect_mesh, compute_metrics
from kssav.model import ModelParams
from kssav.stepper import State, build_c_operator, compute_mu1, compute_mu2, step

P = ModelParams()


def test_energy_only_sav_term():
    ops = assemble_operators(build_interval_mesh(0, 1, 10))
    s = State(np.zeros(11), np.zeros(11), 1.3)
    assert discrete_energy(s, ops, P) == pytest.approx(P.B * 1.3**2, rel=1e-15)


def test_energy_uniform():
    ops = assemble_operators(build_interval_mesh(0, 1, 10))
    ub, cb, r = 0.4, 0.8, 0.9
    s = State(np.full(11, ub), np.full(11, cb), r)
    expected = 0.5 * P.alpha * cb**2 + P.B * r**2 - cb * ub
    assert discrete_energy(s, ops, P) == pytest.approx(expected, rel=1e-13)


def test_energy_permutation_invariant():
    mesh = build_interval_mesh(0, 2, 6)
    ops = assemble_operators(mesh)
    rng = np.random.default_rng(0)
    u, c = rng.uniform(0, 1, 7), rng.uniform(0, 1, 7)
    perm = rng.permutation(7)
    K = ops.K.toarray()[np.ix_(perm, perm)]
    permuted = type(ops)(M=ops.M, M_l=ops.M_l[perm], K=K, assembler=ops.assembler)
    a = discrete_energy(State(u, c, 1.0), ops, P)
    b = discrete_energy(State(u[perm], c[perm], 1.0), permuted, P)
    assert a == pytest.approx(b, rel=1e-13)


def test_energy_matches_oracle():
    mesh = build_interval_mesh(0, 1, 4)
    ops = assemble_operators(mesh)
    rng = np.random.default_rng(3)
    u, c = rng.uniform(0, 1, 5), rng.uniform(0, 2, 5)
    p = ModelParams(delta=2.0)
    assert discrete_energy(State(u, c, 0.7), ops, p) == pytest.approx(
        oracle.energy(mesh.x(), u, c, 0.7, dataclasses.asdict(p)), rel=1e-13
    )


def test_mass_values():
    ops = assemble_operators(build_interval_mesh(0, 10, 100))
    assert mass(np.full(101, 0.5), ops.M_l) == pytest.approx(5.0, rel=1e-14)
    assert mass(np.zeros(101), ops.M_l) == 0.0
    rng = np.random.default_rng(1)
    u = rng.uniform(0, 1, 101)
    perm = rng.permutation(101)
    assert mass(u[perm], ops.M_l[perm]) == pytest.approx(mass(u, ops.M_l), rel=1e-14)


class TestDissipation:
    def _one_step(self, mesh, u, c, r, params=P, dt=1e-3):
        ops = assemble_operators(mesh)
        cop = build_c_operator(ops, params, dt)
        s0 = State(u, c, r)
        res = step(s0, mesh, ops, cop, params, dt)
        mu1 = compute_mu1(res.state, s0, res.s, params)
        mu2 = compute_mu2(res.state, s0, ops, params, dt)
        return ops, s0, res, dissipation(res.state, mu1, mu2, res.A, ops, params)

    def test_steady_is_zero(self):
        n = 6
        ops, _, _, d = self._one_step(build_interval_mesh(0, 1, n - 1), np.full(n, 0.5), np.full(n, 1.0), 1.0)
        assert d == pytest.approx(0.0, abs=1e-20)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_oracle_and_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        mesh = build_interval_mesh(0, 1, 2)
        u, c = rng.uniform(0.1, 0.9, 3), rng.uniform(0, 2, 3)
        r = 1.0
        p = ModelParams(delta=1.5, tau=0.2)
        ops, s0, res, d = self._one_step(mesh, u, c, r, p)
        ref = oracle.step(mesh.x(), u, c, r, dataclasses.asdict(p), 1e-3)
        assert d >= -1e-14
        assert d == pytest.approx(ref["diss"], rel=1e-9)

    @pytest.mark.parametrize("mesh", [build_interval_mesh(0, 10, 50), build_rect_mesh(2, 2, 6, 6)])
    def test_energy_inequality(self, mesh):
        rng = np.random.default_rng(8)
        n = mesh.n_nodes
        ops = assemble_operators(mesh)
        for dt in (1e-4, 1e-2, 1.0):
            cop = build_c_operator(ops, P, dt)
            s0 = State(rng.uniform(0.1, 0.9, n), rng.uniform(0, 2, n), 2.0)
            res = step(s0, mesh, ops, cop, P, dt)
            mu1 = compute_mu1(res.state, s0, res.s, P)
            mu2 = compute_mu2(res.state, s0, ops, P, dt)
            d = dissipation(res.state, mu1, mu2, res.A, ops, P)
            E0 = discrete_energy(s0, ops, P)
            E1 = discrete_energy(res.state, ops, P)
            assert d >= 0
            assert energy_decay_ok(E0, E1, dt, d)


class TestStability:
    def test_uniform_c(self):
        mesh = build_interval_mesh(0, 10, 100)
        ops = assemble_operators(mesh)
        s = State(np.full(101, 0.5), np.full(101, 1.0), 1.0)
        A = ops.assembler.mobility_stiffness(s.u)
        rep = stability_conditions(s, compute_metrics(mesh), A, P, 1e-3)
        assert rep.b_inf == 0.0 and rep.cond_pos == 0.0

    def test_published_peclet(self):
        mesh = build_interval_mesh(0, 10, 100)
        ops = assemble_operators(mesh)
        s = State(np.full(101, 0.5), np.zeros(101), 1.0)
        rep = stability_conditions(s, compute_metrics(mesh), ops.assembler.mobility_stiffness(s.u), P, 1e-3)
        assert rep.peclet == pytest.approx(2.0, rel=1e-12)
        assert rep.flags() & FLAG_PECLET and not rep.peclet_ok

    def test_linear_in_dt(self):
        mesh = build_rect_mesh(1, 1, 4, 4)
        ops = assemble_operators(mesh)
        rng = np.random.default_rng(2)
        s = State(rng.uniform(0, 1, 25), rng.uniform(0, 1, 25), 1.2)
        A = ops.assembler.mobility_stiffness(s.u)
        m = compute_metrics(mesh)
        a = stability_conditions(s, m, A, P, 1e-3, r_next=1.1, sqrt_E1=1.0)
        b = stability_conditions(s, m, A, P, 2e-3, r_next=1.1, sqrt_E1=1.0)
        assert b.cond_diff == pytest.approx(2 * a.cond_diff, rel=1e-14)
        assert b.cond_pos == pytest.approx(2 * a.cond_pos, rel=1e-14)
        assert a.b_inf > 0

    def test_b_inf_by_hand(self):
        mesh = build_interval_mesh(0, 1, 2)
        ops = assemble_operators(mesh)
        s = State(np.full(3, 0.5), np.array([0.0, 1.0, 3.0]), 1.0)
        A = ops.assembler.mobility_stiffness(s.u)
        rep = stability_conditions(s, compute_metrics(mesh), A, P, 1e-3)
        # |A_12| = 0.25 / 0.5, jump 2
        assert rep.b_inf == pytest.approx(1.0)

    def test_flags(self):
        assert StabilityReport(0.5, 0.0, 0.1, 2.0).flags() == FLAG_COND_DIFF
        assert StabilityReport(0.5, 0.0, 0.1, 0.2).all_ok
