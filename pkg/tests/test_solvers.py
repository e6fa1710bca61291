import numpy as np
import pytest

from greenlift.assemble import discretize, kernel_matrix
from greenlift.lifted import AnalyticKernel
from greenlift.problems import (benchmark_helmholtz, interface_problem,
                                variable_coeff_problem)
from greenlift.solvers import (GmresConfig, HybridConfig, IterTrace,
                               damped_jacobi_step, gmres, hybrid_solve,
                               jacobi_iteration_matrix, mode_errors,
                               modes_to_error, pgmres, spectral_condition)


def benchmark_system(n=255):
    spec = benchmark_helmholtz()
    return spec, discretize(spec, n)


def oracle_matrix(spec, system):
    return kernel_matrix(AnalyticKernel(spec.exact_green), system.grid, system.h,
                         spec=spec)


class TestGmres:
    def test_identity_converges_immediately(self):
        U, tr = gmres(np.eye(5), np.arange(1.0, 6.0), GmresConfig(tol=1e-12, max_iter=10))
        assert len(tr.relres) == 1
        assert np.allclose(U, np.arange(1.0, 6.0))

    def test_two_eigenvalues_take_two_iterations(self):
        U, tr = gmres(np.diag([1.0, -1.0]), np.ones(2), GmresConfig(tol=1e-12, max_iter=10))
        assert len(tr.relres) == 2
        assert tr.relres[-1] < 1e-12

    @pytest.mark.parametrize("kind", ["spd", "indefinite"])
    def test_exact_in_n_iterations(self, kind):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((50, 50))
        A = M @ M.T + 50 * np.eye(50) if kind == "spd" else M + M.T
        F = rng.standard_normal(50)
        U, tr = gmres(A, F, GmresConfig(tol=1e-12, max_iter=50))
        assert len(tr.relres) <= 50
        assert np.linalg.norm(F - A @ U) / np.linalg.norm(F) < 1e-10

    def test_residual_monotone(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((40, 40))
        _, tr = gmres(A, rng.standard_normal(40), GmresConfig(tol=1e-14, max_iter=40))
        r = tr.relres
        assert all(r[i + 1] <= r[i] * (1 + 1e-12) for i in range(len(r) - 1))

    def test_benchmark_iteration_count_matches_reported(self):
        spec, system = benchmark_system()
        _, tr = gmres(system, system.F, GmresConfig(tol=1e-3, max_iter=4000))
        assert 100 <= len(tr.relres) <= 200      # reported: 126
        assert tr.relres[-1] <= 1e-3

    def test_restart_still_converges(self):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((30, 30))
        A = M @ M.T + 30 * np.eye(30)
        F = rng.standard_normal(30)
        U, tr = gmres(A, F, GmresConfig(tol=1e-10, max_iter=400, restart=8))
        assert np.linalg.norm(F - A @ U) / np.linalg.norm(F) < 1e-10

    def test_zero_rhs(self):
        U, tr = gmres(np.eye(3), np.zeros(3), GmresConfig(tol=1e-10, max_iter=5))
        assert np.all(U == 0.0) and len(tr.relres) == 0

    def test_error_trace_when_exact_known(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((20, 20)) + 20 * np.eye(20)
        Ustar = rng.standard_normal(20)
        _, tr = gmres(A, A @ Ustar, GmresConfig(tol=1e-12, max_iter=20), exact_U=Ustar)
        assert len(tr.err2) == len(tr.relres)
        assert tr.err2[-1] < 1e-8


class TestPgmres:
    def test_exact_inverse_one_iteration_all_catalog(self):
        for spec in (benchmark_helmholtz(), variable_coeff_problem(), interface_problem()):
            system = discretize(spec, 255)
            Binv = np.linalg.inv(system.dense())
            U, tr = pgmres(system, Binv, system.F, GmresConfig(tol=1e-8, max_iter=10))
            assert len(tr.relres) == 1
            assert np.allclose(U, system.solve_direct(), atol=1e-6)

    def test_oracle_kernel_preconditioner(self):
        spec, system = benchmark_system()
        B = oracle_matrix(spec, system)
        U, tr = pgmres(system, B, system.F, GmresConfig(tol=1.3e-4, max_iter=50))
        assert len(tr.relres) <= 5               # reported: 2
        assert tr.relres[-1] <= 1.3e-4
        assert len(tr.precond_relres) == len(tr.relres)

    def test_shape_mismatch(self):
        spec, system = benchmark_system(15)
        with pytest.raises(ValueError, match="shape"):
            pgmres(system, np.eye(7), system.F, GmresConfig(tol=1e-4, max_iter=5))


class TestJacobi:
    def test_fixed_point(self):
        spec, system = benchmark_system(63)
        Ustar = system.solve_direct()
        U2 = damped_jacobi_step(system, Ustar, 2.0 / 3.0)
        assert np.linalg.norm(U2 - Ustar) < 1e-12

    def test_laplace_highest_mode_eigenvalue(self):
        # k = 0: G_omega = I - (omega/2) A; at omega = 2/3 the top-mode
        # eigenvalue tends to 1 - 2*omega = -1/3
        from greenlift.problems import ProblemSpec, SmoothCoefficient
        one = lambda x: np.ones_like(np.asarray(x, dtype=np.float64))
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=np.float64))
        lap = ProblemSpec(name="lap", domain=(0.0, 1.0),
                          coeff=SmoothCoefficient(c=one, c_prime=zero, k=zero),
                          forcing=one)
        system = discretize(lap, 127)
        G = np.eye(127) - (2.0 / 3.0) * jacobi_iteration_matrix(system)
        lam = np.sort(np.linalg.eigvalsh(0.5 * (G + G.T)))
        assert lam[0] == pytest.approx(-1.0 / 3.0, abs=1e-3)

    def test_indefinite_spectral_radius_exceeds_one(self):
        spec, system = benchmark_system()
        G = np.eye(255) - (2.0 / 3.0) * jacobi_iteration_matrix(system)
        rho = np.abs(np.linalg.eigvals(G)).max()
        assert rho > 1.0

    def test_zero_diagonal_rejected(self):
        spec, system = benchmark_system(7)
        bad = type(system)(n=system.n, h=system.h, grid=system.grid,
                           diag=np.zeros(7), off=system.off, F=system.F)
        with pytest.raises(ZeroDivisionError):
            damped_jacobi_step(bad, np.zeros(7), 0.5)


class TestHybrid:
    def test_exact_inverse_converges_in_one_cycle(self):
        spec, system = benchmark_system(63)
        Binv = np.linalg.inv(system.dense())
        U, tr = hybrid_solve(system, Binv, HybridConfig(jacobi_steps=0, cycles=5,
                                                        tol=1e-12))
        kernel_steps = [s for s in tr.stage if s == "kernel"]
        assert len(kernel_steps) == 1
        assert np.allclose(U, system.solve_direct(), atol=1e-10)

    def test_oracle_kernel_reaches_machine_precision(self):
        spec, system = benchmark_system()
        B = oracle_matrix(spec, system)
        exact_U = system.solve_direct()
        U, tr = hybrid_solve(system, B, HybridConfig(omega=2.0 / 3.0, jacobi_steps=1,
                                                     cycles=25, tol=1e-12),
                             exact_U=exact_U)
        assert tr.relres[-1] < 1e-10
        assert not tr.diverged

    def test_mode1_drops_at_first_kernel_correction(self):
        spec, system = benchmark_system()
        B = oracle_matrix(spec, system)
        exact_U = system.solve_direct()
        _, tr = hybrid_solve(system, B, HybridConfig(jacobi_steps=1, cycles=3,
                                                     tol=1e-14), exact_U=exact_U)
        assert tr.stage[0] == "init" and tr.stage[1] == "kernel"
        drop = abs(tr.modes[0][0]) / max(abs(tr.modes[1][0]), 1e-300)
        assert drop >= 10.0

    def test_contraction_matches_iteration_matrix_radius(self):
        # with no smoothing steps the error contracts like rho(I - BA)
        spec, system = benchmark_system(127)
        B = oracle_matrix(spec, system)
        exact_U = system.solve_direct()
        M = np.eye(127) - B.matrix @ system.dense()
        rho = np.abs(np.linalg.eigvals(M)).max()
        assert rho < 1.0
        _, tr = hybrid_solve(system, B, HybridConfig(jacobi_steps=0, cycles=12,
                                                     tol=0.0), exact_U=exact_U)
        errs = np.array(tr.err2[1:])
        ratios = errs[1:] / errs[:-1]
        observed = np.median(ratios[:6])
        assert observed == pytest.approx(rho, rel=0.2)

    def test_divergence_guard(self):
        spec, system = benchmark_system(31)
        Bad = -100.0 * np.linalg.inv(system.dense())
        _, tr = hybrid_solve(system, Bad, HybridConfig(jacobi_steps=0, cycles=50,
                                                       tol=1e-12))
        assert tr.diverged

    def test_pure_jacobi_stalls_on_indefinite_system(self):
        spec, system = benchmark_system()
        U = np.zeros(255)
        fnorm = np.linalg.norm(system.F)
        for _ in range(200):
            U = damped_jacobi_step(system, U, 2.0 / 3.0)
        assert np.linalg.norm(system.F - system.matvec(U)) / fnorm > 1e-2


class TestModeErrors:
    def test_single_mode(self):
        n = 63
        p = np.arange(1, n + 1)
        xi5 = np.sin(5 * p * np.pi / (n + 1)) * np.sqrt(2.0 / (n + 1))
        c = mode_errors(xi5, n)
        assert abs(c[4] - 1.0) < 1e-12
        c[4] = 0.0
        assert np.abs(c).max() < 1e-12

    def test_parseval(self):
        rng = np.random.default_rng(8)
        e = rng.standard_normal(255)
        c = mode_errors(e, 255)
        assert np.sum(c * c) == pytest.approx(np.sum(e * e), rel=1e-10)

    def test_round_trip(self):
        rng = np.random.default_rng(9)
        e = rng.standard_normal(128)
        assert np.abs(modes_to_error(mode_errors(e, 128)) - e).max() < 1e-10

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            mode_errors(np.ones(5), 6)


class TestSpectralCondition:
    def test_indefinite_example(self):
        sc = spectral_condition(np.diag([-2.0, -1.0, 1.0, 4.0]))
        assert sc.kappa == pytest.approx(8.0)
        assert not sc.one_signed and not sc.complex_flagged

    def test_identity(self):
        sc = spectral_condition(np.eye(6))
        assert sc.kappa == pytest.approx(1.0)
        assert sc.one_signed

    def test_benchmark_oracle_preconditioned(self):
        spec, system = benchmark_system()
        B = oracle_matrix(spec, system)
        sc = spectral_condition(B.matrix @ system.dense())
        assert sc.kappa <= 1.1                   # reported: 1.01

    def test_complex_pair_flagged(self):
        sc = spectral_condition(np.array([[0.0, -1.0], [1.0, 0.0]]))
        assert sc.complex_flagged


class TestIterTraceCsv:
    def test_csv_round_trip_columns(self, tmp_path):
        spec, system = benchmark_system(31)
        B = oracle_matrix(spec, system)
        exact_U = system.solve_direct()
        _, tr = hybrid_solve(system, B, HybridConfig(cycles=3, tol=1e-14),
                             exact_U=exact_U)
        path = tmp_path / "trace.csv"
        tr.write_csv(str(path))
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["iteration", "relres", "err2"]
        assert header[3] == "mode_1" and header[-1] == "stage"
        # Parseval column check: sum of squared modes equals err2^2
        row = lines[2].split(",")
        err2 = float(row[2])
        modes = np.array([float(v) for v in row[3:3 + 31]])
        assert np.sum(modes ** 2) == pytest.approx(err2 ** 2, rel=1e-10)
