import numpy as np
import pytest

from greenlift.assemble import (DenseKernelMatrix, LinearSystem, discretize,
                                dump_banded_csv, dump_kernel_matrix_csv,
                                fast_solve, kernel_matrix)
from greenlift.lifted import AnalyticKernel, ConfigurationError, NeuralKernel
from greenlift.net import init_params
from greenlift.problems import (ProblemSpec, SmoothCoefficient, benchmark_helmholtz,
                                exact_green_helmholtz, exact_green_laplace,
                                interface_problem, variable_coeff_problem)


def laplace_spec():
    one = lambda x: np.ones_like(np.asarray(x, dtype=np.float64))
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=np.float64))
    return ProblemSpec(name="laplace", domain=(0.0, 1.0),
                       coeff=SmoothCoefficient(c=one, c_prime=zero, k=zero),
                       forcing=one)


class TestDiscretize:
    def test_laplace_n3_eigenvalues(self):
        lam = np.sort(discretize(laplace_spec(), 3).eigenvalues())
        assert np.allclose(lam, [2 - np.sqrt(2), 2.0, 2 + np.sqrt(2)], atol=1e-14)

    def test_constant_k_spectrum_formula(self):
        spec = benchmark_helmholtz()
        system = discretize(spec, 63)
        j = np.arange(1, 64)
        expected = 4 * np.sin(j * np.pi / 128) ** 2 - (10.0 * system.h) ** 2
        assert np.abs(np.sort(system.eigenvalues()) - np.sort(expected)).max() < 1e-10

    def test_reduces_to_classic_stencil(self):
        system = discretize(benchmark_helmholtz(), 15)
        h = system.h
        assert np.allclose(system.diag, 2.0 - (10.0 * h) ** 2)
        assert np.allclose(system.off, -1.0)
        assert np.allclose(system.F, h * h * benchmark_helmholtz().forcing(system.grid))

    def test_direct_solve_second_order(self):
        for spec in (benchmark_helmholtz(), variable_coeff_problem()):
            errs = []
            for n in (127, 255, 511):
                system = discretize(spec, n)
                errs.append(np.abs(system.solve_direct()
                                   - spec.exact_solution(system.grid)).max())
            for e0, e1 in zip(errs, errs[1:]):
                assert 1.8 <= e0 / e1 <= 2.2 ** 2

    def test_interface_scheme_exact_on_piecewise_cubic(self):
        # centred flux differences are exact for cubics, so the interface
        # scheme reproduces the solution to rounding (better than O(h^2))
        spec = interface_problem()
        for n in (63, 255):
            system = discretize(spec, n)
            err = np.abs(system.solve_direct() - spec.exact_solution(system.grid)).max()
            assert err < 1e-12

    def test_interface_must_be_a_node(self):
        with pytest.raises(ValueError, match="node"):
            discretize(interface_problem(), 254)

    def test_matrix_symmetric(self):
        for spec in (benchmark_helmholtz(), variable_coeff_problem(), interface_problem()):
            system = discretize(spec, 31)
            A = system.dense()
            assert np.array_equal(A, A.T)

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            discretize(benchmark_helmholtz(), 1)

    def test_matvec_matches_dense(self):
        system = discretize(variable_coeff_problem(), 40)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(40)
        assert np.allclose(system.matvec(v), system.dense() @ v, rtol=1e-14)


class TestKernelMatrix:
    def test_laplace_scaled_equals_closed_form_inverse(self):
        spec = laplace_spec()
        src = AnalyticKernel(exact_green_laplace)
        for n in (3, 63, 255):
            system = discretize(spec, n)
            B = kernel_matrix(src, system.grid, system.h, scaled=True)
            i = np.arange(1, n + 1)
            closed = np.minimum(i[:, None], i[None, :]) * (n + 1 - np.maximum(i[:, None], i[None, :])) / (n + 1)
            assert np.abs(B.matrix - closed).max() < 1e-12

    def test_laplace_b11_value(self):
        system = discretize(laplace_spec(), 3)
        B = kernel_matrix(AnalyticKernel(exact_green_laplace), system.grid, system.h)
        assert B.matrix[0, 0] == pytest.approx(0.75, abs=1e-14)

    def test_unscaled_mode(self):
        system = discretize(laplace_spec(), 7)
        Bs = kernel_matrix(AnalyticKernel(exact_green_laplace), system.grid, system.h, scaled=True)
        Bu = kernel_matrix(AnalyticKernel(exact_green_laplace), system.grid, system.h, scaled=False)
        assert np.allclose(Bs.matrix * system.h, Bu.matrix, rtol=1e-14)

    def test_benchmark_oracle_preconditioner_quality(self):
        spec = benchmark_helmholtz()
        system = discretize(spec, 255)
        src = AnalyticKernel(spec.exact_green)
        B = kernel_matrix(src, system.grid, system.h, spec=spec)
        assert np.abs(B.matrix - B.matrix.T).max() < 1e-12
        prod = B.matrix @ system.dense()
        lam = np.linalg.eigvals(prod)
        assert np.abs(lam.real - 1.0).max() < 0.05
        assert np.abs(lam.imag).max() < 1e-8

    def test_chunking_invariant(self):
        spec = benchmark_helmholtz()
        system = discretize(spec, 33)
        src = AnalyticKernel(spec.exact_green)
        B1 = kernel_matrix(src, system.grid, system.h, chunk=7)
        B2 = kernel_matrix(src, system.grid, system.h, chunk=64)
        assert np.array_equal(B1.matrix, B2.matrix)


class TestFastSolve:
    def test_zero_forcing_gives_zero(self):
        spec = benchmark_helmholtz()
        silent = ProblemSpec(name="silent", domain=spec.domain, coeff=spec.coeff,
                             forcing=lambda x: np.zeros_like(np.asarray(x, float)))
        src = AnalyticKernel(spec.exact_green)
        u = fast_solve(src, silent, 128, np.linspace(0, 1, 11))
        assert np.allclose(u, 0.0)

    def test_oracle_benchmark_accuracy_and_order(self):
        spec = benchmark_helmholtz()
        src = AnalyticKernel(spec.exact_green)
        pts = np.linspace(0, 1, 101)
        errs = []
        for n_quad in (256, 512, 1024):
            u = fast_solve(src, spec, n_quad, pts)
            errs.append(np.abs(u - spec.exact_solution(pts)).max())
        assert errs[-1] <= 5e-3
        for e0, e1 in zip(errs, errs[1:]):
            assert e0 / e1 >= 1.8

    def test_gauss_rule_agrees(self):
        spec = benchmark_helmholtz()
        src = AnalyticKernel(spec.exact_green)
        pts = np.linspace(0.1, 0.9, 5)
        ut = fast_solve(src, spec, 512, pts, rule="trapezoid")
        ug = fast_solve(src, spec, 512, pts, rule="gauss")
        assert np.abs(ut - ug).max() < 5e-3

    def test_interface_requires_matching_kernel(self):
        p3 = init_params(3, [4], np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            fast_solve(NeuralKernel(p3), interface_problem(), 64, np.array([0.0]))

    def test_bad_rule_rejected(self):
        spec = benchmark_helmholtz()
        with pytest.raises(ValueError, match="rule"):
            fast_solve(AnalyticKernel(spec.exact_green), spec, 64,
                       np.array([0.5]), rule="simpson")


class TestDumps:
    def test_csv_dumps(self, tmp_path):
        spec = benchmark_helmholtz()
        system = discretize(spec, 5)
        B = kernel_matrix(AnalyticKernel(spec.exact_green), system.grid, system.h)
        kp = tmp_path / "B.csv"
        bp = tmp_path / "A.csv"
        dump_kernel_matrix_csv(str(kp), B)
        dump_banded_csv(str(bp), system)
        assert kp.read_text().splitlines()[0] == "row,col,value"
        assert len(kp.read_text().splitlines()) == 26
        assert bp.read_text().splitlines()[0] == "i,diag,sup,F"
