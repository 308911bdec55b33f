import io
import math

import numpy as np
import pytest

from qpot.errors import FieldError, NonFiniteSampleError
from qpot.fields import (
    ComplexField,
    FieldStack,
    Grid,
    RealField,
    divergence,
    field_csv_text,
    gradient,
    laplacian,
    read_field_csv,
    time_derivative,
    write_field_csv,
)


def line(n=64, lo=0.0, hi=1.0):
    return Grid.line(lo, hi, n)


class TestGrid:
    def test_spacing(self):
        g = line(101, 0.0, 1.0)
        assert g.spacing[0] == pytest.approx(0.01)

    def test_too_few_points_rejected(self):
        with pytest.raises(FieldError):
            Grid.line(0.0, 1.0, 7)

    def test_inverted_extent_rejected(self):
        with pytest.raises(FieldError):
            Grid.line(1.0, 0.0, 16)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(FieldError):
            RealField(line(16), np.zeros(8))


class TestGradient:
    def test_linear_field_exact(self):
        g = line(64)
        out = gradient(RealField(g, 3.0 * g.coords(0)))[0]
        assert np.allclose(out.values, 3.0, atol=1e-13)

    def test_constant_field_zero(self):
        g = line(64)
        out = gradient(RealField(g, np.full(64, 2.5)))[0]
        assert np.allclose(out.values, 0.0, atol=1e-13)

    def test_sine_against_analytic_derivative(self):
        g = line(1024)
        x = g.coords(0)
        out = gradient(RealField(g, np.sin(2 * math.pi * x)))[0]
        exact = 2 * math.pi * np.cos(2 * math.pi * x)
        assert np.max(np.abs(out.values[1:-1] - exact[1:-1])) <= 1e-4 * 2 * math.pi

    def test_nonfinite_rejected_with_index(self):
        g = line(16)
        vals = np.ones(16)
        vals[5] = np.nan
        with pytest.raises(NonFiniteSampleError) as err:
            gradient(RealField(g, vals, label="P"))
        assert err.value.index == (5,)
        assert "P" in str(err.value)


class TestLaplacian:
    def test_quadratic_exact(self):
        g = line(64)
        out = laplacian(RealField(g, g.coords(0) ** 2))
        assert np.allclose(out.values, 2.0, atol=1e-9)

    def test_sine_relative_error(self):
        g = line(2048)
        x = g.coords(0)
        k = math.pi
        out = laplacian(RealField(g, np.sin(k * x)))
        exact = -k * k * np.sin(k * x)
        sel = slice(3, -3)
        num = np.max(np.abs(out.values[sel] - exact[sel]))
        assert num <= 1e-5 * k * k

    def test_2d_separable_quadratic(self):
        g = Grid.plane((0.0, 1.0, 32), (0.0, 2.0, 48))
        xx, yy = g.meshes()
        out = laplacian(RealField(g, xx**2 + yy**2))
        assert np.allclose(out.values, 4.0, atol=1e-8)

    def test_convergence_order(self):
        k = 2 * math.pi

        def err(n):
            g = line(n)
            x = g.coords(0)
            out = laplacian(RealField(g, np.sin(k * x)))
            return np.max(np.abs(out.values[3:-3] + k * k * np.sin(k * x)[3:-3]))

        assert err(256) / err(512) >= 3.5

    def test_linearity(self, rng):
        g = line(128)
        f1 = rng.standard_normal(128)
        f2 = rng.standard_normal(128)
        a, b = 1.7, -0.4
        lhs = laplacian(RealField(g, a * f1 + b * f2)).values
        rhs = a * laplacian(RealField(g, f1)).values + b * laplacian(RealField(g, f2)).values
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)

    def test_divergence_of_gradient_matches(self):
        g = line(512)
        x = g.coords(0)
        f = RealField(g, np.sin(2 * math.pi * x))
        lap = laplacian(f).values
        divgrad = divergence(gradient(f)).values
        assert np.max(np.abs(lap[3:-3] - divgrad[3:-3])) <= 5e-3


class TestTimeDerivative:
    def build_stack(self, fn, times, n=64):
        g = line(n)
        x = g.coords(0)
        fields = [RealField(g, fn(t, x)) for t in times]
        return FieldStack(g, np.asarray(times), fields)

    def test_linear_in_time_exact(self):
        stack = self.build_stack(lambda t, x: t * np.sin(x), [0.0, 0.1, 0.2])
        out = time_derivative(stack, 1)
        assert np.allclose(out.values, np.sin(line().coords(0)), atol=1e-12)

    def test_constant_in_time_zero(self):
        stack = self.build_stack(lambda t, x: np.cos(x), [0.0, 1.0, 2.0])
        for i in range(3):
            assert np.allclose(time_derivative(stack, i).values, 0.0, atol=1e-12)

    def test_exponential_relative_error(self):
        times = [1.0, 1.001, 1.002]
        stack = self.build_stack(lambda t, x: math.exp(-t) * np.cos(x), times)
        out = time_derivative(stack, 1)
        exact = -math.exp(-times[1]) * np.cos(line().coords(0))
        assert np.max(np.abs(out.values - exact) / np.abs(exact)) <= 1e-6

    def test_one_sided_ends_second_order(self):
        times = np.linspace(0.0, 0.004, 5)
        stack = self.build_stack(lambda t, x: np.exp(-t) * np.cos(x), list(times))
        out = time_derivative(stack, 0)
        exact = -np.cos(line().coords(0))
        assert np.max(np.abs(out.values - exact)) <= 1e-6

    def test_short_stack_rejected(self):
        stack = self.build_stack(lambda t, x: x, [0.0])
        with pytest.raises(FieldError):
            time_derivative(stack, 0)


class TestFieldStack:
    def test_times_must_increase(self):
        g = line(16)
        fields = [RealField(g, np.zeros(16)) for _ in range(2)]
        with pytest.raises(FieldError):
            FieldStack(g, np.array([0.0, 0.0]), fields)

    def test_grid_must_match(self):
        g1, g2 = line(16), line(32)
        with pytest.raises(FieldError):
            FieldStack(g1, np.array([0.0]), [RealField(g2, np.zeros(32))])


class TestCsvRoundTrip:
    def test_real_field_bit_exact(self, rng):
        g = line(16, -2.0, 3.0)
        f = RealField(g, rng.standard_normal(16) * 1e-7, label="P")
        out, t = read_field_csv(io.StringIO(field_csv_text(f, time=0.25)))
        assert np.array_equal(out.values, f.values)
        assert out.label == "P"
        assert t == 0.25

    def test_complex_field_bit_exact(self, rng):
        g = line(16)
        f = ComplexField(g, rng.standard_normal(16) + 1j * rng.standard_normal(16), label="psi")
        out, _ = read_field_csv(io.StringIO(field_csv_text(f)))
        assert np.array_equal(out.values, f.values)

    def test_2d_round_trip(self, rng):
        g = Grid.plane((0.0, 1.0, 8), (0.0, 1.0, 9))
        f = RealField(g, rng.standard_normal((8, 9)), label="U")
        out, _ = read_field_csv(io.StringIO(field_csv_text(f)))
        assert np.array_equal(out.values, f.values)

    def test_mask_sentinel_round_trip(self, rng):
        g = line(12)
        mask = np.zeros(12, dtype=bool)
        mask[[0, 5]] = True
        f = RealField(g, rng.standard_normal(12), mask=mask, label="U")
        text = field_csv_text(f)
        assert "masked" in text and "nan" not in text.lower()
        out, _ = read_field_csv(io.StringIO(text))
        assert np.array_equal(out.mask, mask)
        assert np.array_equal(out.values[~mask], f.values[~mask])

    def test_header_format(self):
        g = line(16, -1.0, 1.0)
        text = field_csv_text(RealField(g, np.zeros(16), label="Qhat"), time=1.5)
        header = text.splitlines()[0]
        assert header.startswith("# grid: dim=1 axis0=-1,1,16 quantity=Qhat time=1.5")

    def test_malformed_header_rejected(self):
        with pytest.raises(FieldError):
            read_field_csv(io.StringIO("# nonsense\n0,1\n"))

    def test_write_to_path(self, tmp_path, rng):
        g = line(16)
        f = RealField(g, rng.standard_normal(16))
        path = tmp_path / "f.csv"
        write_field_csv(f, path)
        out, _ = read_field_csv(path)
        assert np.array_equal(out.values, f.values)
