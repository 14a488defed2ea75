"""Tests for Brownian increment generation, coarsening and the binary dump"""

import numpy as np
import pytest
from scipy import stats

from truncem.errors import ConfigurationError
from truncem.noise import (
    GRID_MAGIC,
    BrownianGrid,
    coarsen,
    coarsening_factor,
    dump_grid,
    generate,
    load_grid,
)


@pytest.mark.unit
class TestGenerate:
    def test_regeneration_is_bit_identical(self):
        a = generate(42, 3, 1000, 2.0**-10)
        b = generate(42, 3, 1000, 2.0**-10)
        np.testing.assert_array_equal(a.increments, b.increments)
        assert a.sample_seed == b.sample_seed
        assert a.same_sample(b)

    def test_sample_streams_differ(self):
        a = generate(42, 0, 1000, 2.0**-10)
        b = generate(42, 1, 1000, 2.0**-10)
        assert not np.array_equal(a.increments, b.increments)
        assert not a.same_sample(b)

    def test_shape_and_scale(self):
        grid = generate(1, 0, 64, 0.25, dim_noise=3)
        assert grid.increments.shape == (64, 3)
        assert grid.n_steps == 64
        assert grid.dim_noise == 3

    def test_moments_of_a_million_increments(self):
        grid = generate(7, 0, 1_000_000, 1.0)
        x = grid.increments[:, 0]
        assert abs(x.mean()) < 4e-3
        assert x.var() == pytest.approx(1.0, rel=0.01)

    def test_kolmogorov_smirnov(self):
        delta = 2.0**-8
        grid = generate(11, 5, 100_000, delta)
        result = stats.kstest(grid.increments[:, 0] / np.sqrt(delta), "norm")
        assert result.pvalue > 1e-3

    def test_streams_are_uncorrelated(self):
        a = generate(42, 0, 100_000, 1.0).increments[:, 0]
        b = generate(42, 1, 100_000, 1.0).increments[:, 0]
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01

    @pytest.mark.parametrize("kwargs", [dict(n_fine=0), dict(delta_fine=0.0), dict(dim_noise=0)])
    def test_invalid_arguments(self, kwargs):
        args = dict(base_seed=1, sample_index=0, n_fine=8, delta_fine=0.1, dim_noise=1)
        args.update(kwargs)
        with pytest.raises(ConfigurationError):
            generate(**args)

    def test_negative_seed(self):
        with pytest.raises(ConfigurationError):
            generate(-1, 0, 8, 0.1)


@pytest.mark.unit
class TestCoarsen:
    def test_factor_one_is_identity(self):
        grid = generate(3, 0, 16, 0.125)
        assert coarsen(grid, 1) is grid

    def test_pairwise_sums(self):
        grid = BrownianGrid(0.25, [1.0, 2.0, 3.0, 4.0], sample_seed=0)
        coarse = coarsen(grid, 2)
        np.testing.assert_array_equal(coarse.increments[:, 0], [3.0, 7.0])
        assert coarse.delta == 0.5

    def test_composition_is_bit_exact(self):
        grid = generate(5, 2, 4096, 2.0**-12)
        np.testing.assert_array_equal(coarsen(coarsen(grid, 2), 2).increments, coarsen(grid, 4).increments)
        np.testing.assert_array_equal(
            coarsen(coarsen(grid, 8), 4).increments, coarsen(grid, 32).increments
        )

    @pytest.mark.parametrize("factor", [2, 3, 6, 32])
    def test_telescoping(self, factor):
        grid = generate(9, 1, 96 * 32, 2.0**-10)
        n = (grid.n_steps // factor) * factor
        head = grid.head(n)
        assert abs(coarsen(head, factor).increments.sum() - head.increments.sum()) <= 1e-11

    def test_odd_factor_block_sums(self):
        grid = BrownianGrid(1.0, np.arange(1.0, 7.0), sample_seed=0)
        np.testing.assert_array_equal(coarsen(grid, 3).increments[:, 0], [6.0, 15.0])

    def test_keeps_sample_identity(self):
        grid = generate(5, 2, 64, 2.0**-6)
        assert coarsen(grid, 4).same_sample(grid)

    def test_non_dividing_factor(self):
        with pytest.raises(ConfigurationError):
            coarsen(generate(1, 0, 10, 0.1), 3)

    def test_coarsening_factor(self):
        grid = generate(1, 0, 64, 2.0**-12)
        assert coarsening_factor(grid, 2.0**-7) == 32
        with pytest.raises(ConfigurationError):
            coarsening_factor(grid, 3e-4)


@pytest.mark.unit
class TestBinaryDump:
    def test_round_trip(self, tmp_path):
        grid = generate(42, 0, 100, 2.0**-8, dim_noise=2)
        path = dump_grid(grid, tmp_path / "noise.bin")
        assert path.stat().st_size == 24 + 8 * 200
        assert path.read_bytes()[:8] == GRID_MAGIC
        loaded = load_grid(path)
        np.testing.assert_array_equal(loaded.increments, grid.increments)
        assert loaded.delta == grid.delta

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "noise.bin"
        dump_grid(generate(1, 0, 4, 0.5), path)
        raw = bytearray(path.read_bytes())
        raw[:8] = b"NOTAGRID"
        path.write_bytes(bytes(raw))
        with pytest.raises(ConfigurationError, match="magic"):
            load_grid(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "noise.bin"
        dump_grid(generate(1, 0, 4, 0.5), path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(ConfigurationError):
            load_grid(path)
