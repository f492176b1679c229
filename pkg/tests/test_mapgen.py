import numpy as np
import pytest
from scipy import ndimage

from avsearch.environment import CellTag, read_map
from avsearch.mapgen import (PRESETS, GenerationFailed, UnknownPresetError,
                             generate_map, generate_preset, save_map)


CROSS = ndimage.generate_binary_structure(2, 1)


def check_layout(grid):
    cells = grid.cells
    assert (cells[0, :] == CellTag.OCCLUSION).all()
    assert (cells[-1, :] == CellTag.OCCLUSION).all()
    assert (cells[:, 0] == CellTag.OCCLUSION).all()
    assert (cells[:, -1] == CellTag.OCCLUSION).all()

    _, count = ndimage.label(cells == CellTag.EMPTY, structure=CROSS)
    assert count == 1

    assert grid.k >= 1
    for j in range(grid.k):
        x, y = grid.candidate_cell(j)
        assert any(grid.is_empty(x + dx, y + dy)
                   for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)))


def requested(grid, density):
    # Candidates are drawn from wall-adjacent empty cells, so those cells
    # plus the candidates recover the original pool.
    cells = grid.cells
    adjacent = ndimage.binary_dilation(cells == CellTag.OCCLUSION, structure=CROSS)
    pool = int(((cells == CellTag.EMPTY) & adjacent).sum()) + grid.k
    return max(1, int(round(density * pool)))


class TestGenerateMap(object):
    def test_layout(self):
        for seed in range(10):
            for width, height, rooms in ((4, 4, 1), (10, 10, 1), (15, 12, 2),
                                         (24, 20, 3)):
                grid = generate_map(width, height, rooms, 0.3, seed)
                assert (grid.width, grid.height) == (width, height)
                check_layout(grid)
                assert grid.k <= requested(grid, 0.3)

    def test_deterministic(self):
        for seed in range(5):
            first = generate_map(18, 18, 2, 0.3, seed)
            second = generate_map(18, 18, 2, 0.3, seed)
            assert first == second
        maps = {generate_map(18, 18, 2, 0.3, seed).cells.tobytes()
                for seed in range(5)}
        assert len(maps) > 1

    def test_cell_size(self):
        assert generate_map(10, 10, 1, 0.3, 0, cell_size=0.5).cell_size == 0.5

    def test_invalid(self):
        for args in ((3, 10, 1, 0.3), (10, 2, 1, 0.3), (10, 10, 0, 0.3),
                     (10, 10, 1, 0.0), (10, 10, 1, 1.0), (10, 10, 1, -0.5)):
            with pytest.raises(ValueError):
                generate_map(*args, seed=0)

    def test_too_many_rooms(self):
        with pytest.raises(GenerationFailed):
            generate_map(6, 6, 3, 0.3, 0)


class TestPresets(object):
    def test_presets(self):
        for name, params in PRESETS.items():
            for seed in range(3):
                grid = generate_preset(name, seed)
                assert (grid.width, grid.height) == (params['width'],
                                                     params['height'])
                check_layout(grid)
                assert grid == generate_map(seed=seed, **params)

    def test_hard_density(self):
        density = PRESETS['hard']['candidate_density']
        for seed in range(3):
            grid = generate_preset('hard', seed)
            wanted = requested(grid, density)
            assert 0.8 * wanted <= grid.k <= wanted

    def test_unknown(self):
        with pytest.raises(UnknownPresetError):
            generate_preset('nightmare', 0)


def test_save_map(tmpdir):
    grid = generate_preset('medium', 7)
    path = str(tmpdir.join('medium.map'))
    save_map(grid, path)
    assert read_map(path) == grid
    with open(path) as f:
        assert f.readline().strip() == 'size 18 18'
