import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pinsky import level as lv

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make(rows, variant="singleDoor"):
    return lv.from_rows(rows, variant)


@pytest.fixture
def trivial_level():
    # key right of the spawn, door right of the key
    return make(["wwwww",
                 "wA+gw",
                 "w...w",
                 "wwwww"])


@pytest.fixture
def reference_level():
    # 2 doors, 3 monsters, 3 interior wall tiles, 6 keys; nearest key 2 steps away;
    # key -> nearest door 7 steps, then 9 more to the second door
    return make(["wwwwwwwwwwwww",
                 "wA.+......g.w",
                 "w.......3...w",
                 "w....+......w",
                 "ww....+.....w",
                 "ww...3...+..w",
                 "ww.........+w",
                 "w..+...g..3.w",
                 "wwwwwwwwwwwww"], "multiDoor")


def random_level(rng, h=9, w=13, variant="multiDoor", wall_p=0.25, n_keys=(1, 4),
                 n_doors=(1, 3), n_monsters=(0, 4)):
    """Random valid level: walled border, random interior walls and objects on distinct cells."""
    cells = np.full((h, w), lv.Tile.WALL, dtype=np.int8)
    inner = np.where(rng.random((h - 2, w - 2)) < wall_p, lv.Tile.WALL, lv.Tile.FLOOR)
    cells[1:-1, 1:-1] = inner
    nk = int(rng.integers(n_keys[0], n_keys[1] + 1))
    nd = 1 if variant == "singleDoor" else int(rng.integers(n_doors[0], n_doors[1] + 1))
    nm = int(rng.integers(n_monsters[0], n_monsters[1] + 1))
    interior = [(r, c) for r in range(1, h - 1) for c in range(1, w - 1)]
    picks = rng.choice(len(interior), size=1 + nk + nd + nm, replace=False)
    tiles = [lv.Tile.AVATAR] + [lv.Tile.KEY] * nk + [lv.Tile.DOOR] * nd + [lv.Tile.MONSTER] * nm
    for idx, t in zip(picks, tiles):
        cells[interior[idx]] = t
    return lv.Level(cells, variant).validate()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(k for k in mod.RESULTS if isinstance(k, int)):
        terminalreporter.write_line(mod.RESULTS[key])
    if "ablation_table" in mod.RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line(mod.RESULTS["ablation_table"])
