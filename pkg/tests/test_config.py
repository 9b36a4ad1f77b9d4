"""Tests for experiment config parsing and validation"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from src.lab.config import load_config, loads_config, parse_config
from src.lab.errors import ConfigError
from src.lab.processes import BrownianMotion, JumpDiffusion, StableLevy, Subordinated

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def _location(data):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    return info.value.location


def test_minimal_config():
    config = loads_config('{"seed": 3, "process": {"family": "brownian", "dim": 2}}')
    assert config.seed == 3
    assert isinstance(config.process, BrownianMotion)
    assert config.process.dim == 2
    assert config.index == 0.5
    assert config.sets == () and config.checks == ()
    assert config.n_steps == 2 ** 20


def test_syntax_error_is_located_by_line_and_column():
    text = '{\n  "seed": 1,\n  "name" "broken"\n}'
    with pytest.raises(ConfigError) as info:
        loads_config(text, "exp.json")
    assert info.value.location.startswith("exp.json:3:")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(tmp_path / "absent.json")
    assert info.value.location.endswith("absent.json")


def test_seed_is_required():
    assert _location({"process": {"family": "brownian"}}) == "seed"


def test_seed_must_be_an_integer():
    assert _location({"seed": True}) == "seed"


def test_index_out_of_range():
    assert _location({"seed": 1, "process": {"family": "stable", "alpha": 2.5}}) == "process.alpha"


def test_unknown_family():
    assert _location({"seed": 1, "process": {"family": "fractional"}}) == "process.family"


def test_unknown_top_level_field():
    assert _location({"seed": 1, "bogus": 2}) == "bogus"


def test_description_is_allowed():
    assert parse_config({"seed": 1, "description": "notes"}).name == "experiment"


def test_unknown_check():
    assert _location({"seed": 1, "checks": [{"check": "a9"}]}) == "checks[0].check"


@pytest.mark.parametrize("ladder", [[0.5, 0.3, 0.1], [0.25, 0.5], [0.5, -0.25]])
def test_ladder_must_be_nested_and_decreasing(ladder):
    assert _location({"seed": 1, "ladder": ladder}) == "ladder"


def test_sets_need_a_process():
    assert _location({"seed": 1, "sets": [{"kind": "interval"}]}) == "process"


def test_x0_must_match_the_dimension():
    data = {"seed": 1, "process": {"family": "brownian", "dim": 2}, "x0": [0.0]}
    assert _location(data) == "x0"


def test_atoms_are_normalized():
    data = {"seed": 1, "process": {
        "family": "stable", "alpha": 1.5, "dim": 2,
        "spectral": {"atoms": [{"direction": [2.0, 0.0], "weight": 1.0},
                               {"direction": [0.0, -3.0], "weight": 0.5}]}}}
    process = parse_config(data).process
    assert isinstance(process, StableLevy)
    np.testing.assert_allclose(process.spectral.directions, [[1.0, 0.0], [0.0, -1.0]])


def test_zero_direction_is_rejected():
    data = {"seed": 1, "process": {
        "family": "stable", "alpha": 1.5, "dim": 1,
        "spectral": {"atoms": [{"direction": [0.0], "weight": 1.0}]}}}
    assert _location(data) == "process.spectral.atoms"


def test_cantor_set():
    data = {"seed": 1, "process": {"family": "brownian"},
            "sets": [{"kind": "cantor", "base": 3, "kept_digits": [0, 2], "depth": 5, "label": "c"}]}
    (E,) = parse_config(data).sets
    assert E.n_cells == 32
    assert E.label == "c"
    assert E.analytic_dim == pytest.approx(math.log(2) / math.log(3))


def test_cantor_digits_must_be_integers():
    data = {"seed": 1, "process": {"family": "brownian"},
            "sets": [{"kind": "cantor", "kept_digits": [0, 1.5], "depth": 2}]}
    assert _location(data) == "sets[0].kept_digits"


def test_subordinated_process():
    data = {"seed": 1, "process": {"family": "subordinated", "rho": 0.5,
                                   "base": {"family": "brownian", "dim": 2}}}
    process = parse_config(data).process
    assert isinstance(process, Subordinated)
    assert process.dim == 2


def test_jump_diffusion_drift_needs_alpha_above_one():
    data = {"seed": 1, "process": {
        "family": "jump_diffusion", "alpha": 0.8, "dim": 1, "drift": [1.0],
        "spectral": {"atoms": [{"direction": [1.0], "weight": 1.0}]}}}
    assert _location(data) == "process.drift"


def test_jump_diffusion_with_drift():
    data = {"seed": 1, "process": {
        "family": "jump_diffusion", "alpha": 1.5, "dim": 1, "drift": [1.0], "reversion": 0.1,
        "spectral": {"uniform": 2.0}}}
    assert isinstance(parse_config(data).process, JumpDiffusion)


def test_check_blocks_keep_their_parameters():
    data = {"seed": 1, "process": {"family": "brownian"},
            "checks": [{"check": "a1", "gamma": [0.3], "process": {"family": "brownian", "dim": 2}}]}
    (block,) = parse_config(data).checks
    assert block.check == "a1"
    assert block.params == {"gamma": [0.3]}
    assert block.process.dim == 2
    assert block.location == "checks[0]"


def test_covering_defaults():
    config = parse_config({"seed": 1, "covering": {"mode": "preimage", "ns": [4, 5]}})
    assert config.covering.mode == "preimage"
    assert config.covering.ns == (4, 5)
    assert config.covering.gamma == 0.45


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    config = load_config(path)
    assert config.name
    assert config.raw == json.loads(path.read_text(encoding="utf-8"))
