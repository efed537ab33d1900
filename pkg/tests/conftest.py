from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from deskbot import agent_core, world

CHAIR_SCENARIO = """
[world]
width = 12
height = 8
seed = 3

[agent]
x = 0
y = 0
yaw = 0

[objects]
chair 5 2 0.3 red,wooden 7
"""

EMPTY_SCENARIO = """
[world]
width = 10
height = 10
seed = 1

[agent]
x = 5
y = 5
yaw = 0
"""


def make_agent(scenario: str = CHAIR_SCENARIO, config=None) -> agent_core.Agent:
    return agent_core.Agent(world.load_scenario(scenario), config)


@pytest.fixture
def chair_agent() -> agent_core.Agent:
    return make_agent()


@pytest.fixture
def chair_world() -> world.WorldState:
    return world.load_scenario(CHAIR_SCENARIO)
