"""Configurable protocol server used as ground truth for assessment tests."""

from uascout.mock.scenario import ScenarioConfig, ScenarioError
from uascout.mock.server import MockServer, PortInUse, start

__all__ = ["MockServer", "PortInUse", "ScenarioConfig", "ScenarioError", "start"]
