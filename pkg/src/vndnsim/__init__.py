"""Discrete-event simulator for MAC-addressed NDN forwarding in vehicular networks."""

from .link import BROADCAST, ContentName, DataMsg, Frame, InterestMsg, MacAddress, parse_mac
from .scenario import ScenarioConfig, ScenarioError, build_simulator, run

__version__ = "0.1.0"
