"""Discrete-event simulation of plug-and-play wireless transducer nodes.

A node clusters several sensors and actuators behind one microcontroller
and radio, discovers them as they are plugged in, and reports every second
in a small XML protocol. The package compares the energy of such a network
with one that gives every transducer its own node.
"""

from .energy import EnergyParams, compare, get_profile, traditional_equivalent
from .network import Network, RunResult, simulate
from .protocol import (
    Command, ControlMessage, LayoutEntry, MeasurementMessage, decode, decode_control,
    decode_measurement, encode_control, encode_measurement,
)
from .scenario import Scenario, builtin_home, load_scenario

__version__ = "0.1.0"

__all__ = [
    "Command", "ControlMessage", "EnergyParams", "LayoutEntry", "MeasurementMessage", "Network",
    "RunResult", "Scenario", "builtin_home", "compare", "decode", "decode_control",
    "decode_measurement", "encode_control", "encode_measurement", "get_profile", "load_scenario",
    "simulate", "traditional_equivalent",
]
