"""Secrecy-rate maximisation for IRS-aided SWIPT with artificial noise."""

from .ao_driver import AoConfig, BeamformingSolution, run_ao, sweep_tau, tau_to_gamma
from .channel import ChannelSet, Scenario, default_scenario, draw_channels, effective_channels
from .eh_model import EhParams, harvested_power, required_input_power
from .numerics import InvalidInput
from .secrecy import evaluate, secrecy_rate

__version__ = "0.1.0"

__all__ = [
    "AoConfig",
    "BeamformingSolution",
    "ChannelSet",
    "EhParams",
    "InvalidInput",
    "Scenario",
    "default_scenario",
    "draw_channels",
    "effective_channels",
    "evaluate",
    "harvested_power",
    "required_input_power",
    "run_ao",
    "secrecy_rate",
    "sweep_tau",
    "tau_to_gamma",
]
