"""Damped-Newton (alpha) policy iteration for continuous-time H-infinity control."""

from .basis import BasisSet, paper_bases
from .dynamics import AffineDynamics, SampleWindow, integrate_window, simulate
from .errors import (AlphaPIError, EngagementTerminal, ExcitationInsufficient, GammaTooSmall,
                     InsufficientResolution, IntegrationBlowup, StaleData, StepFailure)
from .hji import CriticFunction, GameSpec, PolicyPair, extract_policies
from .lq import GareSolution, solve_gare
from .missile import EngagementConfig, ManeuverSpec, run_engagement
from .offpolicy import Bases, DataSet, StackedWeights, collect, offpolicy_iterate, offpolicy_solve
from .onpolicy import OnPolicyConfig, onpolicy_iterate, onpolicy_solve

__version__ = "0.1.0"

__all__ = [
    "BasisSet",
    "paper_bases",
    "AffineDynamics",
    "SampleWindow",
    "integrate_window",
    "simulate",
    "AlphaPIError",
    "EngagementTerminal",
    "ExcitationInsufficient",
    "GammaTooSmall",
    "InsufficientResolution",
    "IntegrationBlowup",
    "StaleData",
    "StepFailure",
    "CriticFunction",
    "GameSpec",
    "PolicyPair",
    "extract_policies",
    "GareSolution",
    "solve_gare",
    "EngagementConfig",
    "ManeuverSpec",
    "run_engagement",
    "Bases",
    "DataSet",
    "StackedWeights",
    "collect",
    "offpolicy_iterate",
    "offpolicy_solve",
    "OnPolicyConfig",
    "onpolicy_iterate",
    "onpolicy_solve",
]
