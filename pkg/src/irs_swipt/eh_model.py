"""
Sigmoid (non-linear) energy-harvesting model.

The harvested power is the logistic curve re-based so that zero input gives
zero output::

    Psi   = M / (1 + exp(-a (p_in - b)))
    Omega = 1 / (1 + exp(a b))
    Phi   = (Psi - M Omega) / (1 - Omega)

Both directions are evaluated in cancellation-free forms so that very small
requirements survive the round trip at full relative precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .numerics import InvalidInput


class InfeasibleThreshold(InvalidInput):
    """The requested harvested power is at or above saturation."""


@dataclass(frozen=True)
class EhParams:
    m_sat: float = 0.024   # W, saturation power
    a: float = 150.0       # 1/W
    b: float = 0.014       # W

    def __post_init__(self):
        if not (self.m_sat > 0 and self.a > 0 and self.b > 0):
            raise InvalidInput(f"EH parameters must be positive: {self}")


def omega(p: EhParams) -> float:
    return float(expit(-p.a * p.b))


def harvested_power(p_in, p: EhParams):
    """Harvested power for received RF power ``p_in`` (W)."""
    p_in = np.asarray(p_in, dtype=float)
    if np.any(p_in < 0):
        raise InvalidInput("received power must be non-negative")
    # (Psi - M Omega)/(1 - Omega) == M * sigmoid(a(p-b)) * (1 - exp(-a p))
    out = p.m_sat * expit(p.a * (p_in - p.b)) * -np.expm1(-p.a * p_in)
    return float(out) if out.ndim == 0 else out


def required_input_power(mu, p: EhParams):
    """Smallest received power whose harvested power equals ``mu``.

    Zero requirement maps to zero.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise InvalidInput("harvested-power requirement must be non-negative")
    if np.any(mu >= p.m_sat):
        raise InfeasibleThreshold(
            f"requirement {float(np.max(mu)):.4g} W is not below saturation {p.m_sat:.4g} W"
        )
    # b - ln(M/(mu(1-Omega) + M Omega) - 1)/a rewritten without cancellation
    r = mu / p.m_sat
    with np.errstate(divide="ignore"):
        up = np.logaddexp(0.0, p.a * p.b + np.log(r))
    beta = (up - np.log1p(-r)) / p.a
    beta = np.where(mu == 0, 0.0, np.maximum(beta, 0.0))
    return float(beta) if beta.ndim == 0 else beta


def required_input_power_direct(mu, p: EhParams):
    """Literal textbook inversion; kept as an independent check."""
    om = omega(p)
    return p.b - np.log(p.m_sat / (mu * (1.0 - om) + p.m_sat * om) - 1.0) / p.a
