"""
Exact Riemann solver for the 1D Euler equations of an ideal gas.

Serves as the fluid-limit reference for the kinetic runs. The star pressure is
found with a bracketed Newton iteration on the two-wave pressure function;
plain bisection (scipy) is kept as an independent check.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
import pandas as pd
import scipy.optimize

from .constants import GAMMA_MONOATOMIC
from .errors import VacuumError
from .moments import MacroState

logger = logging.getLogger(__name__)

STAR_RTOL = 1e-12
STAR_MAX_ITER = 100


@dataclass(frozen=True)
class EulerState:
    rho: float
    u: float
    p: float

    def __post_init__(self):
        if not (self.rho > 0 and self.p > 0):
            raise ValueError(f"Euler state needs rho > 0 and p > 0, got rho={self.rho}, p={self.p}")

    def sound_speed(self, gamma: float = GAMMA_MONOATOMIC) -> float:
        return float(np.sqrt(gamma * self.p / self.rho))


@dataclass
class EulerProfile:
    """Sampled exact solution: one (rho, u, p) triple per coordinate."""

    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray

    def to_frame(self, R: float) -> pd.DataFrame:
        """Profile table with the kinetic column layout; T = p / (rho R)."""
        return pd.DataFrame({"x": self.x, "rho": self.rho, "ux": self.u,
                             "T": self.p / (self.rho * R), "p": self.p})


def euler_states_from_macro(left: MacroState, right: MacroState,
                            gamma: float = GAMMA_MONOATOMIC) -> Tuple[EulerState, EulerState]:
    """Euler data of two kinetic states, p = (gamma - 1) rho e."""
    def convert(state: MacroState) -> EulerState:
        return EulerState(rho=state.rho, u=float(state.U[0]), p=(gamma - 1.0) * state.rho * state.e)

    return convert(left), convert(right)


def _wave_function(p: float, state: EulerState, gamma: float) -> Tuple[float, float]:
    """Velocity jump across one nonlinear wave at star pressure p, and its derivative."""
    a = state.sound_speed(gamma)
    if p > state.p:
        A = 2.0 / ((gamma + 1.0) * state.rho)
        B = (gamma - 1.0) / (gamma + 1.0) * state.p
        root = np.sqrt(A / (p + B))
        return (p - state.p) * root, root * (1.0 - 0.5 * (p - state.p) / (p + B))
    ratio = p / state.p
    value = 2.0 * a / (gamma - 1.0) * (ratio ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    # p = 0 is the vacuum end of the bracket; the slope is unbounded there
    slope = ratio ** (-(gamma + 1.0) / (2.0 * gamma)) / (state.rho * a) if ratio > 0 else np.inf
    return value, slope


def _check_vacuum(left: EulerState, right: EulerState, gamma: float) -> None:
    critical = 2.0 / (gamma - 1.0) * (left.sound_speed(gamma) + right.sound_speed(gamma))
    if not critical > right.u - left.u:
        raise VacuumError(f"data generate vacuum: 2(a_L + a_R)/(gamma - 1) = {critical:.6g} "
                          f"<= u_R - u_L = {right.u - left.u:.6g}")


def _pressure_function(p: float, left: EulerState, right: EulerState, gamma: float) -> float:
    return _wave_function(p, left, gamma)[0] + _wave_function(p, right, gamma)[0] + right.u - left.u


def _upper_bracket(left: EulerState, right: EulerState, gamma: float) -> float:
    hi = max(left.p, right.p)
    while _pressure_function(hi, left, right, gamma) <= 0:
        hi *= 2.0
    return hi


def star_region(left: EulerState, right: EulerState, gamma: float = GAMMA_MONOATOMIC,
                rtol: float = STAR_RTOL, max_iter: int = STAR_MAX_ITER) -> Tuple[float, float]:
    """
    Star pressure and velocity between the two nonlinear waves.

    Newton iteration from the primitive-variable estimate, kept inside a
    bracket [lo, hi] of the increasing pressure function; a step leaving the
    bracket is replaced by its midpoint.
    """
    _check_vacuum(left, right, gamma)
    a_left, a_right = left.sound_speed(gamma), right.sound_speed(gamma)

    lo, hi = 0.0, _upper_bracket(left, right, gamma)
    guess = 0.5 * (left.p + right.p) - 0.125 * (right.u - left.u) * (left.rho + right.rho) * (a_left + a_right)
    p = min(max(guess, rtol * hi), hi)

    for iteration in range(max_iter):
        f_left, d_left = _wave_function(p, left, gamma)
        f_right, d_right = _wave_function(p, right, gamma)
        phi = f_left + f_right + right.u - left.u
        if phi == 0.0:
            break
        if phi < 0:
            lo = p
        else:
            hi = p

        p_next = p - phi / (d_left + d_right)
        if not lo < p_next < hi:
            p_next = 0.5 * (lo + hi)
        converged = abs(p_next - p) <= rtol * 0.5 * (p_next + p)
        p = p_next
        if converged:
            break
    else:
        logger.warning(f"Star pressure iteration stopped after {max_iter} iterations at p={p:.12e}")

    u = 0.5 * (left.u + right.u) + 0.5 * (_wave_function(p, right, gamma)[0] - _wave_function(p, left, gamma)[0])
    return float(p), float(u)


def star_pressure_bisection(left: EulerState, right: EulerState, gamma: float = GAMMA_MONOATOMIC) -> float:
    """Star pressure by bisection only; slow but independent of the Newton path."""
    _check_vacuum(left, right, gamma)
    hi = _upper_bracket(left, right, gamma)
    if _pressure_function(hi, left, right, gamma) == 0.0:
        return float(hi)
    return float(scipy.optimize.bisect(_pressure_function, 0.0, hi, args=(left, right, gamma),
                                       xtol=1e-16 * hi, rtol=4.0 * np.finfo(float).eps, maxiter=2000))


def wave_speeds(left: EulerState, right: EulerState, gamma: float = GAMMA_MONOATOMIC) -> Dict[str, object]:
    """
    Head and tail speeds of both nonlinear waves and the contact speed.

    A shock has head == tail; ``left_wave`` / ``right_wave`` name the wave type.
    """
    p_star, u_star = star_region(left, right, gamma)
    g1 = (gamma - 1.0) / (2.0 * gamma)
    g2 = (gamma + 1.0) / (2.0 * gamma)
    a_left, a_right = left.sound_speed(gamma), right.sound_speed(gamma)
    speeds: Dict[str, object] = {"contact": u_star, "p_star": p_star}

    if p_star > left.p:
        shock = left.u - a_left * np.sqrt(g2 * p_star / left.p + g1)
        speeds.update(left_wave="shock", left_head=shock, left_tail=shock)
    else:
        speeds.update(left_wave="rarefaction", left_head=left.u - a_left,
                      left_tail=u_star - a_left * (p_star / left.p) ** g1)

    if p_star > right.p:
        shock = right.u + a_right * np.sqrt(g2 * p_star / right.p + g1)
        speeds.update(right_wave="shock", right_head=shock, right_tail=shock)
    else:
        speeds.update(right_wave="rarefaction", right_head=right.u + a_right,
                      right_tail=u_star + a_right * (p_star / right.p) ** g1)
    return speeds


def sample_solution(left: EulerState, right: EulerState, gamma: float, x0: float, t: float,
                    xs: np.ndarray) -> EulerProfile:
    """Sample the self-similar solution at similarity coordinates (x - x0) / t."""
    if not t > 0:
        raise ValueError(f"sampling time must be positive, got {t}")
    xs = np.asarray(xs, dtype=float)
    s = (xs - x0) / t

    p_star, u_star = star_region(left, right, gamma)
    waves = wave_speeds(left, right, gamma)
    g1 = (gamma - 1.0) / (2.0 * gamma)
    g6 = (gamma - 1.0) / (gamma + 1.0)

    rho = np.empty_like(s)
    u = np.empty_like(s)
    p = np.empty_like(s)

    def fill(mask, state_rho, state_u, state_p):
        rho[mask], u[mask], p[mask] = state_rho, state_u, state_p

    for side, state, sign in (("left", left, -1.0), ("right", right, 1.0)):
        a = state.sound_speed(gamma)
        on_side = s <= u_star if side == "left" else s > u_star
        # sign * s grows away from the contact on both sides
        head, tail = waves[f"{side}_head"], waves[f"{side}_tail"]
        outside = on_side & (sign * s >= sign * head)
        fill(outside, state.rho, state.u, state.p)

        ratio = p_star / state.p
        if waves[f"{side}_wave"] == "shock":
            rho_star = state.rho * (ratio + g6) / (g6 * ratio + 1.0)
            fill(on_side & ~outside, rho_star, u_star, p_star)
        else:
            fill(on_side & (sign * s <= sign * tail), state.rho * ratio ** (1.0 / gamma), u_star, p_star)
            fan = on_side & (sign * s > sign * tail) & ~outside
            c = 2.0 / (gamma + 1.0) * (a - sign * 0.5 * (gamma - 1.0) * (state.u - s[fan]))
            u[fan] = 2.0 / (gamma + 1.0) * (-sign * a + 0.5 * (gamma - 1.0) * state.u + s[fan])
            rho[fan] = state.rho * (c / a) ** (2.0 / (gamma - 1.0))
            p[fan] = state.p * (c / a) ** (1.0 / g1)

    return EulerProfile(x=xs, rho=rho, u=u, p=p)
