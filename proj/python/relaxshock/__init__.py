"""Stability analysis of relaxation shock profiles (C++ core)."""

from ._relaxshock import *  # noqa: F401,F403
from ._relaxshock import RelaxError, ConfigError, reference_config, run_checks


def burgers_reference():
    """Model, shock and profile of the Jin-Xin Burgers shock u- = 1, u+ = -1, a = 2."""
    model = make_jin_xin(1, 2.0, [0.0, 0.0, 0.5])  # noqa: F405
    shock = make_shock(model, [1.0], [-1.0], 0.0)  # noqa: F405
    return model, shock, solve_profile(model, shock)  # noqa: F405
