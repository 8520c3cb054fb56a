"""Closed-form test objectives for exercising the tuners."""

from __future__ import annotations

import math

from .hyperspace import SearchSpace, Uniform

BRANIN_MINIMUM = 0.397887357729739


def branin(x: float, y: float) -> float:
    a, b, c = 1.0, 5.1 / (4 * math.pi**2), 5 / math.pi
    r, s, t = 6.0, 10.0, 1 / (8 * math.pi)
    return a * (y - b * x**2 + c * x - r) ** 2 + s * (1 - t) * math.cos(x) + s


def branin_space() -> SearchSpace:
    return {"x": Uniform(-5.0, 10.0), "y": Uniform(0.0, 15.0)}


def branin_objective(config) -> float:
    return branin(config["x"], config["y"])


def quadratic_space() -> SearchSpace:
    return {"x": Uniform(0.0, 1.0)}


def quadratic_objective(config) -> float:
    return (config["x"] - 0.3) ** 2
