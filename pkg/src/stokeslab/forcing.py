"""Analytic forcing recipes sampled on grid nodes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import MacField, VertexField, curl_h
from .geometry import Grid

RECIPES = ("constant", "gradient", "vortex", "crossflow", "indicator")


def _bump(x, y, center, radius):
    """(1 - r^2/R^2)^3 inside the disk, 0 outside: C^2 with compact support."""
    r2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2) / radius**2
    return np.where(r2 < 1, (1 - r2) ** 3, 0.0)


@dataclass(frozen=True)
class Forcing:
    """A named forcing recipe.

    constant   vector ``value`` (scalar: ``value[0]``)
    gradient   gradient of a Gaussian ``exp(-|x-c|^2 / width^2)`` (scalar: the Gaussian)
    vortex     ``curl_h`` of a compact bump stream function of radius ``radius``;
               exactly divergence free on the grid (scalar: the bump)
    crossflow  ``(0, cos(2 pi (x - x0) / period))`` when ``normal == "y"``: a flow
               across a horizontal slit, uniform along the normal direction,
               reversing sign along the slit; ``normal == "x"`` swaps the roles
    indicator  ``value`` times the indicator of the open disk (center, radius)
    """

    name: str = "constant"
    value: tuple = (1.0, 0.0)
    center: tuple = (0.5, 0.5)
    radius: float = 0.25
    width: float = 0.2
    normal: str = "y"
    period: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if self.name not in RECIPES:
            raise ValueError(f"unknown forcing {self.name!r}; expected one of {RECIPES}")

    def vector(self, grid: Grid) -> MacField:
        n = self.name
        if n == "constant":
            a, b = self.value
            return MacField.from_function(grid, lambda x, y: a + 0 * x, lambda x, y: b + 0 * x)
        if n == "gradient":
            cx, cy = self.center
            w2 = self.width**2

            def g(x, y):
                return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / w2)

            return MacField.from_function(
                grid, lambda x, y: -2 * (x - cx) / w2 * g(x, y), lambda x, y: -2 * (y - cy) / w2 * g(x, y)
            )
        if n == "vortex":
            return curl_h(self.scalar(grid))
        if n == "crossflow":
            k = 2 * np.pi / self.period
            if self.normal == "y":
                return MacField.from_function(grid, lambda x, y: 0 * x, lambda x, y: np.cos(k * (x - self.x0)))
            return MacField.from_function(grid, lambda x, y: np.cos(k * (y - self.x0)), lambda x, y: 0 * x)
        if n == "indicator":
            a, b = self.value
            inside = self._inside
            return MacField.from_function(grid, lambda x, y: a * inside(x, y), lambda x, y: b * inside(x, y))
        raise AssertionError(n)

    def scalar(self, grid: Grid) -> VertexField:
        x, y = grid.mesh("vertex")
        n = self.name
        if n == "constant":
            vals = self.value[0] + 0 * x
        elif n == "gradient":
            cx, cy = self.center
            vals = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / self.width**2)
        elif n == "vortex":
            vals = _bump(x, y, self.center, self.radius)
        elif n == "indicator":
            vals = self.value[0] * self._inside(x, y)
        else:
            raise ValueError(f"forcing {n!r} has no scalar version")
        return VertexField(grid, vals)

    def _inside(self, x, y):
        r2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
        return (r2 < self.radius**2).astype(float)
