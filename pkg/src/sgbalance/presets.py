"""Initial-condition presets: rest, a density bubble, band-limited noise."""

from __future__ import annotations

import numpy as np

from .calculus import SpectralWorkspace
from .config import RunConfig
from .dynamics import State


def _bubble(ws: SpectralWorkspace, amplitude: float, width: float) -> np.ndarray:
    """Gaussian density anomaly centered in the box, periodic via minimum image."""
    g = ws.grid
    X, Y, Z = g.cartesian_nodes()
    dx = (X - 0.5 * g.lx + 0.5 * g.lx) % g.lx - 0.5 * g.lx
    dy = (Y - 0.5 * g.ly + 0.5 * g.ly) % g.ly - 0.5 * g.ly
    dz = Z + 0.5
    r2 = (dx / width) ** 2 + (dy / width) ** 2 + (dz / (1.5 * width)) ** 2
    return np.broadcast_to(amplitude * np.exp(-r2), g.shape3).copy()


def _random_smooth(ws: SpectralWorkspace, amplitude: float, seed: int):
    """Band-limited random (rho_tilde, omega), modes <= 4, reproducible."""
    g = ws.grid
    rng = np.random.default_rng(seed)
    x = g.x[:, None, None]
    y = g.y[None, :, None]
    tau = (g.s * g.zeta)[None, None, :]
    rho = np.zeros(g.shape3)
    for _ in range(8):
        mx, my = int(rng.integers(0, 5)), int(rng.integers(0, 5))
        j = int(rng.integers(0, 3))
        rho += (amplitude * float(rng.normal()) / 8
                * np.cos(2 * np.pi * mx * x / g.lx + rng.uniform(0, 2 * np.pi))
                * np.cos(2 * np.pi * my * y / g.ly + rng.uniform(0, 2 * np.pi))
                * np.cos(j * np.pi * tau + rng.uniform(0, 2 * np.pi)))
    omega = np.zeros(g.shape2)
    for _ in range(8):
        while True:
            mx, my = int(rng.integers(0, 5)), int(rng.integers(0, 5))
            if mx or my:
                break
        omega += (amplitude * float(rng.normal()) / 8
                  * np.cos(2 * np.pi * mx * g.x[:, None] / g.lx + rng.uniform(0, 2 * np.pi))
                  * np.cos(2 * np.pi * my * g.y[None, :] / g.ly + rng.uniform(0, 2 * np.pi)))
    return rho, omega


def initial_state(cfg: RunConfig, ws: SpectralWorkspace) -> State:
    """Build the configured initial state; omega always satisfies its gauge."""
    g = ws.grid
    if cfg.init == "rest":
        return State(g.zeros3(), g.zeros2())
    if cfg.init == "thermal_bubble":
        return State(_bubble(ws, cfg.init_amplitude, cfg.init_width), g.zeros2())
    if cfg.init == "random_smooth":
        rho, omega = _random_smooth(ws, cfg.init_amplitude, cfg.seed)
        return State(rho, ws.project_zero_horizontal_mean(omega))
    raise ValueError(f"unknown preset {cfg.init!r}")
