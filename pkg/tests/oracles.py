"""Independent reference computations used by the tests.

These deliberately avoid the closed forms and solver code under test: the
kinetics oracles integrate the rate equations with fixed-step RK4, and the
transport oracles are analytic advection/diffusion solutions.
"""

import numpy as np


def rk4_annihilation(a, b, k, dt, n=200_000):
    """Integrate dx/dt = k (a - x)(b - x), x(0) = 0, with n RK4 steps.

    Time is normalized to s = t/dt so a physical step of dt/n is used; at the
    default n this is at or below 1e-7 s for every case the tests draw.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    K = np.asarray(k * dt, dtype=float)
    x = np.zeros_like(a)
    h = 1.0 / n

    def rate(x):
        return K * (a - x) * (b - x)

    for _ in range(n):
        k1 = rate(x)
        k2 = rate(x + 0.5 * h * k1)
        k3 = rate(x + 0.5 * h * k2)
        k4 = rate(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def rk4_catalytic(cat, amp, k, dt, n=200_000):
    """Integrate d(amp)/dt = -k * cat * amp with n RK4 steps; returns amp'."""
    cat = np.asarray(cat, dtype=float)
    amp = np.asarray(amp, dtype=float)
    K = np.asarray(k * dt, dtype=float)
    y = amp.copy()
    h = 1.0 / n

    def rate(y):
        return -K * cat * y

    for _ in range(n):
        k1 = rate(y)
        k2 = rate(y + 0.5 * h * k1)
        k3 = rate(y + 0.5 * h * k2)
        k4 = rate(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def gaussian(x, center, sigma, amplitude=1.0):
    return amplitude * np.exp(-((x - center) ** 2) / (2.0 * sigma**2))


def advection_l1_error(nc, sigma=0.08, u=1.0, t_final=0.4):
    """L1 error of the solver against an exactly shifted Gaussian."""
    from fluidic.transport import ChannelState, transport_step

    dx = 1.0 / nc
    x = (np.arange(nc) + 0.5) * dx
    state = ChannelState(("A",), gaussian(x, 0.25, sigma)[None, :].copy(), dx)
    dt = 0.5 * dx / u
    steps = int(round(t_final / dt))
    for _ in range(steps):
        state = transport_step(state, u, 0.0, dt, 0.0)
    exact = gaussian(x, 0.25 + u * steps * dt, sigma)
    return float(np.abs(state.conc[0] - exact).sum() * dx)


def diffusion_l1_error(nc, sigma0=0.05, d=1e-3, t_final=2.0):
    """L1 error against the analytically spread Gaussian."""
    from fluidic.transport import ChannelState, transport_step

    dx = 1.0 / nc
    x = (np.arange(nc) + 0.5) * dx
    state = ChannelState(("A",), gaussian(x, 0.5, sigma0)[None, :].copy(), dx)
    dt = 0.4 * dx * dx / (2.0 * d)
    steps = int(round(t_final / dt))
    dt = t_final / steps
    for _ in range(steps):
        state = transport_step(state, 0.0, d, dt, 0.0)
    st = np.sqrt(sigma0**2 + 2.0 * d * t_final)
    exact = gaussian(x, 0.5, st, amplitude=sigma0 / st)
    return float(np.abs(state.conc[0] - exact).sum() * dx)


def observed_orders(errors):
    return [float(np.log2(errors[i] / errors[i + 1]))
            for i in range(len(errors) - 1)]
