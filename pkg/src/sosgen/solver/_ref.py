"""Pure-NumPy wave-stepping kernels (fallback for the compiled extension).

Spatial derivatives use the 4th-order staggered stencil (9/8, -1/24),
falling back to 2nd order on the outermost faces/cells; faces outside the
grid carry zero velocity (rigid box; the sponge handles absorption). The
compiled kernel mirrors these expressions term for term.
"""

import numpy as np

C1 = 9.0 / 8.0
C2 = -1.0 / 24.0


def step_fields(p, vz, vx, cvz, cvx, cp, dp, dvz, dvx):
    """One leapfrog update of (vz, vx, p) with per-cell damping factors."""
    dpz = np.empty_like(vz)
    dpz[1:-1, :] = C1 * (p[2:-1, :] - p[1:-2, :]) + C2 * (p[3:, :] - p[:-3, :])
    dpz[0, :] = p[1, :] - p[0, :]
    dpz[-1, :] = p[-1, :] - p[-2, :]
    vz += cvz * dpz
    vz *= dvz

    dpx = np.empty_like(vx)
    dpx[:, 1:-1] = C1 * (p[:, 2:-1] - p[:, 1:-2]) + C2 * (p[:, 3:] - p[:, :-3])
    dpx[:, 0] = p[:, 1] - p[:, 0]
    dpx[:, -1] = p[:, -1] - p[:, -2]
    vx += cvx * dpx
    vx *= dvx

    # cell i owns faces i (below/right) and i-1 (above/left); the face
    # arrays have one fewer row/column than p
    div = np.empty_like(p)
    div[2:-2, :] = C1 * (vz[2:-1, :] - vz[1:-2, :]) + C2 * (vz[3:, :] - vz[:-3, :])
    div[0, :] = vz[0, :]
    div[1, :] = vz[1, :] - vz[0, :]
    div[-2, :] = vz[-1, :] - vz[-2, :]
    div[-1, :] = -vz[-1, :]

    dvx_part = np.empty_like(p)
    dvx_part[:, 2:-2] = C1 * (vx[:, 2:-1] - vx[:, 1:-2]) + C2 * (vx[:, 3:] - vx[:, :-3])
    dvx_part[:, 0] = vx[:, 0]
    dvx_part[:, 1] = vx[:, 1] - vx[:, 0]
    dvx_part[:, -2] = vx[:, -1] - vx[:, -2]
    dvx_part[:, -1] = -vx[:, -1]

    div += dvx_part
    p += cp * div
    p *= dp
