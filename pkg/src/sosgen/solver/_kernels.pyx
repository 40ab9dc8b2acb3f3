# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled wave-stepping kernels.

Same arithmetic, in the same order, as the NumPy reference in ``_ref.py``
so the two backends agree bit-for-bit (the extension is built with FP
contraction disabled). Spatial derivatives are the 4th-order staggered
stencil (9/8, -1/24) with 2nd-order fallback at the outermost faces/cells.
"""

__version__ = "0.1.0"

cdef double C1 = 9.0 / 8.0
cdef double C2 = -1.0 / 24.0


def step_fields(
    double[:, ::1] p,
    double[:, ::1] vz,
    double[:, ::1] vx,
    double[:, ::1] cvz,
    double[:, ::1] cvx,
    double[:, ::1] cp,
    double[:, ::1] dp,
    double[:, ::1] dvz,
    double[:, ::1] dvx,
):
    """One leapfrog update of (vz, vx, p) with per-cell damping factors."""
    cdef Py_ssize_t nz = p.shape[0]
    cdef Py_ssize_t nx = p.shape[1]
    cdef Py_ssize_t i, j
    cdef double dgrad, div

    # vz faces: i between cells i and i+1
    for i in range(nz - 1):
        if 1 <= i <= nz - 3:
            for j in range(nx):
                dgrad = C1 * (p[i + 1, j] - p[i, j]) + C2 * (p[i + 2, j] - p[i - 1, j])
                vz[i, j] = (vz[i, j] + cvz[i, j] * dgrad) * dvz[i, j]
        else:
            for j in range(nx):
                dgrad = p[i + 1, j] - p[i, j]
                vz[i, j] = (vz[i, j] + cvz[i, j] * dgrad) * dvz[i, j]

    for i in range(nz):
        for j in range(nx - 1):
            if 1 <= j <= nx - 3:
                dgrad = C1 * (p[i, j + 1] - p[i, j]) + C2 * (p[i, j + 2] - p[i, j - 1])
            else:
                dgrad = p[i, j + 1] - p[i, j]
            vx[i, j] = (vx[i, j] + cvx[i, j] * dgrad) * dvx[i, j]

    for i in range(nz):
        for j in range(nx):
            if 2 <= i <= nz - 3:
                div = C1 * (vz[i, j] - vz[i - 1, j]) + C2 * (vz[i + 1, j] - vz[i - 2, j])
            elif i == 0:
                div = vz[0, j]
            elif i == 1:
                div = vz[1, j] - vz[0, j]
            elif i == nz - 2:
                div = vz[nz - 2, j] - vz[nz - 3, j]
            else:
                div = -vz[nz - 2, j]
            if 2 <= j <= nx - 3:
                div = div + (C1 * (vx[i, j] - vx[i, j - 1]) + C2 * (vx[i, j + 1] - vx[i, j - 2]))
            elif j == 0:
                div = div + vx[i, 0]
            elif j == 1:
                div = div + (vx[i, 1] - vx[i, 0])
            elif j == nx - 2:
                div = div + (vx[i, nx - 2] - vx[i, nx - 3])
            else:
                div = div + (-vx[i, nx - 2])
            p[i, j] = (p[i, j] + cp[i, j] * div) * dp[i, j]
