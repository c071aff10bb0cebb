"""Compiled loops for the explicit time step.

Each kernel visits nodes and links in a fixed order, so results are
bit-reproducible for a given input.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def link_pass(psi, ax, ay, kh, g, h, Ux, Uy, jx, jy, divj, lsum):
    """Link phases, supercurrent, its weighted divergence and the neighbour sum.

    ``lsum`` receives the covariant neighbour sum times h^2, with the
    insulator mirror ghosts doubling the inward neighbour.
    """
    nx, ny = psi.shape
    inv = g / kh
    for i in range(nx):
        for j in range(ny):
            divj[i, j] = 0.0
            lsum[i, j] = 0.0
    for i in range(nx - 1):
        for j in range(ny):
            th = kh * ax[i, j]
            u = complex(math.cos(th), -math.sin(th))
            Ux[i, j] = u
            a = psi[i, j]
            b = psi[i + 1, j]
            fwd = u * b
            bwd = u.conjugate() * a
            cur = inv * (a.conjugate() * fwd).imag
            jx[i, j] = cur
            w = 0.5 if (j == 0 or j == ny - 1) else 1.0
            divj[i, j] += w * cur
            divj[i + 1, j] -= w * cur
            lsum[i, j] += fwd
            lsum[i + 1, j] += bwd
            if i == 0:
                lsum[0, j] += fwd
            if i == nx - 2:
                lsum[nx - 1, j] += bwd
    for i in range(nx):
        w = 0.5 if (i == 0 or i == nx - 1) else 1.0
        for j in range(ny - 1):
            th = kh * ay[i, j]
            u = complex(math.cos(th), -math.sin(th))
            Uy[i, j] = u
            a = psi[i, j]
            b = psi[i, j + 1]
            fwd = u * b
            cur = inv * (a.conjugate() * fwd).imag
            jy[i, j] = cur
            divj[i, j] += w * cur
            divj[i, j + 1] -= w * cur
            lsum[i, j] += fwd
            lsum[i, j + 1] += u.conjugate() * a
    # divide by the dual-cell area (in units of h^2) and h
    for i in range(nx):
        vi = 0.5 if (i == 0 or i == nx - 1) else 1.0
        for j in range(ny):
            vj = 0.5 if (j == 0 or j == ny - 1) else 1.0
            divj[i, j] /= vi * vj * h


@nb.njit(cache=True)
def psi_pass(psi, lsum, phi, contact, dt, h2, kappa, out):
    """Rotated explicit update of psi; returns (max |z|, max |dpsi|).

    The explicit Euler increment is dt*L - z*psi with L the neighbour sum
    and z = dt*(4/h^2 - kappa^2 (1-|psi|^2)) + i dt kappa phi.  Multiplying
    it by the unit factor conj(z)/|z| gives

        psi_new = (1 - |z|) psi + (conj(z)/|z|) dt L.

    Fixed points are unchanged, and since |dt L| <= 4 dt/h^2 max|psi| the
    modulus stays below one when 4 dt/h^2 + 2 dt kappa^2 <= 1.  The rotation
    angle is O(kappa phi h^2), the order of the spatial error.
    """
    nx, ny = psi.shape
    zmax = 0.0
    dmax = 0.0
    k2 = kappa * kappa
    for i in range(nx):
        for j in range(ny):
            if contact[i, j]:
                out[i, j] = 0.0
                d = abs(psi[i, j])
                if d > dmax:
                    dmax = d
                continue
            p = psi[i, j]
            rho2 = p.real * p.real + p.imag * p.imag
            zr = dt * (4.0 / h2 - k2 * (1.0 - rho2))
            zi = dt * kappa * phi[i, j]
            m = math.hypot(zr, zi)
            if m > zmax:
                zmax = m
            inc = dt * lsum[i, j] / h2
            if m > 0.0:
                rot = complex(zr / m, -zi / m)
                new = (1.0 - m) * p + rot * inc
            else:
                new = p + inc
            out[i, j] = new
            d = abs(new - p)
            if d > dmax:
                dmax = d
    return zmax, dmax


@nb.njit(cache=True)
def field_pass(ax, ay, jx, jy, phi, Bext, dt, c, h, axn, ayn):
    """Explicit update of every link; returns max |dA|.

    ``Bext`` holds the plaquette fields with one ghost row and column on
    each side; the perpendicular gradient of B uses it on boundary links.
    """
    nx = ay.shape[0]
    ny = ax.shape[1]
    dmax = 0.0
    for i in range(nx - 1):
        for j in range(ny):
            rhs = c * (jx[i, j] - (Bext[i + 1, j + 1] - Bext[i + 1, j]) / h) \
                - (phi[i + 1, j] - phi[i, j]) / h
            d = dt * rhs
            axn[i, j] = ax[i, j] + d
            if abs(d) > dmax:
                dmax = abs(d)
    for i in range(nx):
        for j in range(ny - 1):
            rhs = c * (jy[i, j] + (Bext[i + 1, j + 1] - Bext[i, j + 1]) / h) \
                - (phi[i, j + 1] - phi[i, j]) / h
            d = dt * rhs
            ayn[i, j] = ay[i, j] + d
            if abs(d) > dmax:
                dmax = abs(d)
    return dmax


@nb.njit(cache=True)
def curl_pass(ax, ay, h, fb, ft, fl, fr, Bext):
    """Plaquette fields plus ghosts reflecting them about the face values.

    A ghost takes 2*f - B so that the mean of a boundary plaquette and its
    ghost equals the prescribed face value f.
    """
    nx = ay.shape[0]
    ny = ax.shape[1]
    for i in range(nx - 1):
        for j in range(ny - 1):
            Bext[i + 1, j + 1] = (ay[i + 1, j] - ay[i, j] - ax[i, j + 1] + ax[i, j]) / h
    for i in range(nx - 1):
        Bext[i + 1, 0] = 2.0 * fb[i] - Bext[i + 1, 1]
        Bext[i + 1, ny] = 2.0 * ft[i] - Bext[i + 1, ny - 1]
    for j in range(ny - 1):
        Bext[0, j + 1] = 2.0 * fl[j] - Bext[1, j + 1]
        Bext[nx, j + 1] = 2.0 * fr[j] - Bext[nx - 1, j + 1]
