"""Compiled loops for the per-step hot path.

These reproduce :func:`ymh.energy.tension` and :func:`ymh.energy.energy`
node by node; the numpy versions stay the reference and the test-suite
compares the two.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _links(a, h):
    n = a.shape[1]
    cs = np.empty((2, n, n))
    sn = np.empty((2, n, n))
    for k in range(2):
        for i in range(n):
            for j in range(n):
                cs[k, i, j] = np.cos(h * a[k, i, j])
                sn[k, i, j] = np.sin(h * a[k, i, j])
    return cs, sn


@njit(cache=True)
def tension_into(a, phi, h, sphere, c, tau1, tau2):
    n = a.shape[1]
    d = phi.shape[2]
    cs, sn = _links(a, h)
    f = np.empty((n, n))
    for i in range(n):
        ip = (i + 1) % n
        for j in range(n):
            jp = (j + 1) % n
            f[i, j] = (a[1, ip, j] - a[1, i, j] - a[0, i, jp] + a[0, i, j]) / h
    inv_h2 = 1.0 / (h * h)
    g = np.empty(3)
    for i in range(n):
        ip = (i + 1) % n
        im = (i - 1) % n
        for j in range(n):
            jp = (j + 1) % n
            jm = (j - 1) % n
            # curvature part of tau1: (bd_2 F, -bd_1 F)
            t1 = (f[i, j] - f[i, jm]) / h
            t2 = -(f[i, j] - f[im, j]) / h
            for k in range(d):
                g[k] = -4.0 * phi[i, j, k]
            for ax in range(2):
                if ax == 0:
                    fi, fj, bi, bj = ip, j, im, j
                else:
                    fi, fj, bi, bj = i, jp, i, jm
                cf = cs[ax, i, j]
                sf = sn[ax, i, j]
                q0 = phi[fi, fj, 0]
                q1 = phi[fi, fj, 1]
                p0 = cf * q0 - sf * q1
                p1 = sf * q0 + cf * q1
                # <psi - phi, X(psi)> with X(psi) = (-psi_1, psi_0, 0)
                cur = (-(p0 - phi[i, j, 0]) * p1 + (p1 - phi[i, j, 1]) * p0) / h
                if ax == 0:
                    t1 += cur
                else:
                    t2 += cur
                cb = cs[ax, bi, bj]
                sb = -sn[ax, bi, bj]
                r0 = phi[bi, bj, 0]
                r1 = phi[bi, bj, 1]
                g[0] += p0 + cb * r0 - sb * r1
                g[1] += p1 + sb * r0 + cb * r1
                if d == 3:
                    g[2] += phi[fi, fj, 2] + phi[bi, bj, 2]
            tau1[0, i, j] = t1
            tau1[1, i, j] = t2
            for k in range(d):
                g[k] = -g[k] * inv_h2
            if sphere:
                g[2] += phi[i, j, 2] - c
                dot = g[0] * phi[i, j, 0] + g[1] * phi[i, j, 1] + g[2] * phi[i, j, 2]
                for k in range(3):
                    tau2[i, j, k] = g[k] - dot * phi[i, j, k]
            else:
                mu = 0.5 * (phi[i, j, 0] ** 2 + phi[i, j, 1] ** 2) - c
                tau2[i, j, 0] = g[0] + mu * phi[i, j, 0]
                tau2[i, j, 1] = g[1] + mu * phi[i, j, 1]


@njit(cache=True)
def energy_terms(a, phi, h, sphere, c):
    n = a.shape[1]
    d = phi.shape[2]
    ef = 0.0
    ek = 0.0
    ep = 0.0
    for i in range(n):
        ip = (i + 1) % n
        for j in range(n):
            jp = (j + 1) % n
            fv = (a[1, ip, j] - a[1, i, j] - a[0, i, jp] + a[0, i, j]) / h
            ef += fv * fv
            for ax in range(2):
                if ax == 0:
                    fi, fj = ip, j
                else:
                    fi, fj = i, jp
                cf = np.cos(h * a[ax, i, j])
                sf = np.sin(h * a[ax, i, j])
                q0 = phi[fi, fj, 0]
                q1 = phi[fi, fj, 1]
                e0 = cf * q0 - sf * q1 - phi[i, j, 0]
                e1 = sf * q0 + cf * q1 - phi[i, j, 1]
                ek += e0 * e0 + e1 * e1
                if d == 3:
                    e2 = phi[fi, fj, 2] - phi[i, j, 2]
                    ek += e2 * e2
            if sphere:
                mu = phi[i, j, 2] - c
            else:
                mu = 0.5 * (phi[i, j, 0] ** 2 + phi[i, j, 1] ** 2) - c
            ep += mu * mu
    w = h * h
    return w * ef, ek, w * ep


def tension_arrays(a, phi, h, sphere, c):
    a = np.ascontiguousarray(a, dtype=np.float64)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    tau1 = np.empty_like(a)
    tau2 = np.empty_like(phi)
    tension_into(a, phi, float(h), bool(sphere), float(c), tau1, tau2)
    return tau1, tau2


def total_energy(a, phi, h, sphere, c) -> float:
    a = np.ascontiguousarray(a, dtype=np.float64)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    ef, ek, ep = energy_terms(a, phi, float(h), bool(sphere), float(c))
    return ef + ek + ep
