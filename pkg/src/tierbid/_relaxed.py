"""Smooth relaxed two-stage model and a spectral projected-gradient inner solver.

Decision variables are reparameterised on the unit box::

    A = a,  R = a r,  H_k = a h_k,  pi_hot_k = H_k r s_k,  pi_cold_k = H_k (1 - r s_k)

so ``R <= A``, ``H <= A``, ``pi_hot <= R`` and ``pi_cold + pi_hot = H`` hold for
every box point and projection is a clip. Capacity, stability and latency
constraints go through an augmented Lagrangian. The latency constraint is used
in the form ``T_i <= l_i H_i``, which coincides with ``T_i <= l_i`` at integral
``H`` and stays meaningful when ``H`` is fractional.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core_model import MEGABITS_PER_MB


@dataclass
class ModelData:
    size_mb: np.ndarray          # (I,)
    storage_bid: np.ndarray      # (I,)
    access_weight: np.ndarray    # (K, I) objective weight on H
    arrival: np.ndarray          # (K, I) requests per second
    latency_s: np.ndarray        # (K, I)
    capacities: np.ndarray       # (2,) restricted
    rates: np.ndarray            # (2,) restricted
    stability_margin: float
    cold_cost: float
    hot_cost: float
    storage_terms: bool = True
    capacity_terms: bool = True
    barrier_fraction: float = 0.98

    @property
    def n(self) -> int:
        return len(self.size_mb)

    @property
    def k(self) -> int:
        return self.access_weight.shape[0]


class RelaxedModel:
    """Merit function ``-F/scale + AL(constraints)`` with its analytic gradient."""

    def __init__(self, data: ModelData):
        self.d = data
        n, k = data.n, data.k
        self.n, self.k = n, k
        self.bits = MEGABITS_PER_MB * data.size_mb
        self.load_coef = data.arrival * self.bits[None, :]              # (K, I)
        self.sq_coef = data.arrival * self.bits[None, :] ** 2           # (K, I)
        self.service = self.bits[None, :, None] / data.rates[None, None, :]   # (1, I, 2)
        self.limit = (1.0 - data.stability_margin) * data.rates        # (2,)
        lin_a = data.storage_bid - 2 * data.cold_cost * data.size_mb
        lin_r = (data.cold_cost - data.hot_cost) * data.size_mb
        coefs = [np.abs(data.access_weight).max(initial=0.0)]
        if data.storage_terms:
            coefs += [np.abs(lin_a).max(initial=0.0), np.abs(lin_r).max(initial=0.0)]
        self.scale = max(max(coefs), 1e-9)
        self.lin_a, self.lin_r = lin_a, lin_r
        # per-variable penalty shape: each variable's own objective magnitude
        acc = np.abs(data.access_weight)
        floor = 1e-3 * self.scale
        own = np.abs(lin_a) + np.abs(lin_r) if data.storage_terms else np.zeros(n)
        self.coef_shape = (np.maximum(own + acc.sum(axis=0), floor) / self.scale,
                           np.maximum(np.abs(lin_r) + acc.sum(axis=0), floor) / self.scale
                           if data.storage_terms else np.maximum(acc.sum(axis=0), floor) / self.scale,
                           np.maximum(acc, floor) / self.scale)
        self.pen_shape = None
        self.alpha = 10.0
        self.pen_weight = 0.0
        self.rho = 10.0
        ncon = (2 if data.capacity_terms else 0) + 2 * k + k * n
        self.y = np.zeros(ncon)
        self.size = 2 * n + 2 * k * n

    # -- packing -----------------------------------------------------------
    def split(self, x):
        n, k = self.n, self.k
        a = x[:n]
        r = x[n:2 * n]
        h = x[2 * n:2 * n + k * n].reshape(k, n)
        s = x[2 * n + k * n:].reshape(k, n)
        return a, r, h, s

    def pack(self, a, r, h, s):
        return np.concatenate([a, r, np.ravel(h), np.ravel(s)])

    def derived(self, x):
        a, r, h, s = self.split(x)
        A = a
        R = a * r
        H = a[None, :] * h
        P2 = H * r[None, :] * s
        P1 = H - P2
        return A, R, H, P1, P2

    # -- queueing pieces ---------------------------------------------------
    def _phi(self, f):
        """``1/(mu (mu - f))`` with a quadratic extension past the barrier point."""
        mu = self.d.rates
        f0 = self.d.barrier_fraction * mu
        inside = f <= f0
        if inside.all():
            gap = mu - f
            phi = 1.0 / (mu * gap)
            return phi, phi / gap
        fc = np.where(inside, f, f0)
        gap = mu - fc
        phi = 1.0 / (mu * gap)
        dphi = phi / gap
        ddphi = 2.0 * dphi / gap
        ext = f - fc
        return phi + dphi * ext + 0.5 * ddphi * ext ** 2, dphi + ddphi * ext

    def schedule(self, H, rs):
        """Scheduling tensor of shape (K, I, 2) from H and the hot fraction ``r s``."""
        P = np.empty(H.shape + (2,))
        P[:, :, 1] = H * rs
        P[:, :, 0] = H - P[:, :, 1]
        return P

    def queue(self, P):
        """Offered load, squared-size load, waiting time and latency for pi of shape (K, I, 2)."""
        f = (self.load_coef[:, :, None] * P).sum(axis=1)
        hq = (self.sq_coef[:, :, None] * P).sum(axis=1)
        phi, dphi = self._phi(f)
        W = hq * phi
        T = (P * (self.service + W[:, None, :])).sum(axis=2)
        return f, hq, phi, dphi, W, T

    # -- constraints -------------------------------------------------------
    def constraints(self, x):
        a, r, h, s = self.split(x)
        A, R, H = a, a * r, a[None, :] * h
        P = self.schedule(H, r[None, :] * s)
        f, hq, phi, dphi, W, T = self.queue(P)
        parts = []
        if self.d.capacity_terms:
            C = self.d.capacities
            parts.append([(np.dot(self.d.size_mb, 2 * A - R) - C[0]) / C[0],
                          (np.dot(self.d.size_mb, R) - C[1]) / C[1]])
        parts.append(((f - self.limit[None, :]) / self.limit[None, :]).ravel())
        parts.append(((T - self.d.latency_s * H) / self.d.latency_s).ravel())
        return np.concatenate([np.ravel(p) for p in parts])

    def max_violation(self, x) -> float:
        return float(max(0.0, np.max(self.constraints(x), initial=0.0)))

    # -- merit -------------------------------------------------------------
    def _penalty(self, v, alpha, weights):
        """``sum w g1(v)`` and its derivative in one pass (two logistic evaluations)."""
        e1 = expit(-alpha * v)
        e2 = expit(-alpha * (v - 1.0))
        shift = 0.5 - expit(-alpha)
        val = float((weights * (e1 - e2 + shift)).sum())
        grad = weights * alpha * (e2 * (1.0 - e2) - e1 * (1.0 - e1))
        return val, grad

    def _pen_weights(self):
        if self.pen_shape is None:
            return 1.0
        wA, wR, wH = self.pen_shape
        return np.concatenate([wA, wR, np.ravel(wH)])

    def objective(self, x, alpha=None, weight=None) -> float:
        """Penalised profit F (cents), not scaled."""
        alpha = self.alpha if alpha is None else alpha
        weight = self.pen_weight if weight is None else weight
        A, R, H, _, _ = self.derived(x)
        val = float((self.d.access_weight * H).sum())
        if self.d.storage_terms:
            val += float(self.lin_a @ A + self.lin_r @ R)
        if weight > 0:
            v = np.concatenate([A, R, H.ravel()])
            val += weight * self._penalty(v, alpha, self._pen_weights())[0]
        return val

    def merit(self, x):
        d = self.d
        n, k = self.n, self.k
        a, r, h, s = self.split(x)
        A, R, H = a, a * r, a[None, :] * h
        rs = r[None, :] * s
        P = self.schedule(H, rs)
        f, hq, phi, dphi, W, T = self.queue(P)
        sc = self.scale

        # objective
        F = float((d.access_weight * H).sum())
        gA = np.zeros(n)
        gR = np.zeros(n)
        gH = -d.access_weight / sc
        if d.storage_terms:
            F += float(self.lin_a @ A + self.lin_r @ R)
            gA -= self.lin_a / sc
            gR -= self.lin_r / sc
        if self.pen_weight > 0:
            w = self.pen_weight
            v = np.concatenate([A, R, H.ravel()])
            pval, pgrad = self._penalty(v, self.alpha, self._pen_weights())
            F += w * pval
            pgrad *= w / sc
            gA -= pgrad[:n]
            gR -= pgrad[n:2 * n]
            gH = gH - pgrad[2 * n:].reshape(k, n)
        val = -F / sc
        gP = np.zeros((k, n, 2))

        # constraints
        rho, y = self.rho, self.y
        pos = 0
        cons = []
        if d.capacity_terms:
            C = d.capacities
            c_cold = (d.size_mb @ (2 * A - R) - C[0]) / C[0]
            c_hot = (d.size_mb @ R - C[1]) / C[1]
            cons += [c_cold, c_hot]
            w_cold = max(0.0, y[0] + rho * c_cold)
            w_hot = max(0.0, y[1] + rho * c_hot)
            gA += w_cold * 2 * d.size_mb / C[0]
            gR += -w_cold * d.size_mb / C[0] + w_hot * d.size_mb / C[1]
            pos = 2
        c_stab = (f - self.limit[None, :]) / self.limit[None, :]               # (K, 2)
        w_stab = np.maximum(0.0, y[pos:pos + 2 * k].reshape(k, 2) + rho * c_stab)
        gP += (w_stab / self.limit[None, :])[:, None, :] * self.load_coef[:, :, None]
        pos += 2 * k
        c_lat = (T - d.latency_s * H) / d.latency_s                           # (K, I)
        w_lat = np.maximum(0.0, y[pos:].reshape(k, n) + rho * c_lat)
        u = w_lat / d.latency_s
        gH = gH - w_lat
        U = (u[:, :, None] * P).sum(axis=1)                                   # (K, 2)
        gP += u[:, :, None] * (self.service + W[:, None, :])
        gP += U[:, None, :] * (self.sq_coef[:, :, None] * phi[:, None, :]
                               + hq[:, None, :] * dphi[:, None, :] * self.load_coef[:, :, None])
        cons_all = np.concatenate([np.asarray(cons, dtype=float), c_stab.ravel(), c_lat.ravel()])
        wv = np.maximum(0.0, y + rho * cons_all)
        val += float((wv * wv - y * y).sum()) / (2 * rho)

        # chain rule back to (a, r, h, s)
        gP1, gP2 = gP[:, :, 0], gP[:, :, 1]
        mix = gP2 * rs + gP1 * (1 - rs)
        ga = gA + gR * r + ((gH + mix) * h).sum(axis=0)
        gr = gR * a + ((gP2 - gP1) * H * s).sum(axis=0)
        gh = a[None, :] * (gH + mix)
        gs = (gP2 - gP1) * H * r[None, :]
        return val, self.pack(ga, gr, gh, gs)

    def update_multipliers(self, x):
        c = self.constraints(x)
        self.y = np.maximum(0.0, self.y + self.rho * c)
        return float(max(0.0, np.max(c, initial=0.0)))


@dataclass
class SPGResult:
    x: np.ndarray
    value: float
    iterations: int
    pg_norm: float


def spg(fun, x0, lb, ub, max_iters=400, tol=1e-6, memory=10, armijo=1e-4,
        step_min=1e-12, step_max=1e12) -> SPGResult:
    """Spectral projected gradient with nonmonotone backtracking on a box."""
    x = np.clip(x0, lb, ub)
    fx, gx = fun(x)
    hist = [fx]
    pg = np.clip(x - gx, lb, ub) - x
    pg_norm = float(np.max(np.abs(pg), initial=0.0))
    lam = 1.0 / max(pg_norm, 1e-12)
    it = 0
    while it < max_iters and pg_norm > tol:
        it += 1
        d = np.clip(x - lam * gx, lb, ub) - x
        gtd = float(np.dot(gx, d))
        if gtd >= 0:
            break
        fref = max(hist[-memory:])
        t = 1.0
        while True:
            xn = x + t * d
            fn, gn = fun(xn)
            if fn <= fref + armijo * t * gtd or t < 1e-10:
                break
            t *= 0.5
        sx = xn - x
        sy = gn - gx
        sty = float(np.dot(sx, sy))
        lam = float(np.clip(np.dot(sx, sx) / sty, step_min, step_max)) if sty > 0 else step_max
        x, fx, gx = xn, fn, gn
        hist.append(fx)
        pg = np.clip(x - gx, lb, ub) - x
        pg_norm = float(np.max(np.abs(pg), initial=0.0))
    return SPGResult(x, fx, it, pg_norm)
