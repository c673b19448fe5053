"""Scalar fields u(x, t) with analytic spatial and temporal partials.

Every field exposes ``jet(x, t, order)`` returning two stacked arrays
``D[n] = d^n u / dx^n`` and ``Dt[n] = d/dt d^n u / dx^n`` for
``n = 0..order``.
"""
from __future__ import annotations

from math import comb

import numpy as np
from numpy.polynomial.hermite import hermval

from .errors import CapabilityError


class SpaceTimeField:
    max_x_order: int = 0

    def jet(self, x, t, order: int):
        raise NotImplementedError

    def _need(self, order):
        if order > self.max_x_order:
            raise CapabilityError(
                f"{type(self).__name__} provides x-partials up to order {self.max_x_order}, "
                f"{order} requested")

    def __call__(self, x, t):
        return self.jet(x, t, 0)[0][0]

    def dx(self, x, t, order: int = 1):
        return self.jet(x, t, order)[0][order]

    def dt(self, x, t):
        return self.jet(x, t, 0)[1][0]

    def sample(self, grid, t) -> np.ndarray:
        return np.asarray(self(grid.x, t), dtype=float)


class TauFunction:
    """``tau(x, t) = sum_j exp(logc_j + k_j x + w_j t)`` with all terms positive."""

    def __init__(self, k, w, logc):
        self.k = np.asarray(k, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.logc = np.asarray(logc, dtype=float)

    def log(self, x, t):
        return self._softmax(x, t)[0]

    def _softmax(self, x, t):
        theta = np.asarray(x, dtype=float)[..., None] * self.k + (
            np.asarray(t, dtype=float)[..., None] * self.w + self.logc)
        top = theta.max(axis=-1, keepdims=True)
        e = np.exp(theta - top)
        s = e.sum(axis=-1, keepdims=True)
        return (top + np.log(s))[..., 0], e / s

    def log_jet(self, x, t, order: int, with_t: bool = True):
        """x-cumulants of the softmax weights and their t-derivatives.

        ``d^n ln tau / dx^n`` is the n-th cumulant of ``k`` under weights
        ``exp(theta_j) / tau``; the t-derivatives follow from
        ``d weight_j / dt = weight_j (w_j - <w>)``.  Moments are taken about
        the mean of ``k`` over terms, which leaves cumulants of order >= 2
        unchanged.
        """
        logtau, p = self._softmax(x, t)
        shift = self.k.mean()
        pw = np.vander(self.k - shift, order + 1, increasing=True)
        m = np.moveaxis(p @ pw, -1, 0)
        wbar = p @ self.w
        kap = [logtau]
        for n in range(1, order + 1):
            val = m[n].copy()
            for j in range(1, n):
                val -= comb(n - 1, j - 1) * kap[j] * m[n - j]
            kap.append(val)
        if not with_t:
            if order >= 1:
                kap[1] = kap[1] + shift
            return np.array(kap), None
        mt = np.moveaxis(p @ (pw * self.w[:, None]), -1, 0) - m * wbar
        kapt = [wbar]
        for n in range(1, order + 1):
            valt = mt[n].copy()
            for j in range(1, n):
                c = comb(n - 1, j - 1)
                valt -= c * (kapt[j] * m[n - j] + kap[j] * mt[n - j])
            kapt.append(valt)
        if order >= 1:
            kap[1] = kap[1] + shift
        return np.array(kap), np.array(kapt)


class LogTauField(SpaceTimeField):
    """``offset + sum_i coef_i d^shift/dx^shift ln tau_i``."""

    max_x_order = 7

    def __init__(self, terms, shift: int, offset: float = 0.0):
        self.terms = [(float(c), tau) for c, tau in terms]
        self.shift = int(shift)
        self.offset = float(offset)

    def jet(self, x, t, order: int):
        self._need(order)
        shape = (order + 1,) + np.broadcast(np.asarray(x), np.asarray(t)).shape
        D, Dt = np.zeros(shape), np.zeros(shape)
        for coef, tau in self.terms:
            kap, kapt = tau.log_jet(x, t, self.shift + order)
            D = D + coef * kap[self.shift:]
            Dt = Dt + coef * kapt[self.shift:]
        D = np.array(D, dtype=float)
        D[0] = D[0] + self.offset
        return D, np.array(Dt, dtype=float)

    def __call__(self, x, t):
        out = self.offset
        for coef, tau in self.terms:
            out = out + coef * tau.log_jet(x, t, self.shift, with_t=False)[0][self.shift]
        return np.asarray(out, dtype=float) + 0.0 * np.asarray(x, dtype=float)


class SuperpartnerField(SpaceTimeField):
    """``W**2 + sign * W_x + E0`` built from a superpotential field."""

    def __init__(self, W: SpaceTimeField, E0: float, sign: int = +1):
        self.W = W
        self.E0 = float(E0)
        self.sign = sign
        self.max_x_order = W.max_x_order - 1

    def jet(self, x, t, order: int):
        self._need(order)
        w, wt = self.W.jet(x, t, order + 1)
        D = []
        Dt = []
        for n in range(order + 1):
            sq = sum(comb(n, j) * w[j] * w[n - j] for j in range(n + 1))
            sqt = sum(comb(n, j) * (wt[j] * w[n - j] + w[j] * wt[n - j]) for j in range(n + 1))
            D.append(sq + self.sign * w[n + 1])
            Dt.append(sqt + self.sign * wt[n + 1])
        D[0] = D[0] + self.E0
        return np.array(D), np.array(Dt)


class FunctionField(SpaceTimeField):
    """Field from a plain callable; partials only if supplied.

    ``partials`` maps an x-order to a callable ``(x, t) -> array``; ``dt``
    is an optional callable for the time derivative of the value.
    """

    def __init__(self, func, partials=None, dt=None):
        self.func = func
        self.partials = dict(partials or {})
        self._dt = dt
        order = 0
        while order + 1 in self.partials:
            order += 1
        self.max_x_order = order

    def jet(self, x, t, order: int):
        self._need(order)
        D = [np.asarray(self.func(x, t), dtype=float)]
        for n in range(1, order + 1):
            D.append(np.asarray(self.partials[n](x, t), dtype=float))
        Dt = np.full((order + 1,) + np.shape(D[0]), np.nan)
        if self._dt is not None:
            Dt[0] = self._dt(x, t)
        return np.array(D), Dt


class PolynomialWell(SpaceTimeField):
    """Static polynomial potential ``sum_j coeffs[j] x**j``."""

    max_x_order = 7

    def __init__(self, coeffs):
        self.poly = np.polynomial.Polynomial(coeffs)

    def jet(self, x, t, order: int):
        self._need(order)
        x = np.asarray(x, dtype=float)
        shape = np.broadcast(x, np.asarray(t)).shape
        D = [np.broadcast_to(self.poly.deriv(n)(x) if n else self.poly(x), shape)
             for n in range(order + 1)]
        return np.array(D, dtype=float), np.zeros((order + 1,) + shape)


class GaussianBump(SpaceTimeField):
    """Static ``amplitude * exp(-((x - center) / width)**2)``; partials from Hermite polynomials."""

    max_x_order = 7

    def __init__(self, amplitude: float, center: float = 0.0, width: float = 1.0):
        self.amplitude, self.center, self.width = float(amplitude), float(center), float(width)

    def jet(self, x, t, order: int):
        self._need(order)
        x = np.asarray(x, dtype=float)
        shape = np.broadcast(x, np.asarray(t)).shape
        z = (x - self.center) / self.width
        g = self.amplitude * np.exp(-z ** 2)
        D = [np.broadcast_to((-1) ** n * hermval(z, [0] * n + [1]) * g / self.width ** n, shape)
             for n in range(order + 1)]
        return np.array(D, dtype=float), np.zeros((order + 1,) + shape)


class SumField(SpaceTimeField):
    """Pointwise sum of fields; partials add."""

    def __init__(self, *fields: SpaceTimeField):
        self.fields = fields
        self.max_x_order = min(f.max_x_order for f in fields)

    def jet(self, x, t, order: int):
        self._need(order)
        jets = [f.jet(x, t, order) for f in self.fields]
        return sum(j[0] for j in jets), sum(j[1] for j in jets)


def finite_difference_check(field: SpaceTimeField, x, t, order: int = 5, h: float = 1e-4):
    """Largest relative mismatch between analytic partials and 4th-order central differences."""
    D, Dt = field.jet(x, t, order)
    scale = np.max(np.abs(D)) + np.max(np.abs(Dt)) + 1.0

    def cd(f, z0, step):
        return (-f(z0 + 2 * step) + 8 * f(z0 + step) - 8 * f(z0 - step) + f(z0 - 2 * step)) / (12 * step)

    worst = 0.0
    for n in range(order):
        fd = cd(lambda xx: field.jet(xx, t, n)[0][n], np.asarray(x, dtype=float), h)
        worst = max(worst, float(np.max(np.abs(fd - D[n + 1])) / scale))
    fdt = cd(lambda tt: field.jet(x, tt, 0)[0][0], np.asarray(t, dtype=float), h)
    worst = max(worst, float(np.max(np.abs(fdt - Dt[0])) / scale))
    return worst
