"""Independent reference computations used only by the tests.

Neither routine shares code with the package's mode solver.
"""

import math

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp


def horowitz_hubeny_qnm(guess, L=1.0, mu=2.0, r_h=1.0, nterms=1500):
    """Massless neutral s-wave mode from a series about the horizon in ``x = 1/r``.

    With ``phi = psi(x) exp(-i omega v) / r`` and ``F = f x^2`` the equation is
    ``x F psi'' + (x F' - 2F + 2 i omega x) psi' - 2 i omega psi = 0``; the
    mode condition is that the horizon series vanishes at ``x = 0``.
    """
    xh = 1.0 / r_h
    F = np.array([1 / L**2, 0.0, 1.0, -mu])

    def shift(c):
        return np.polynomial.Polynomial(c)(np.polynomial.Polynomial([xh, 1.0])).coef

    xF = np.polynomial.polynomial.polymul([0, 1], F)
    dF = np.polynomial.polynomial.polyder(F)
    p2 = shift(xF)
    base_p1 = shift(np.polynomial.polynomial.polysub(np.polynomial.polynomial.polymul([0, 1], dF), 2 * F))

    def boundary_value(w):
        w = complex(w)
        p1 = base_p1.astype(complex).copy()
        extra = shift([0.0, 2j * w])
        p1[: len(extra)] += extra
        p0 = -2j * w

        def c(arr, k):
            return arr[k] if 0 <= k < len(arr) else 0.0

        a = np.zeros(nterms, complex)
        a[0] = 1.0
        for N in range(nterms - 1):
            s = 0.0
            for n in range(max(0, N - 6), N + 1):
                s += a[n] * (n * (n - 1) * c(p2, N - n + 2) + n * c(p1, N - n + 1) + (p0 if N == n else 0.0))
            a[N + 1] = -s / ((N + 1) * (N * c(p2, 1) + c(p1, 0)))
        return np.sum(a * (-xh) ** np.arange(nterms))

    root = mp.findroot(lambda w: boundary_value(complex(w)), mp.mpc(guess.real, guess.imag), solver="secant", tol=1e-24)
    return complex(root)


def direct_radial_qnm(guess, L, Q, r_h, q, eps=1e-7, r_end=2e3):
    """Mode by adaptive integration of the original radial equation in ``r``.

    The start uses only the leading ingoing behaviour
    ``psi ~ (r - r_h)^{-i varpi_h / f'(r_h)}``; the mode condition is a
    vanishing coefficient of the constant (non-normalizable) fall-off.
    The leading-order start is only trustworthy for weakly damped modes: the
    outgoing solution grows away from the horizon as
    ``y^{-2 |Im varpi_h| / f'(r_h)}`` relative to the ingoing one.
    """
    mu = r_h * (1 + r_h**2 / L**2 + Q**2 / r_h**2)

    def f(r):
        return 1 + r**2 / L**2 - mu / r + Q**2 / r**2

    def fp(r):
        return 2 * r / L**2 + mu / r**2 - 2 * Q**2 / r**3

    def source(w):
        w = complex(w)
        varpi = lambda r: w - q * Q / (4 * math.pi * r)
        kappa = fp(r_h)
        alpha = -1j * varpi(r_h) / kappa
        y0 = eps * r_h
        # variables psi and chi = y psi' = d psi / d ln y stay bounded at the horizon
        Y0 = np.array([1.0 + 0j, alpha])

        def rhs(s, Y):
            y = math.exp(s)
            r = r_h + y
            psi, chi = Y
            fr = f(r)
            d2 = -((fp(r) + 2 * fr / r) * chi / y + (varpi(r) ** 2 / fr) * psi) / fr
            return np.array([chi, chi + y * y * d2])

        sol = solve_ivp(rhs, (math.log(y0), math.log(r_end - r_h)), Y0, method="DOP853", rtol=1e-11, atol=1e-13)
        psi, chi = sol.y[:, -1]
        dpsi = chi / (r_end - r_h)
        # psi = A + B r^-3 (+ subleading): A = psi + r psi' / 3
        A = psi + r_end * dpsi / 3.0
        return A

    root = mp.findroot(lambda w: source(complex(w)), mp.mpc(guess.real, guess.imag), solver="secant", tol=1e-24, verify=False, maxsteps=60)
    return complex(root)
