"""Independent reference implementations used only by the tests.

Nothing here imports the package's derivative code: the packet formula is
rebuilt symbolically with sympy and differentiated there.
"""

import numpy as np
import sympy as sp

X, T = sp.symbols("x t", real=True)
M, SIG, X0, K0 = sp.symbols("m sigma0 x0 k0", positive=True)


def packet_expr(m=M, sigma0=SIG, x0=X0, k0=K0):
    s = sigma0 * (1 + sp.I * T / (2 * m * sigma0**2))
    z = X - x0 - k0 * T / m
    return (2 * sp.pi) ** sp.Rational(-1, 4) / sp.sqrt(s) * sp.exp(
        -z**2 / (4 * sigma0 * s) + sp.I * (k0 * X - k0**2 * T / (2 * m))
    )


def two_slit_expr(m=1, sigma0=1, x1=-6, x2=6, k1=0, k2=0, delta=0):
    m, sigma0 = sp.nsimplify(m), sp.nsimplify(sigma0)
    a = packet_expr(m, sigma0, sp.nsimplify(x1), sp.nsimplify(k1))
    b = packet_expr(m, sigma0, sp.nsimplify(x2), sp.nsimplify(k2))
    return a + sp.exp(sp.I * sp.nsimplify(delta)) * b


def lambdified_fields(expr, m=1):
    """psi, psi_x, psi_xx, psi_t as numpy callables of (x, t), unnormalized."""
    d = [expr, sp.diff(expr, X), sp.diff(expr, X, 2), sp.diff(expr, T)]
    return [sp.lambdify((X, T), e, "numpy") for e in d]


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h)


def second_diff(f, x, h):
    return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
