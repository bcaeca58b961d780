"""Fourier-Galerkin reference values for k(lambda) and c*.

Independent of the finite-volume scheme in the Rust crates: the operator
L_lambda is built in a truncated Fourier basis on the unit cell and its
eigenvalue with largest real part is taken from a dense solver. The printed
values are frozen in crates/core/tests/oracles.rs.

Usage: python3 tools/spectral_oracle.py
"""

import numpy as np
from scipy.linalg import eigvals
from scipy.optimize import minimize_scalar

TWO_PI = 2.0 * np.pi


def fourier_coefficients(f, modes, fine=4096):
    x = (np.arange(fine) + 0.5) / fine
    c = np.fft.fft(f(x)) / fine
    # Undo the half-cell sample offset so c[m] belongs to exp(2 pi i m x).
    m = np.fft.fftfreq(fine, 1.0 / fine)
    return c * np.exp(-1j * np.pi * m / fine), m


def multiplication_1d(f, modes):
    c, m = fourier_coefficients(f, modes)
    table = dict(zip(m.astype(int), c))
    ks = np.arange(-modes, modes + 1)
    return np.array([[table.get(int(p - q), 0.0) for q in ks] for p in ks]), ks


def k_line(a, da, zeta, lam, modes=48):
    """(a psi')' - 2 lam a psi' - lam a' psi + lam^2 a psi + zeta psi."""
    ma, ks = multiplication_1d(a, modes)
    mda, _ = multiplication_1d(da, modes)
    mz, _ = multiplication_1d(zeta, modes)
    d = np.diag(1j * TWO_PI * ks)
    op = d @ ma @ d - 2 * lam * ma @ d - lam * mda + lam**2 * ma + mz
    return max(eigvals(op).real)


def k_cell(zeta, qx, qy, lam, modes=10):
    """Delta psi + (-2 lam e + q).grad psi + (lam^2 - lam q.e + zeta) psi, e = (1, 0)."""
    fine = 256
    x = (np.arange(fine) + 0.5) / fine
    X, Y = np.meshgrid(x, x, indexing="ij")
    ks = np.arange(-modes, modes + 1)
    kk = [(p, q) for p in ks for q in ks]
    freq = np.fft.fftfreq(fine, 1.0 / fine).astype(int)
    phase = np.exp(-1j * np.pi * (freq[:, None] + freq[None, :]) / fine)

    def mult(values):
        c = np.fft.fft2(values) / fine**2 * phase
        return np.array([[c[(p1 - q1) % fine, (p2 - q2) % fine] for (q1, q2) in kk] for (p1, p2) in kk])

    d1 = np.diag([1j * TWO_PI * p for p, _ in kk])
    d2 = np.diag([1j * TWO_PI * q for _, q in kk])
    mqx, mqy, mz = mult(qx(X, Y)), mult(qy(X, Y)), mult(zeta(X, Y))
    op = d1 @ d1 + d2 @ d2 - 2 * lam * d1 + mqx @ d1 + mqy @ d2 + lam**2 * np.eye(len(kk)) - lam * mqx + mz
    return max(eigvals(op).real)


def c_star(k):
    r = minimize_scalar(lambda t: k(np.exp(t)) / np.exp(t), bracket=(-2.0, 0.0, 2.0), tol=1e-12)
    return r.fun, np.exp(r.x)


one = lambda x: np.ones_like(x)
zero = lambda x: np.zeros_like(x)
cos_growth = lambda x: 1 + 0.5 * np.cos(TWO_PI * x)
layered = lambda x: 1 / (1 + 0.5 * np.cos(TWO_PI * x))
d_layered = lambda x: 0.5 * TWO_PI * np.sin(TWO_PI * x) / (1 + 0.5 * np.cos(TWO_PI * x)) ** 2
a_var = lambda x: 1 + 0.5 * np.cos(TWO_PI * x)
d_a_var = lambda x: -0.5 * TWO_PI * np.sin(TWO_PI * x)

print("line a=1+0.5cos, zeta=1, lambda=1: k =", repr(k_line(a_var, d_a_var, one, 1.0)))
print("line a=1, zeta=1+0.5cos, lambda=1: k =", repr(k_line(one, zero, cos_growth, 1.0)))
print("line a=1, zeta=1+0.5cos: c*, lambda* =", c_star(lambda l: k_line(one, zero, cos_growth, l)))
print("line a=1/(1+0.5cos), zeta=1: c*, lambda* =", c_star(lambda l: k_line(layered, d_layered, one, l)))

zeta2 = lambda x, y: 1 + 0.5 * np.sin(TWO_PI * x) * np.sin(TWO_PI * y)
qx = lambda x, y: np.sin(TWO_PI * x) * np.cos(TWO_PI * y)
qy = lambda x, y: -np.cos(TWO_PI * x) * np.sin(TWO_PI * y)
noq = lambda x, y: np.zeros_like(x)
print("cell with flow, lambda=1: k =", repr(k_cell(zeta2, qx, qy, 1.0)))
print("cell without flow, lambda=1: k =", repr(k_cell(zeta2, noq, noq, 1.0)))
print("cell with flow: c*, lambda* =", c_star(lambda l: k_cell(zeta2, qx, qy, l, modes=8)))
