"""Frobenius series starts for the shooting oracles.

Both model ODEs have a regular singular point at the integration start
with indicial exponents {0, eta(lam)}.  A first-order Taylor start seeds
the forbidden branch at relative size delta^(2 - Re eta), which fakes
Wronskian zeros once Re eta > 2 (deep resonances).  Starting from an
order-M Frobenius series pushes the seeding to delta^(M+1-Re eta).

The recurrence divides by (m + 1 - eta); to keep the shot solution
entire in lam the series is computed in the scaled variables
b_m = a_m * prod_{j<=m} (j - eta), and the reported start values carry
the full product, i.e. they belong to prod_{j<=M}(j - eta) times the
analytic-branch solution.  Callers on the imaginary axis divide the
artificial polynomial back out.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def series_start(acoef, bcoef, ccoef, order: int, delta: float):
    """Start values of the scaled analytic branch, plus the second exponent.

    acoef/bcoef/ccoef are Taylor coefficients (around s = 0) of the ODE
    A v'' + B v' + C v = 0 with A(0) = 0 and A'(0) != 0.  Returns
    (v(delta), v'(delta), eta) where the values are those of
    P_M(eta) * v_analytic with P_M = prod_{j=1}^{M} (j - eta), an entire
    family in lam, and eta = 1 - B(0)/A'(0) is the second indicial
    exponent.
    """
    A = np.asarray(acoef, dtype=complex)
    B = np.asarray(bcoef, dtype=complex)
    C = np.asarray(ccoef, dtype=complex)
    if abs(A[0]) > 1e-12 * max(1.0, abs(A[1])):
        raise ParameterError("series start expects A(0) = 0 (regular singular point)")
    if A[1] == 0:
        raise ParameterError("series start expects A'(0) != 0")
    eta = 1.0 - B[0] / A[1]
    m_max = order
    b = np.zeros(m_max + 1, dtype=complex)
    b[0] = 1.0

    def ratio(lo, hi):
        """prod_{i=lo}^{hi} (i - eta); empty product for lo > hi."""
        out = 1.0 + 0j
        for i in range(lo, hi + 1):
            out *= i - eta
        return out

    for m in range(0, m_max):
        rhs = 0.0 + 0j
        for j in range(2, min(m + 2, len(A) - 1) + 1):
            idx = m + 2 - j
            if 0 <= idx <= m:
                rhs += A[j] * (m + 2 - j) * (m + 1 - j) * b[idx] * ratio(m + 3 - j, m)
        for j in range(1, min(m + 1, len(B) - 1) + 1):
            idx = m + 1 - j
            if 0 <= idx <= m:
                rhs += B[j] * (m + 1 - j) * b[idx] * ratio(m + 2 - j, m)
        for j in range(0, min(m, len(C) - 1) + 1):
            idx = m - j
            if 0 <= idx <= m:
                rhs += C[j] * b[idx] * ratio(m + 1 - j, m)
        b[m + 1] = -rhs / ((m + 1) * A[1])

    v = 0.0 + 0j
    dv = 0.0 + 0j
    for m in range(m_max + 1):
        q = ratio(m + 1, m_max)
        v += b[m] * delta**m * q
        if m >= 1:
            dv += m * b[m] * delta ** (m - 1) * q
    return v, dv, eta


def taylor_inverse(r0: float, order: int):
    """Coefficients of 1/(r0 + s) around s = 0."""
    return np.array([(-1.0) ** k / r0 ** (k + 1) for k in range(order + 1)])


def taylor_product(a, b, order: int):
    """Truncated Cauchy product of two coefficient arrays."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.zeros(order + 1, dtype=complex)
    for i in range(min(len(a), order + 1)):
        jmax = min(len(b), order + 1 - i)
        out[i:i + jmax] += a[i] * b[:jmax]
    return out


def taylor_derivative(a):
    a = np.asarray(a, dtype=complex)
    return np.array([(k + 1) * a[k + 1] for k in range(len(a) - 1)], dtype=complex)


def taylor_divide(num, den, order: int):
    """Coefficients of num/den to the given order; den[0] must be nonzero."""
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    if den[0] == 0:
        raise ParameterError("taylor_divide needs a nonzero constant denominator")
    out = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        acc = num[k] if k < len(num) else 0.0
        for j in range(1, min(k, len(den) - 1) + 1):
            acc -= den[j] * out[k - j]
        out[k] = acc / den[0]
    return out
