"""Plug-in evaluation of the bound constants for the worked instance.

Evaluates every definition symbol by symbol at 40 significant digits with
mpmath. The printed values are frozen in tests/test_theory.cpp.
"""
from mpmath import mp, mpf, sqrt, log, e

mp.dps = 40

a, mu, L, A, B, C = mpf(3), mpf(1), mpf(1), mpf(1), mpf(1), mpf(1)
t, d, Lg, Delta0 = mpf(2), mpf(2), mpf(1), mpf(1)
delta = mpf("0.5")
K0 = mpf(1000)

u = 2 * A * L + B
m1 = 2 * sqrt(2 * u / L)
m2 = 2 * sqrt(L * C**2 / (2 * u))
m3 = 2 * sqrt(2 * u / L) + 2 * u / L + 2
m4 = 2 * C
sd = sqrt(d)
D1 = 2 * a * m1 * t * L * sd * Delta0 + 10 * a * m2 * t * sd + e * a**2 * m4 * t * (L + Lg) * sd / (mu * a - 1)
D2 = 8 * a * m1 * t * L * sd + e * a**2 * m3 * t * (L + Lg) * L * sd / (mu * a - 1)

ae2 = (a * e) ** 2
mix = t**2 * d + 1
nu1 = 32 * ae2 * L * mix * (u / (2 * mu * a - 3) * (2 * Delta0 + D1 / D2 + e * a**2 * C * L / D2)
                            + C / (2 * mu * a - 2))
nu2 = 64 * ae2 * L * mix * u / (2 * mu * a - 3)
Gamma1 = e * a**2 * C * L + 2 * (D1 + D2 * Delta0)


def gamma2(K):
    Kbar = K / log(2 / delta)
    logKbar = log(2 * K / delta) / log(2 / delta)
    return 4 * nu1 * (1 + 3 * logKbar) + 2 * sqrt(nu1 * (Kbar * Delta0 + 2 * Gamma1))


def solver(Cp):
    c1 = 12 * Cp * log(12 * Cp) + 6 * Cp
    return c1 * log(2 * c1 / delta)


conc = 24 * nu2 * (2 * log(48 * nu2) + 1) * log(48 * nu2 * (2 * log(48 * nu2) + 1) / delta)
assert abs(conc - solver(4 * nu2)) < mpf(10) ** -25 * conc
K0_hp = max(a * L / 2 * (2 * A + B / mu), mu * a, 2 * D2, conc)
K0_ex = max(a * L * (2 * A + B / mu), mu * a, 2 * D2)


def envelope(K, k):
    Lam = K * Delta0 + Gamma1 + gamma2(K) * log(2 * K / delta) + gamma2(K) * log(2 * k / delta)
    return Lam / (k + K)


def expected(K, k):
    return (Delta0 * (K + 2 * D2) + e * a**2 * C * L + 2 * D1) / (k + K)


# Martingale-only regime.
hnu1 = 8 * L * ae2 * ((2 * L * (A + 1) + B) / (2 * mu * a - 3) * Delta0 + C / (mu * a - 1)) + e * a**2 * C * L / 16
hnu2 = 8 * L * ae2 * (2 * L * (A + 1) + B) / (2 * mu * a - 3)
hG1 = e * a**2 * C * L / 2
hKbar = K0 / log(2 / delta)
hG2 = 12 * (hnu1 + hnu1 * log(8 * hnu1)) + 2 * sqrt(hnu1 * (hKbar * Delta0 + e * a**2 * C * L))
hK0 = max(a * L / 2 * (2 * A + B / mu), mu * a, 8 * hnu2 * log(16 * hnu2 / delta))

rows = [
    ("m1", m1), ("m2", m2), ("m3", m3), ("m4", m4), ("D1", D1), ("D2", D2),
    ("nu1", nu1), ("nu2", nu2), ("Gamma1", Gamma1), ("Gamma2 (K0=1000)", gamma2(K0)),
    ("K0 high-probability", K0_hp), ("K0 expected", K0_ex),
    ("envelope k=100 at K0 high-probability", envelope(K0_hp, 100)),
    ("expected bound k=1000 at K0 expected", expected(K0_ex, 1000)),
    ("martingale nu1", hnu1), ("martingale nu2", hnu2), ("martingale Gamma1", hG1),
    ("martingale Gamma2 (K0=1000)", hG2), ("martingale K0", hK0),
]
for name, v in rows:
    print(f"{name:40s} {mp.nstr(v, 20)}")
