"""Independent reference values frozen into the C++ tests.

Run: python3 tests/oracles/oracles.py
"""
import math


def aux(r, beta, mu, sigma, alpha, eta, rho, R):
    lam = (mu - r) / sigma
    zeta = (alpha - r) / eta
    b1 = 2 / (eta**2 * (1 - rho**2)) * (beta - r * (1 - R) - lam**2 * (1 - R) / (2 * R))
    b2 = (lam**2 - 2 * R * eta * rho * lam + eta**2 * R**2) / (eta**2 * R**2 * (1 - rho**2))
    b3 = 2 * (zeta - lam * rho) / (eta * (1 - rho**2))
    b4 = 1 / (0.5 * eta**2 * (1 - rho**2))
    return dict(lam=lam, zeta=zeta, b1=b1, b2=b2, b3=b3, b4=b4)


def slope(b1, b2, b3, R):
    A = b1 * R
    B = R * (1 - R) * (b3 - b2 - b1 / R)
    C = -b3 * (1 - R) ** 2
    d = math.sqrt(B * B - 4 * A * C)
    roots = sorted([(-B - d) / (2 * A), (-B + d) / (2 * A)])
    return roots[0] if R < 1 else roots[1]


def qstar_rk4(b1, b2, b3, R, h=1e-6, q0=1e-6):
    sg = 1.0 if R < 1 else -1.0

    def m(q):
        return (1 - R) * R / b1 * q * q - b3 * (1 - R) / b1 * q + 1

    def ell(q):
        return m(q) + (1 - R) / b1 * q * (1 - q) + (b2 - 1) * R * (1 - R) / b1 * q / ((1 - R) * q + R)

    def ups(q, n):
        phi = b1 * n + (1 - R) * (b3 - 2 * R) * q + 2 * R * (1 - R) - b1 - b2 * R * (1 - R)
        return phi - sg * math.sqrt(phi * phi + 4 * R * R * (1 - R) ** 2 * (b2 - 1) * (1 - q) ** 2)

    def f(q, n):
        d = ell(q) - n
        return n * ((1 - R) / (R * (1 - q)) - (1 - R) ** 2 / (b1 * R) * q / d
                    + (1 - R) * q / (2 * b1 * R * (1 - q) * ((1 - R) * q + R)) * ups(q, n) / d)

    q, n = q0, 1 + q0 * slope(b1, b2, b3, R)
    while q < 1 - 2 * h:
        k1 = f(q, n)
        k2 = f(q + h / 2, n + h / 2 * k1)
        k3 = f(q + h / 2, n + h / 2 * k2)
        k4 = f(q + h, n + h * k3)
        n1 = n + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        d0, d1 = sg * (n - m(q)), sg * (n1 - m(q + h))
        if d0 > 0 and d1 <= 0:
            qc = q + h * d0 / (d0 - d1)
            return qc, m(qc)
        q, n = q + h, n1
    return 1.0, n


if __name__ == "__main__":
    a = aux(0.02, 0.10, 0.07, 0.30, 0.05, 0.40, 0.30, 0.5)
    print("aux", {k: repr(v) for k, v in a.items()})
    print("slope(1,1,0.4,0.5)", repr(slope(1, 1, 0.4, 0.5)), repr(0.65 - math.sqrt(0.6225)))
    for p in [(1, 1, 0.4, 0.5), (1, 1.3, 0.8, 0.5), (1, 1, 3, 2), (1, 1.5, 2.5, 2)]:
        print("qstar", p, [repr(x) for x in qstar_rk4(*p)])
