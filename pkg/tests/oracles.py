"""Independent reference computations used by the tests.

Nothing here calls into ``vmfmix``; everything is built from mpmath,
scipy.stats and direct quadrature.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate, stats

mp.mp.dps = 40


def series_log_bessel_i(nu, x, dps=40):
    """log I_nu(x) by summing the ascending series in extended precision."""
    with mp.workdps(dps):
        nu, x = mp.mpf(nu), mp.mpf(x)
        if x == 0:
            return 0.0 if nu == 0 else -math.inf
        h = (x / 2) ** 2
        term = 1 / mp.gamma(nu + 1)
        total = mp.mpf(0)
        m = 0
        while True:
            total += term
            m += 1
            term = term * h / (m * (m + nu))
            if m > x and term < total * mp.mpf(10) ** (-dps + 5):
                break
        return float(nu * mp.log(x / 2) + mp.log(total))


def mp_log_vmf(x, mu, kappa):
    """log vMF density straight from the Bessel definition."""
    d = len(x)
    nu = mp.mpf(d) / 2 - 1
    dot = mp.fsum(mp.mpf(a) * mp.mpf(b) for a, b in zip(x, mu))
    if kappa == 0:
        return float(-(mp.log(2) + (mp.mpf(d) / 2) * mp.log(mp.pi) - mp.loggamma(mp.mpf(d) / 2)))
    k = mp.mpf(kappa)
    return float(nu * mp.log(k) - (mp.mpf(d) / 2) * mp.log(2 * mp.pi) - mp.log(mp.besseli(nu, k)) + k * dot)


def definitional_elbo(docs, mu, kappa, alpha, pis, phis):
    """
    E_q[log p(X, Z, Theta)] - E_q[log q] assembled term by term.

    ``docs[i]`` is an (N_i, D) array, ``pis[i]`` its (N_i, K) responsibilities,
    ``phis[i]`` the Dirichlet parameters. Dirichlet entropies come from
    scipy.stats and vMF log densities from mpmath.
    """
    K = len(kappa)
    total = mp.mpf(0)
    for X, pi, phi in zip(docs, pis, phis):
        phi = [mp.mpf(p) for p in phi]
        phi0 = mp.fsum(phi)
        e_log_theta = [mp.digamma(p) - mp.digamma(phi0) for p in phi]
        total += mp.loggamma(K * mp.mpf(alpha)) - K * mp.loggamma(mp.mpf(alpha))
        total += (mp.mpf(alpha) - 1) * mp.fsum(e_log_theta)
        for x, row in zip(X, pi):
            for k in range(K):
                if row[k] > 0:
                    total += row[k] * (e_log_theta[k] + mp_log_vmf(x, mu[k], kappa[k]))
                    total -= row[k] * mp.log(row[k])
        total += stats.dirichlet(np.array([float(p) for p in phi])).entropy()
    return float(total)


def monte_carlo_elbo(X, mu, kappa, alpha, pi, phi, n, rng):
    """Single-document ELBO as a sample mean of log p - log q; returns (mean, stderr)."""
    K = len(kappa)
    thetas = rng.dirichlet(phi, size=n)
    log_vmf = np.array([[mp_log_vmf(x, mu[k], kappa[k]) for k in range(K)] for x in X])
    prior = stats.dirichlet(np.full(K, alpha)).logpdf(thetas.T)
    post = stats.dirichlet(phi).logpdf(thetas.T)
    vals = prior - post
    for j in range(len(X)):
        z = (rng.uniform(size=n)[:, None] > np.cumsum(pi[j])[None, :]).sum(axis=1)
        z = np.minimum(z, K - 1)
        vals = vals + np.log(thetas[np.arange(n), z]) + log_vmf[j, z] - np.log(pi[j][z])
    return float(vals.mean()), float(vals.std() / math.sqrt(n))


def vmf3_density(x, mu, kappa):
    if kappa == 0:
        return 1.0 / (4 * math.pi)
    return kappa / (4 * math.pi * math.sinh(kappa)) * math.exp(kappa * float(np.dot(mu, x)))


def quadrature_log_marginal(X, mu, kappa, alpha):
    """log p(X) for one document, K = 2, D = 3, integrating theta over the 1-simplex."""
    f = [[vmf3_density(x, mu[k], kappa[k]) for k in range(2)] for x in X]
    norm = math.gamma(2 * alpha) / math.gamma(alpha) ** 2

    def integrand(t):
        val = norm * t ** (alpha - 1) * (1 - t) ** (alpha - 1)
        for a, b in f:
            val *= t * a + (1 - t) * b
        return val

    value, err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    return math.log(value), err / value


def invert_ratio_bisection(d, rbar, dps=40):
    """Solve I_{d/2}(k)/I_{d/2-1}(k) = rbar by bisection in extended precision."""
    with mp.workdps(dps):
        nu = mp.mpf(d) / 2 - 1
        lo, hi = mp.mpf("1e-12"), mp.mpf(10) * d / (1 - mp.mpf(rbar)) + 10
        for _ in range(200):
            mid = (lo + hi) / 2
            if mp.besseli(nu + 1, mid) / mp.besseli(nu, mid) < rbar:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)
