import math

import numpy as np
from scipy import stats

from diffmean.kernels import SPHERE, KernelSpec, sphere_heat
from diffmean.manifold import north_pole
from diffmean.sampling import brownian_batch


def radial_chi_square(t, n=100_000, steps=400, seed=2024, bins=40):
    """Chi-square statistic comparing walk end points against the kernel.

    Walk end-point geodesic distances are binned at the kernel's radial
    quantiles (density h(cos d) 2 pi sin d on S^2), so every bin has equal
    expected count.  Returns (statistic, critical value at the 1% level).
    """
    mu = north_pole(2)
    pts = brownian_batch(mu, t, n, steps=steps, seed=seed)
    d = np.arccos(np.clip(pts @ mu, -1.0, 1.0))
    grid = np.linspace(0.0, math.pi, 4001)
    dens = sphere_heat(KernelSpec(SPHERE, 2, t), np.cos(grid)).value
    dens = dens * 2.0 * math.pi * np.sin(grid)
    cdf = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))]
    )
    cdf /= cdf[-1]
    edges = np.interp(np.linspace(0.0, 1.0, bins + 1), cdf, grid)
    obs, _ = np.histogram(d, bins=edges)
    expected = n / bins
    stat = float(((obs - expected) ** 2 / expected).sum())
    return stat, float(stats.chi2.ppf(0.99, bins - 1))
