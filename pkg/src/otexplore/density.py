"""Reference densities: Gaussian mixtures, sample ensembles, random walks."""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMixture

# named, order-independent RNG streams split from one scenario seed
STREAMS = {
    "sampling": 0,
    "targets": 1,
    "target_walk": 2,
    "sample_walk": 3,
    "initial_positions": 4,
}


def make_rng(seed, stream):
    """Independent generator for ``stream`` derived from the master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[stream],))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class Domain:
    x_range: tuple
    y_range: tuple

    def __post_init__(self):
        for name, (lo, hi) in (("x_range", self.x_range), ("y_range", self.y_range)):
            if not hi > lo:
                raise ValueError(f"{name} must be a nonempty interval, got {(lo, hi)}")

    @property
    def diagonal(self):
        return float(np.hypot(self.x_range[1] - self.x_range[0],
                              self.y_range[1] - self.y_range[0]))

    def uniform(self, rng, count):
        xs = rng.uniform(self.x_range[0], self.x_range[1], count)
        ys = rng.uniform(self.y_range[0], self.y_range[1], count)
        return np.column_stack([xs, ys])


class GaussianMixture:
    """Weighted sum of bivariate normals.

    Covariances are symmetrised, eigenvalues within -1e-9 of zero are
    clamped, and a square-root factor is cached for sampling.
    """

    def __init__(self, weights, means, covariances):
        w = np.asarray(weights, dtype=float).reshape(-1)
        mu = np.asarray(means, dtype=float).reshape(-1, 2)
        cov = np.asarray(covariances, dtype=float).reshape(-1, 2, 2)
        if not (len(w) == len(mu) == len(cov)) or len(w) == 0:
            raise InvalidMixture("weights, means and covariances must have equal nonzero length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidMixture(f"component weights must be >= 0 and sum to 1, got {w.tolist()}")
        factors = []
        for k, c in enumerate(cov):
            if not np.allclose(c, c.T, rtol=0, atol=1e-9 * max(1.0, np.abs(c).max())):
                raise InvalidMixture(f"covariance {k} is not symmetric")
            c = 0.5 * (c + c.T)
            vals, vecs = np.linalg.eigh(c)
            if vals.min() < -1e-9:
                raise InvalidMixture(f"covariance {k} is not positive semi-definite")
            vals = np.clip(vals, 0.0, None)
            # eigen square root works for singular matrices where Cholesky fails
            factors.append(vecs * np.sqrt(vals))
            cov[k] = c
        self.weights = w
        self.means = mu
        self.covariances = cov
        self._factors = np.array(factors)

    def __len__(self):
        return len(self.weights)

    def sample(self, rng, count):
        """Draw ``count`` points; returns (points, component labels)."""
        labels = rng.choice(len(self.weights), size=count, p=self.weights)
        z = rng.standard_normal((count, 2))
        pts = self.means[labels] + np.einsum("nij,nj->ni", self._factors[labels], z)
        return pts, labels


@dataclass
class SampleEnsemble:
    points: np.ndarray
    weights: np.ndarray
    epoch: int = 0

    @property
    def N(self):
        return self.points.shape[0]

    def copy(self):
        return SampleEnsemble(self.points.copy(), self.weights.copy(), self.epoch)


def sample_mixture(mix, count, rng_seed):
    """N i.i.d. mixture samples, each weighted 1/N. ``rng_seed`` is an int or Generator."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else make_rng(rng_seed, "sampling")
    pts, _ = mix.sample(rng, count)
    return SampleEnsemble(np.ascontiguousarray(pts), np.full(count, 1.0 / count), 0)


def uniform_step(rng, count, v):
    """Displacements v * w with w uniform on [-1, 1]^2."""
    return v * rng.uniform(-1.0, 1.0, size=(count, 2))


def random_walk_step_samples(ens, v, rng):
    if v < 0:
        raise ValueError("diffusion rate must be >= 0")
    step = uniform_step(rng, ens.N, v)
    return SampleEnsemble(np.ascontiguousarray(ens.points + step), ens.weights, ens.epoch + 1)


def random_walk_step_targets(targets, v, rng, frozen=None):
    """Move target positions one step; rows flagged in ``frozen`` stay put.

    A displacement is drawn for every target regardless of ``frozen`` so the
    stream advances identically whatever has been detected.
    """
    if v < 0:
        raise ValueError("diffusion rate must be >= 0")
    targets = np.asarray(targets, dtype=float)
    step = uniform_step(rng, targets.shape[0], v)
    if frozen is not None:
        step[np.asarray(frozen, dtype=bool)] = 0.0
    return targets + step
