"""Small scenario configs shared by the tests."""
from otexplore import config

BASE = {
    "domain_x": [0, 200], "domain_y": [0, 200],
    "mixture_weights": [0.6, 0.4],
    "mixture_means": [[70, 80], [140, 130]],
    "mixture_covs": [[400, 0, 0, 300], [250, 50, 50, 350]],
    "u_max": 30.0, "r_sensing": 8.0,
}


def single(seed=0, M=20, N=30, **extra):
    raw = dict(BASE, mode="single", N=N, M=M, n_a=1, initial_positions=[[100, 100]],
               seed=seed, snapshot_every=1)
    raw.update(extra)
    return config.from_dict(raw)


def centralized(seed=0, n_a=2, t_e=20, N=60, **extra):
    raw = dict(BASE, mode="centralized", N=N, M=n_a * t_e, n_a=n_a, t_e=t_e,
               initial_positions="random", seed=seed, snapshot_every=1)
    raw.update(extra)
    return config.from_dict(raw)


def decentralized(seed=0, n_a=2, M=40, N=60, r_comm=50.0, **extra):
    raw = dict(BASE, mode="decentralized", N=N, M=M, n_a=n_a, initial_positions="random",
               r_comm=r_comm, seed=seed, snapshot_every=1)
    raw.update(extra)
    return config.from_dict(raw)
