"""Seeded, splittable random streams.

Each replication owns a ``SeedSequence`` keyed by (master seed, replication
index); its named sub-streams are Philox counter-based generators, so a
replication's draws never depend on which other replications ran.
"""
import numpy as np

STREAM_NAMES = ("contexts", "sampler", "noise", "counterfactual", "policy")


def replication_seed(master_seed, rep):
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(rep),))


def make_generator(seed_seq):
    return np.random.Generator(np.random.Philox(seed_seq))


def replication_streams(master_seed, rep):
    """Return a dict of independent generators for one replication."""
    children = replication_seed(master_seed, rep).spawn(len(STREAM_NAMES))
    return {name: make_generator(ss) for name, ss in zip(STREAM_NAMES, children)}


def instance_generator(master_seed):
    """Stream for experiment-level draws shared by all replications (e.g. a random mu)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(2**32 - 1,))
    return make_generator(ss)


def default_rng(seed=None):
    return make_generator(np.random.SeedSequence(seed))
