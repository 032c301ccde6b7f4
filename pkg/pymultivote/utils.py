"""This module contains utility functions used internally by pymultivote."""


import hashlib

import numpy as np

# Purposes used as part of the spawn key when deriving random streams, so that
# the noise for the consensus check never shares a stream with the release
# noise of the same label.
PURPOSE_BALLOTS = 0
PURPOSE_THRESHOLD = 1
PURPOSE_RELEASE = 2
PURPOSE_AUDIT = 3


def derive_rng(seed, *keys):
    """Return an independent random generator for a position in a run.

    The generator depends only on the master ``seed`` and the ``keys``, so a
    query evaluated on its own draws exactly the noise it would draw as part
    of a sequential run.

    Args:
        seed (int): The master seed of the run.
        *keys (int): Non-negative integers locating the stream, typically
            ``(query_id, label_index, purpose)``.

    Returns:
        `numpy.random.Generator`: The derived generator.

    >>> a = derive_rng(7, 3, 0, PURPOSE_RELEASE).normal()
    >>> b = derive_rng(7, 3, 0, PURPOSE_RELEASE).normal()
    >>> a == b
    True
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(keys))
    return np.random.default_rng(sequence)


class RngFactory:

    """Hands out derived generators for one query of a run.

    Mechanisms ask the factory for a stream per label and purpose instead of
    sharing one generator, which keeps outcomes independent of evaluation
    order.
    """

    def __init__(self, seed, query_id=0):
        """
        Args:
            seed (int): The master seed.
            query_id (int): The query the streams belong to.
        """
        #: `int`: The master seed
        self.seed = int(seed)
        #: `int`: The query the generated streams belong to
        self.query_id = int(query_id)

    def __repr__(self):
        return "{}(seed={}, query_id={})".format(
            self.__class__.__name__, self.seed, self.query_id
        )

    def stream(self, label_index, purpose):
        """Return the generator for ``label_index`` and ``purpose``."""
        return derive_rng(self.seed, self.query_id, label_index, purpose)


def file_digest(path):
    """Return the hex sha256 digest of the file at ``path``."""
    digest = hashlib.sha256()
    with open(path, "rb") as file_:
        for block in iter(lambda: file_.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()
