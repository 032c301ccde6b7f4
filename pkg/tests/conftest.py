"""py.test hooks and fixtures.

Tests marked 'slow' run Monte-Carlo simulations or whole experiments; they
run by default and can be deselected with ``-m "not slow"``.
"""
from os import path
import json

import numpy as np
import pytest

from pymultivote.accountant import OrderGrid
from pymultivote.ballots import BallotMatrix

THISDIR = path.dirname(path.abspath(__file__))


class DataLoader:
    """A class that loads test data"""

    def __init__(self, data_sub_dir):
        self.data_dir = path.join(THISDIR, "data", data_sub_dir)

    def path(self, filename):
        """Return the full path of ``filename`` under ``self.data_dir``"""
        return path.join(self.data_dir, filename)

    def open(self, filename):
        """Return ``filename`` opened for reading text"""
        return open(self.path(filename), encoding="utf-8")

    def load_json(self, filename):
        """Return parsed data from json file"""
        with self.open(filename) as file_:
            data = json.load(file_)
        return data


@pytest.fixture
def ballot_data():
    return DataLoader("ballots")


@pytest.fixture
def grid():
    """A short grid that keeps hand computations readable."""
    return OrderGrid([1.5, 2.0, 4.0, 8.0, 16.0, 32.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20210601)


@pytest.fixture
def random_ballots(rng):
    """Return a factory of random `BallotMatrix` of modest size."""

    def make(max_voters=20, max_candidates=8):
        voters = int(rng.integers(1, max_voters + 1))
        candidates = int(rng.integers(1, max_candidates + 1))
        return BallotMatrix(rng.integers(0, 2, size=(voters, candidates)))

    return make
