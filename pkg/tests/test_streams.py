"""Tests for named random streams."""

import numpy as np

from src.utils.streams import RandomStreams, named_stream


class TestNamedStream:
    """Test suite for named_stream."""

    def test_same_name_same_draws(self) -> None:
        """Test a (seed, name) pair always yields the same stream."""
        first = named_stream(7, "pit").uniform(size=5)
        second = named_stream(7, "pit").uniform(size=5)

        np.testing.assert_array_equal(first, second)

    def test_names_differ(self) -> None:
        """Test distinct names give distinct streams under one seed."""
        pit = named_stream(7, "pit").uniform(size=5)
        ranks = named_stream(7, "ranks").uniform(size=5)

        assert not np.array_equal(pit, ranks)

    def test_seeds_differ(self) -> None:
        """Test distinct seeds give distinct streams for one name."""
        assert named_stream(1, "pit").uniform() != named_stream(2, "pit").uniform()

    def test_philox(self) -> None:
        """Test streams use the counter-based Philox generator."""
        assert isinstance(named_stream(0, "x").bit_generator, np.random.Philox)


class TestRandomStreams:
    """Test suite for RandomStreams."""

    def test_substreams_follow_names(self) -> None:
        """Test each substream is the named stream of the master seed."""
        streams = RandomStreams(11)

        assert streams.simulation().uniform() == named_stream(11, "simulation").uniform()
        assert streams.pit().uniform() == named_stream(11, "pit").uniform()
        assert streams.ranks().uniform() == named_stream(11, "ranks").uniform()

    def test_bootstrap_seed(self) -> None:
        """Test the bootstrap seed is a reproducible nonnegative integer."""
        seed = RandomStreams(11).bootstrap_seed()

        assert seed == RandomStreams(11).bootstrap_seed()
        assert 0 <= seed < 2**31 - 1
        assert seed != RandomStreams(12).bootstrap_seed()
