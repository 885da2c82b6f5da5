from fractions import Fraction

import pytest

from freeboundary import (
    GroupContext,
    MetricSpec,
    StepFunction,
    ps_measure,
)


@pytest.fixture(scope="session")
def word_ctx():
    return GroupContext(MetricSpec.word(2))


@pytest.fixture(scope="session")
def word_mu(word_ctx):
    return ps_measure(word_ctx)


@pytest.fixture(scope="session")
def weighted_ctx():
    return GroupContext(MetricSpec.weighted(2, [1, 2]))


@pytest.fixture(scope="session")
def weighted_mu(weighted_ctx):
    return ps_measure(weighted_ctx)


@pytest.fixture(scope="session")
def one():
    return StepFunction.constant(Fraction(1), 2)


@pytest.fixture(scope="session")
def ind_a():
    return StepFunction.indicator("a", 2)


@pytest.fixture(scope="session")
def ind_b():
    return StepFunction.indicator("b", 2)
