import pytest

from spkid.corpus import SynthesisSpec, generate_synthetic_corpus

# Lines recorded by tests/test_acceptance.py, echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def small_spec():
    return SynthesisSpec(n_speakers=3, train_duration_s=8.0, n_test_utterances=2,
                         test_duration_s=2.0, seed=11)


@pytest.fixture(scope="session")
def small_corpus(small_spec):
    return generate_synthetic_corpus(small_spec)


@pytest.fixture(scope="session")
def desk_corpus():
    """Default-seed corpus at acceptance scale: 10 speakers, 60 s train, 5 x 4 s test."""
    return generate_synthetic_corpus(SynthesisSpec(n_speakers=10, seed=0))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
