from __future__ import annotations

import pytest

from roomforge.synth import default_synthetic_spec, generate_with_log
from roomforge.training import train_with_report

CORPUS_SEED = 11


@pytest.fixture(scope="session")
def default_spec():
    return default_synthetic_spec(10_000)


@pytest.fixture(scope="session")
def generated(default_spec):
    """The 10k-room planted corpus and its ground-truth log."""
    return generate_with_log(default_spec, CORPUS_SEED)


@pytest.fixture(scope="session")
def corpus(generated):
    return generated[0]


@pytest.fixture(scope="session")
def report(corpus):
    return train_with_report(corpus)


@pytest.fixture(scope="session")
def params(report):
    return report.params


@pytest.fixture(scope="session")
def catalog(params):
    return params.catalog


@pytest.fixture(scope="session")
def small_corpus():
    corpus, _ = generate_with_log(default_synthetic_spec(400), 3)
    return corpus


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
