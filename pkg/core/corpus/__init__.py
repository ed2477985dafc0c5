"""
Example corpus: the benchmark applications, their operations and scenarios,
and the golden accord fixtures produced by the bounded oracle.
"""

from .fixtures import (
    Fixture,
    GuardFixture,
    Witness,
    parse_fixture,
    read_fixture,
    serialize_fixture,
    write_fixture,
)
from .oracle import build_fixture, build_fixtures, classify, fixture_path, instances, replays
from .registry import (
    BENCHMARK_APPLICATIONS,
    CORPUS_DIR,
    FIXTURE_DIR,
    Application,
    BenchmarkApplication,
    Corpus,
    benchmark,
    load_application,
    load_scenario,
    read_card,
)
