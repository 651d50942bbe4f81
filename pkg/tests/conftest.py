import random
from collections import Counter
from pathlib import Path

import pytest

from rlejoin.baselines import brute_force_join
from rlejoin.query import parse_query_file
from rlejoin.runner import execute, load_relations
from rlejoin.summary import ListSink, desummarize

DATA_DIR = Path(__file__).parent / "data"
CHAIN3_DIR = DATA_DIR / "chain3"


@pytest.fixture(scope="session")
def chain3_query():
    return parse_query_file(CHAIN3_DIR / "chain3.q")


@pytest.fixture(scope="session")
def chain3_relations(chain3_query):
    return load_relations(chain3_query, CHAIN3_DIR)


@pytest.fixture()
def chain3_execution(chain3_query, chain3_relations):
    return execute(chain3_query, chain3_relations, base_dir=CHAIN3_DIR)


def desummarized_multiset(query, summary) -> Counter:
    """Expand a summary and bag-project it onto the query's projection."""
    sink = ListSink()
    desummarize(summary, sink)
    flat = summary.column_variables()
    perm = [flat.index(p) for p in query.projection]
    return Counter(tuple(row[i] for i in perm) for row in sink.rows)


def oracle_multiset(query, relations) -> Counter:
    return Counter(brute_force_join(query, relations).counts)


@pytest.fixture()
def rng():
    return random.Random(0xC0FFEE)
