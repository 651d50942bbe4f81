import pytest

from rlejoin import cache
from rlejoin.factors import learn_factor, variable_dictionaries
from rlejoin.query import parse_query_file
from rlejoin.runner import load_relations

from conftest import CHAIN3_DIR


@pytest.fixture()
def setup():
    query = parse_query_file(CHAIN3_DIR / "chain3.q")
    relations = load_relations(query, CHAIN3_DIR)
    var_dicts = variable_dictionaries(query, relations)
    return query, relations, var_dicts


def test_cache_round_trip_equals_fresh_learn(tmp_path, setup):
    query, relations, var_dicts = setup
    for ref in query.table_refs:
        path = CHAIN3_DIR / ref.path
        fresh = learn_factor(relations[ref.alias], ref.bindings, var_dicts)
        first = cache.load_or_learn(
            path, relations[ref.alias], ref.bindings, var_dicts, tmp_path
        )
        second = cache.load_or_learn(
            path, relations[ref.alias], ref.bindings, var_dicts, tmp_path
        )
        assert first.scope == fresh.scope
        assert first.entries == fresh.entries
        assert second.entries == fresh.entries


def test_cache_hit_skips_the_scan(tmp_path, setup, monkeypatch):
    query, relations, var_dicts = setup
    ref = query.table_refs[0]
    path = CHAIN3_DIR / ref.path
    cache.load_or_learn(path, relations[ref.alias], ref.bindings, var_dicts, tmp_path)

    def boom(*args, **kwargs):
        raise AssertionError("cache miss: table was re-scanned")

    monkeypatch.setattr(cache, "_column_counts", boom)
    again = cache.load_or_learn(
        path, relations[ref.alias], ref.bindings, var_dicts, tmp_path
    )
    assert again.entries


def test_cache_is_invalidated_by_content_change(tmp_path, setup):
    query, relations, var_dicts = setup
    ref = query.table_refs[0]
    src = tmp_path / "copy.csv"
    src.write_bytes((CHAIN3_DIR / ref.path).read_bytes())
    cache_dir = tmp_path / "cache"
    cache.load_or_learn(src, relations[ref.alias], ref.bindings, var_dicts, cache_dir)
    before = sorted(p.name for p in cache_dir.iterdir())

    src.write_text("a,b\na9,b9\n")
    from rlejoin.relation import load_csv

    changed = load_csv(src, name=ref.alias)
    from rlejoin.relation import Dictionary

    vd = {"A": Dictionary("A", ["a9"]), "B": Dictionary("B", ["b9"])}
    factor = cache.load_or_learn(src, changed, ref.bindings, vd, cache_dir)
    assert factor.decode(vd) == {("a9", "b9"): 1}
    after = sorted(p.name for p in cache_dir.iterdir())
    assert len(after) == len(before) + 2  # a second entry appeared


def test_cache_file_format(tmp_path, setup):
    query, relations, var_dicts = setup
    ref = query.table_refs[0]
    path = CHAIN3_DIR / ref.path
    cache.load_or_learn(path, relations[ref.alias], ref.bindings, var_dicts, tmp_path)
    data_files = sorted(tmp_path.glob("*.csv"))
    manifests = sorted(tmp_path.glob("*.manifest"))
    assert len(data_files) == 1 and len(manifests) == 1
    assert data_files[0].read_text() == "a1,b1,2\na2,b1,1\na2,b2,1\n"
    manifest = manifests[0].read_text()
    assert "columns: a b" in manifest
    assert "source-digest: " in manifest
