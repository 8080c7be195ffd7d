from doorchain.state import StateView, Version, VersionedStore

from oracles import oracle_state_hash


def test_put_get_delete():
    store = VersionedStore()
    assert store.get("k") is None
    store.put("k", b"v1", Version(1, 0))
    assert store.get("k") == (b"v1", Version(1, 0))
    store.put("k", b"v2", Version(2, 3))
    assert store.get("k") == (b"v2", Version(2, 3))
    store.delete("k")
    assert store.get("k") is None
    store.delete("k")  # idempotent


def test_items_sorted():
    store = VersionedStore()
    store.put("b", b"2", Version(0, 1))
    store.put("a", b"1", Version(0, 0))
    store.put("c", b"3", Version(1, 0))
    assert [k for k, _, _ in store.items()] == ["a", "b", "c"]
    assert len(store) == 3


def test_state_hash_matches_independent_recompute():
    store = VersionedStore()
    store.put("x/1", b"alpha", Version(3, 2))
    store.put("x/2", b"", Version(0, 0))
    store.put("y", bytes(range(40)), Version(12, 9))
    expected = oracle_state_hash(
        {
            "x/1": (b"alpha", (3, 2)),
            "x/2": (b"", (0, 0)),
            "y": (bytes(range(40)), (12, 9)),
        }
    )
    assert store.state_hash() == expected


def test_state_hash_sensitive_to_version():
    a = VersionedStore()
    a.put("k", b"v", Version(1, 0))
    b = VersionedStore()
    b.put("k", b"v", Version(1, 1))
    assert a.state_hash() != b.state_hash()


def test_state_hash_ignores_insertion_order():
    a = VersionedStore()
    a.put("k1", b"v", Version(1, 0))
    a.put("k2", b"w", Version(1, 1))
    b = VersionedStore()
    b.put("k2", b"w", Version(1, 1))
    b.put("k1", b"v", Version(1, 0))
    assert a.state_hash() == b.state_hash()


def test_view_reads_tracked_first_read_wins():
    store = VersionedStore()
    store.put("k", b"v", Version(5, 1))
    view = StateView(store.snapshot())
    assert view.read("k") == b"v"
    assert view.read("missing") is None
    assert view.read("k") == b"v"
    assert view.reads == {"k": Version(5, 1), "missing": None}


def test_view_isolated_from_later_writes():
    store = VersionedStore()
    store.put("k", b"old", Version(1, 0))
    view = StateView(store.snapshot())
    store.put("k", b"new", Version(2, 0))
    assert view.read("k") == b"old"
    assert view.reads["k"] == Version(1, 0)


def test_range_read():
    store = VersionedStore()
    store.put("p/a", b"1", Version(0, 0))
    store.put("p/b", b"2", Version(0, 1))
    store.put("q/a", b"3", Version(0, 2))
    view = StateView(store.snapshot())
    rows = view.range_read("p/")
    assert [(k, v) for k, v, _ in rows] == [("p/a", b"1"), ("p/b", b"2")]
    assert view.reads == {"p/a": Version(0, 0), "p/b": Version(0, 1)}
