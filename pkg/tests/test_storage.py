import numpy as np
import pytest

from graphuq import graph, storage
from graphuq.errors import DataError
from graphuq.sampler import ChainStats
from graphuq.uq import summarize_stats


def test_weights_round_trip(tmp_path):
    X = np.random.default_rng(0).random((15, 2))
    dense = graph.self_tuning_weights(X, 3)
    storage.save_weights(tmp_path / "d.csv", dense)
    np.testing.assert_array_equal(storage.load_weights(tmp_path / "d.csv"), dense.weights)
    sp = graph.knn_weights(X, 3)
    storage.save_weights(tmp_path / "s.csv", sp)
    back = storage.load_weights(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.toarray(), sp.dense())


def test_chain_round_trip(tmp_path):
    U = np.random.default_rng(1).standard_normal((6, 4))
    storage.save_chain(tmp_path / "c.bin", U, seed=99)
    back, seed = storage.load_chain(tmp_path / "c.bin")
    np.testing.assert_array_equal(back, U)
    assert seed == 99
    raw = (tmp_path / "c.bin").read_bytes()
    assert raw[:8] == b"GUQCHAIN" and len(raw) == 32 + 6 * 4 * 8
    (tmp_path / "t.bin").write_bytes(raw[:-8])
    with pytest.raises(DataError):
        storage.load_chain(tmp_path / "t.bin")
    (tmp_path / "m.bin").write_bytes(b"NOTCHAIN" + raw[8:])
    with pytest.raises(DataError, match="magic"):
        storage.load_chain(tmp_path / "m.bin")


def test_summary_csv_round_trip(tmp_path):
    U = np.random.default_rng(2).standard_normal((50, 5))
    s = summarize_stats(ChainStats.from_samples(U))
    storage.write_summary_csv(tmp_path / "s.csv", s)
    back = storage.read_summary_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back["scores"], s.scores)
    np.testing.assert_array_equal(back["node_variance"], s.node_variance)
    np.testing.assert_array_equal(back["hard_labels"], s.hard_labels)


def test_json_is_canonical(tmp_path):
    storage.write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": np.arange(3)})
    text = (tmp_path / "a.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert storage.read_json(tmp_path / "a.json") == {"a": [0, 1, 2], "b": 1.5}
