import numpy as np
import pytest

from xmreid import dataio
from xmreid.errors import (
    DimensionMismatch,
    DuplicateAssignment,
    DuplicateToken,
    MalformedHeader,
    MisalignedRecords,
    NonFiniteValue,
    RaggedAttributes,
    UnknownIdentity,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestFeat:
    def test_basic_parse(self, tmp_path):
        path = write(
            tmp_path / "a.feat",
            "XMREID-FEAT 1\n2 3\nid1\t1\t1 2 3\nid2\t2\t-1 0.5 2e-3\n",
        )
        records = dataio.load_features(path)
        assert len(records) == 2
        assert records[0][0] == "id1" and records[0][1] == 1
        assert np.array_equal(records[0][2], [1.0, 2.0, 3.0])
        assert records[1][2][2] == 2e-3

    def test_dimension_mismatch(self, tmp_path):
        path = write(tmp_path / "a.feat", "XMREID-FEAT 1\n1 3\nid1\t1\t1 2\n")
        with pytest.raises(DimensionMismatch):
            dataio.load_features(path)

    def test_nan_rejected(self, tmp_path):
        path = write(tmp_path / "a.feat", "XMREID-FEAT 1\n1 2\nid1\t1\t1 NaN\n")
        with pytest.raises(NonFiniteValue):
            dataio.load_features(path)

    def test_count_disagreement(self, tmp_path):
        path = write(tmp_path / "a.feat", "XMREID-FEAT 1\n2 2\nid1\t1\t1 2\n")
        with pytest.raises(MalformedHeader):
            dataio.load_features(path)

    def test_bad_magic(self, tmp_path):
        path = write(tmp_path / "a.feat", "FEAT 1\n0 1\n")
        with pytest.raises(MalformedHeader):
            dataio.load_features(path)

    def test_roundtrip_bytes(self, tmp_path):
        rng = np.random.default_rng(0)
        records = [
            ("person a", 1, rng.standard_normal(4)),
            ("person b", 2, rng.standard_normal(4) * 1e-7),
            ("person b", 1, rng.standard_normal(4) * 1e9),
        ]
        first = tmp_path / "one.feat"
        second = tmp_path / "two.feat"
        dataio.save_features(records, first)
        loaded = dataio.load_features(first)
        dataio.save_features(loaded, second)
        assert first.read_bytes() == second.read_bytes()
        for orig, back in zip(records, loaded):
            assert np.array_equal(orig[2], back[2])


class TestCorpus:
    def test_roundtrip(self, tmp_path):
        records = [("id1", 1, "A short, slim woman."), ("id1", 2, "Tall man; red coat.")]
        path = tmp_path / "c.corpus"
        dataio.save_corpus(records, path)
        assert dataio.load_corpus(path) == records

    def test_text_may_contain_tabs(self, tmp_path):
        path = write(tmp_path / "c.corpus", "XMREID-CORPUS 1\nid1\t1\ta\tb\n")
        assert dataio.load_corpus(path) == [("id1", 1, "a\tb")]


class TestEmbeddings:
    def test_basic(self, tmp_path):
        path = write(tmp_path / "e.emb", "3 4\nred 1 0 0 0\nblue 0 1 0 0\nhat 0 0 1 0\n")
        table = dataio.load_embeddings(path)
        assert table.dimension == 4
        assert len(table) == 3
        assert np.array_equal(table.get("blue"), [0, 1, 0, 0])

    def test_duplicate_token(self, tmp_path):
        path = write(tmp_path / "e.emb", "2 2\nred 1 0\nred 0 1\n")
        with pytest.raises(DuplicateToken):
            dataio.load_embeddings(path)

    def test_dimension_300_fragment(self, tmp_path):
        # word2vec-style fragment at the published embedding width
        vec = " ".join(dataio.format_real(v) for v in np.linspace(-1, 1, 300))
        path = write(tmp_path / "e.emb", f"2 300\nking {vec}\nqueen {vec}\n")
        table = dataio.load_embeddings(path)
        assert table.dimension == 300
        assert table.get("king").shape == (300,)

    def test_roundtrip(self, tmp_path):
        table = dataio.EmbeddingTable(dimension=2, vectors={"a": np.array([0.1, -0.2])})
        path = tmp_path / "e.emb"
        dataio.save_embeddings(table, path)
        again = tmp_path / "e2.emb"
        dataio.save_embeddings(dataio.load_embeddings(path), again)
        assert path.read_bytes() == again.read_bytes()


class TestAttributes:
    def test_width_15(self, tmp_path):
        path = write(tmp_path / "a.attr", "XMREID-ATTR 1 15\nid1\t010110011100101\n")
        table = dataio.load_attributes(path)
        assert table.width == 15
        assert table.get("id1").sum() == 8

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path / "a.attr", "XMREID-ATTR 1 3\nid1\t01\n")
        with pytest.raises(RaggedAttributes):
            dataio.load_attributes(path)

    def test_unknown_identity(self, tmp_path):
        path = write(tmp_path / "a.attr", "XMREID-ATTR 1 2\nghost\t01\n")
        with pytest.raises(UnknownIdentity):
            dataio.load_attributes(path, known_identities={"id1"})

    def test_roundtrip(self, tmp_path):
        table = dataio.AttributeTable(width=4, bits={"id1": np.array([1, 0, 0, 1], dtype=np.uint8)})
        path = tmp_path / "a.attr"
        dataio.save_attributes(table, path)
        again = tmp_path / "a2.attr"
        dataio.save_attributes(dataio.load_attributes(path), again)
        assert path.read_bytes() == again.read_bytes()


class TestSplits:
    def test_two_way_split(self, tmp_path):
        body = "XMREID-SPLIT 1 1\n" + "".join(
            f"1\tid{i}\t{'train' if i < 316 else 'test'}\n" for i in range(632)
        )
        path = write(tmp_path / "s.split", body)
        splits = dataio.load_splits(path)
        assert len(splits) == 1
        assert len(splits[0].train_identities()) == 316
        assert len(splits[0].test_identities()) == 316
        assert set(splits[0].train_identities()).isdisjoint(splits[0].test_identities())

    def test_duplicate_assignment(self, tmp_path):
        path = write(tmp_path / "s.split", "XMREID-SPLIT 1 1\n1\tid1\ttrain\n1\tid1\ttest\n")
        with pytest.raises(DuplicateAssignment):
            dataio.load_splits(path)

    def test_unknown_identity(self, tmp_path):
        path = write(tmp_path / "s.split", "XMREID-SPLIT 1 1\n1\tghost\ttrain\n")
        with pytest.raises(UnknownIdentity):
            dataio.load_splits(path, known_identities={"id1"})

    def test_roundtrip(self, tmp_path):
        splits = [
            dataio.SplitAssignment(index=1, roles={"a": "train", "b": "test"}),
            dataio.SplitAssignment(index=2, roles={"a": "test", "b": "train"}),
        ]
        path = tmp_path / "s.split"
        dataio.save_splits(splits, path)
        again = tmp_path / "s2.split"
        dataio.save_splits(dataio.load_splits(path), again)
        assert path.read_bytes() == again.read_bytes()


class TestSynonyms:
    def test_parse(self, tmp_path):
        path = write(tmp_path / "syn.tsv", "glasses\tspectacles,eyewear\nhat\tcap\n")
        synonyms = dataio.load_synonyms(path)
        assert synonyms["glasses"] == ("spectacles", "eyewear")

    def test_duplicate_headword(self, tmp_path):
        path = write(tmp_path / "syn.tsv", "a\tb\na\tc\n")
        with pytest.raises(DuplicateToken):
            dataio.load_synonyms(path)


class TestAssembly:
    def test_aligned_records(self):
        vision = [("id1", 1, np.zeros(3)), ("id1", 2, np.ones(3))]
        language = [("id1", 1, np.zeros(2)), ("id1", 2, np.ones(2))]
        attrs = dataio.AttributeTable(width=2, bits={"id1": np.array([1, 0], dtype=np.uint8)})
        ds = dataio.assemble_dataset(vision=vision, language=language, attributes=attrs)
        assert len(ds) == 2
        assert ds.records[0].vision.shape == (3,)
        assert ds.records[0].language.shape == (2,)
        assert ds.records[1].attributes is not None
        assert ds.identities() == ["id1"]

    def test_misaligned_rejected(self):
        vision = [("id1", 1, np.zeros(3))]
        language = [("id2", 1, np.zeros(2))]
        with pytest.raises(MisalignedRecords):
            dataio.assemble_dataset(vision=vision, language=language)

    def test_missing_attribute_row(self):
        vision = [("id1", 1, np.zeros(3))]
        attrs = dataio.AttributeTable(width=2, bits={})
        with pytest.raises(UnknownIdentity):
            dataio.assemble_dataset(vision=vision, attributes=attrs)
