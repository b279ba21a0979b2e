"""Bundled asset integrity and the offline dataset catalog."""

import json
import shutil

import pytest

from mgtd import assets, lexfeatures
from mgtd.errors import CategoryCountMismatch, ChecksumMismatch, DownloadFailed, MissingAsset

EXPECTED_ASSETS = {
    "stopwords",
    "abbreviations",
    "familiar_words",
    "syllable_fixtures",
    "lexicon_bias",
    "lexicon_moral",
    "lexicon_sentiment",
}


def _clear_caches():
    assets.load_manifest.cache_clear()
    assets.load_stopwords.cache_clear()
    assets.load_abbreviations.cache_clear()
    assets.load_familiar_words.cache_clear()
    assets.load_lexicon_table.cache_clear()
    assets.load_syllable_fixtures.cache_clear()


@pytest.fixture
def sandbox(tmp_path, monkeypatch):
    """Copy of the asset directory that tests may corrupt freely."""
    copy = tmp_path / "assets"
    shutil.copytree(assets.ASSET_DIR, copy, ignore=shutil.ignore_patterns("*.py", "__pycache__"))
    monkeypatch.setattr(assets, "ASSET_DIR", copy)
    monkeypatch.setattr(assets, "MANIFEST_PATH", copy / "MANIFEST.json")
    _clear_caches()
    yield copy
    _clear_caches()


class TestVerifyAssets:
    def test_shipped_assets_verify(self):
        rows = assets.verify_assets()
        assert {r["asset"] for r in rows} == EXPECTED_ASSETS
        assert [r["asset"] for r in rows] == sorted(r["asset"] for r in rows)
        for row in rows:
            assert row["status"] == "ok"
            assert row["records"] > 0
            assert len(row["sha256"]) == 64

    def test_flipped_byte_names_the_asset(self, sandbox):
        path = sandbox / "lexicons" / "bias.tsv"
        data = bytearray(path.read_bytes())
        data[0] ^= 0x20
        path.write_bytes(bytes(data))
        with pytest.raises(ChecksumMismatch, match="lexicon_bias"):
            assets.verify_assets()

    def test_missing_file_named(self, sandbox):
        (sandbox / "stopwords.txt").unlink()
        with pytest.raises(MissingAsset, match="stopwords"):
            assets.verify_assets()

    def test_record_count_drift(self, sandbox):
        manifest = json.loads((sandbox / "MANIFEST.json").read_text())
        manifest["assets"]["stopwords"]["records"] += 1
        (sandbox / "MANIFEST.json").write_text(json.dumps(manifest))
        with pytest.raises(ChecksumMismatch, match="records"):
            assets.verify_assets()

    def test_missing_manifest(self, sandbox):
        (sandbox / "MANIFEST.json").unlink()
        with pytest.raises(MissingAsset, match="manifest"):
            assets.verify_assets()

    def test_eleventh_moral_category_rejected(self, sandbox):
        moral = sandbox / "lexicons" / "moral.tsv"
        with open(moral, "a", encoding="utf-8") as fh:
            fh.write("zeal\televenth_sense\n")
        assets.regenerate_manifest()
        with pytest.raises(CategoryCountMismatch):
            assets.verify_assets()


class TestRegenerateManifest:
    def test_round_trip_keeps_provenance(self, sandbox):
        before = json.loads((sandbox / "MANIFEST.json").read_text())
        regenerated = assets.regenerate_manifest()
        assert regenerated["assets"].keys() == before["assets"].keys()
        for asset_id, entry in regenerated["assets"].items():
            assert entry["provenance"] == before["assets"][asset_id]["provenance"]
            assert entry["provenance"] != "unset"
        assert assets.verify_assets()


class TestLoaders:
    def test_stopwords(self):
        words = assets.load_stopwords()
        assert isinstance(words, frozenset)
        assert "the" in words
        assert all(w == w.lower() for w in words)

    def test_abbreviations(self):
        abbr = assets.load_abbreviations()
        assert "dr" in abbr
        assert "e.g" in abbr

    def test_familiar_words_is_the_long_list(self):
        familiar = assets.load_familiar_words()
        assert len(familiar) >= 900
        assert "water" in familiar

    def test_syllable_fixtures(self):
        fixtures = assets.load_syllable_fixtures()
        assert len(fixtures) >= 50
        assert all(isinstance(v, int) and v >= 1 for v in fixtures.values())

    def test_moral_lexicon_has_exactly_ten_categories(self):
        table = assets.load_lexicon_table("moral")
        assert len(table) == assets.MORAL_CATEGORY_COUNT == 10
        assert set(table) == set(lexfeatures.MORAL_CATEGORIES)

    def test_unknown_lexicon(self):
        with pytest.raises(MissingAsset):
            assets.load_lexicon_table("emoji")


class TestFetchCatalog:
    def test_cached_files_skip_download(self, tmp_path):
        (tmp_path / "webtext.test.jsonl").write_text('{"text": "x"}\n')
        catalog = assets.fetch_public_datasets(
            tmp_path, variants=("webtext",), splits=("test",), include_wiki=False
        )
        assert catalog["webtext.test.jsonl"]["status"] == "cached"
        assert catalog["pubmed"]["status"] == "unavailable"
        assert catalog["twitter"]["status"] == "unavailable"
        downloads = json.loads((tmp_path / "DOWNLOADS.json").read_text())
        assert downloads == catalog

    def test_total_failure_raises(self, tmp_path, monkeypatch):
        def refuse(url, dest, retries=3, timeout=60.0):
            raise DownloadFailed(f"{url}: refused")

        monkeypatch.setattr(assets, "_download", refuse)
        with pytest.raises(DownloadFailed):
            assets.fetch_public_datasets(
                tmp_path, variants=("webtext",), splits=("test",),
                include_wiki=False,
            )

    def test_partial_failure_is_cataloged(self, tmp_path, monkeypatch):
        (tmp_path / "webtext.test.jsonl").write_text('{"text": "x"}\n')

        def refuse(url, dest, retries=3, timeout=60.0):
            raise DownloadFailed(f"{url}: refused")

        monkeypatch.setattr(assets, "_download", refuse)
        catalog = assets.fetch_public_datasets(
            tmp_path, variants=("webtext", "xl-1542M"), splits=("test",),
            include_wiki=False,
        )
        assert catalog["webtext.test.jsonl"]["status"] == "cached"
        assert catalog["xl-1542M.test.jsonl"]["status"] == "failed"
        assert "refused" in catalog["xl-1542M.test.jsonl"]["note"]

    def test_variant_catalog_is_complete(self):
        assert len(assets.GPT2_VARIANTS) == 9
        assert "webtext" in assets.GPT2_VARIANTS
        assert assets.GPT2_SPLITS == ("train", "valid", "test")
