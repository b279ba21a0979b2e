"""Bundled data files and the catalog that pins them.

Everything under ``src/mgtd/assets/`` is versioned through MANIFEST.json,
which records a sha256 and a record count per file.  Loaders are cached
and read-only; verify_assets() is the integrity gate the CLI exposes.

The two public corpora (the GPT-2 output dataset and the paired
Wikipedia-intro set) are not bundled; fetch_public_datasets() downloads
them when network access exists.  The Pubmed and Twitter corpora cannot
be rebuilt from public sources and are listed as such in the catalog.
"""

from __future__ import annotations

import json
import time
from functools import lru_cache
from pathlib import Path

from mgtd.errors import (
    CategoryCountMismatch,
    ChecksumMismatch,
    DownloadFailed,
    MissingAsset,
)
from mgtd.utils import sha256_file

ASSET_DIR = Path(__file__).parent
MANIFEST_PATH = ASSET_DIR / "MANIFEST.json"

MORAL_CATEGORY_COUNT = 10

# Official mirror of the GPT-2 output dataset; one jsonl per split.
GPT2_BASE_URL = "https://openaipublic.azureedge.net/gpt-2/output-dataset/v1"
GPT2_VARIANTS = (
    "webtext",
    "small-117M",
    "small-117M-k40",
    "medium-345M",
    "medium-345M-k40",
    "large-762M",
    "large-762M-k40",
    "xl-1542M",
    "xl-1542M-k40",
)
GPT2_SPLITS = ("train", "valid", "test")

WIKI_INTRO_URL = (
    "https://huggingface.co/datasets/aadityaubhat/GPT-wiki-intro"
    "/resolve/main/GPT-wiki-intro.csv.zip"
)

PRIVATE_SOURCES = {
    "pubmed": "not publicly reconstructable (authors' private collection)",
    "twitter": "not publicly reconstructable (authors' private collection)",
}


def _data_lines(path: Path) -> list[str]:
    """Non-blank, non-comment lines of a bundled text asset."""
    lines = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


@lru_cache(maxsize=None)
def load_manifest() -> dict:
    if not MANIFEST_PATH.is_file():
        raise MissingAsset(f"manifest not found at {MANIFEST_PATH}")
    return json.loads(MANIFEST_PATH.read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def load_stopwords() -> frozenset[str]:
    return frozenset(_data_lines(ASSET_DIR / "stopwords.txt"))


@lru_cache(maxsize=None)
def load_abbreviations() -> frozenset[str]:
    """Abbreviation tokens, lowercase, stored without the trailing period."""
    return frozenset(_data_lines(ASSET_DIR / "abbreviations.txt"))


@lru_cache(maxsize=None)
def load_familiar_words() -> frozenset[str]:
    return frozenset(_data_lines(ASSET_DIR / "dale_chall_familiar.txt"))


@lru_cache(maxsize=None)
def load_lexicon_table(name: str) -> dict[str, frozenset[str]]:
    """Parse a lexicon TSV into {category: terms}.

    name is one of "bias", "moral", "sentiment".  Terms are lowercase and
    may contain spaces (multiword entries).
    """
    path = ASSET_DIR / "lexicons" / f"{name}.tsv"
    if not path.is_file():
        raise MissingAsset(f"no lexicon asset named {name!r} at {path}")
    table: dict[str, set[str]] = {}
    for line in _data_lines(path):
        term, _, category = line.partition("\t")
        term = term.strip()
        category = category.strip()
        if not term or not category:
            raise MissingAsset(f"malformed lexicon row in {path.name}: {line!r}")
        table.setdefault(category, set()).add(term)
    return {cat: frozenset(terms) for cat, terms in table.items()}


@lru_cache(maxsize=None)
def load_syllable_fixtures() -> dict[str, int]:
    fixtures = {}
    for line in _data_lines(ASSET_DIR / "syllable_fixtures.tsv"):
        word, _, count = line.partition("\t")
        fixtures[word.strip()] = int(count)
    return fixtures


def verify_assets() -> list[dict]:
    """Check every cataloged asset: presence, sha256, record count.

    Returns one report row per asset on success.  Raises MissingAsset,
    ChecksumMismatch, or CategoryCountMismatch naming the offending file.
    """
    manifest = load_manifest()
    report = []
    for asset_id, entry in sorted(manifest["assets"].items()):
        path = ASSET_DIR / entry["path"]
        if not path.is_file():
            raise MissingAsset(f"{asset_id}: missing file {entry['path']}")
        digest = sha256_file(path)
        if digest != entry["sha256"]:
            raise ChecksumMismatch(
                f"{asset_id}: sha256 {digest} != recorded {entry['sha256']}"
            )
        records = len(_data_lines(path))
        if records != entry["records"]:
            raise ChecksumMismatch(
                f"{asset_id}: {records} records, manifest says {entry['records']}"
            )
        report.append(
            {
                "asset": asset_id,
                "path": entry["path"],
                "records": records,
                "sha256": digest,
                "status": "ok",
            }
        )
    moral = load_lexicon_table("moral")
    if len(moral) != MORAL_CATEGORY_COUNT:
        raise CategoryCountMismatch(
            f"moral lexicon has {len(moral)} categories, "
            f"expected {MORAL_CATEGORY_COUNT}"
        )
    return report


def regenerate_manifest() -> dict:
    """Recompute checksums and record counts; rewrite MANIFEST.json.

    Maintenance helper for lexicon edits.  Provenance notes are kept from
    the existing manifest when present.
    """
    tracked = [
        ("stopwords", "stopwords.txt"),
        ("abbreviations", "abbreviations.txt"),
        ("familiar_words", "dale_chall_familiar.txt"),
        ("syllable_fixtures", "syllable_fixtures.tsv"),
        ("lexicon_bias", "lexicons/bias.tsv"),
        ("lexicon_moral", "lexicons/moral.tsv"),
        ("lexicon_sentiment", "lexicons/sentiment.tsv"),
    ]
    old: dict = {}
    if MANIFEST_PATH.is_file():
        old = json.loads(MANIFEST_PATH.read_text(encoding="utf-8")).get("assets", {})
    assets = {}
    for asset_id, rel in tracked:
        path = ASSET_DIR / rel
        assets[asset_id] = {
            "path": rel,
            "sha256": sha256_file(path),
            "records": len(_data_lines(path)),
            "provenance": old.get(asset_id, {}).get("provenance", "unset"),
        }
    manifest = {"format": "mgtd-assets", "version": 1, "assets": assets}
    MANIFEST_PATH.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    load_manifest.cache_clear()
    return manifest


def _download(url: str, dest: Path, retries: int = 3, timeout: float = 60.0) -> str:
    """Stream url to dest, return sha256.  Retries with doubling backoff."""
    import requests

    delay = 1.0
    last_err: Exception | None = None
    for attempt in range(retries):
        try:
            with requests.get(url, stream=True, timeout=timeout) as resp:
                resp.raise_for_status()
                tmp = dest.with_suffix(dest.suffix + ".part")
                with open(tmp, "wb") as fh:
                    for chunk in resp.iter_content(chunk_size=1 << 20):
                        fh.write(chunk)
                tmp.replace(dest)
            return sha256_file(dest)
        except Exception as err:  # noqa: BLE001 - any transport error is retryable
            last_err = err
            if attempt + 1 < retries:
                time.sleep(delay)
                delay *= 2
    raise DownloadFailed(f"{url}: {last_err}")


def fetch_public_datasets(
    target_dir: str | Path,
    variants: tuple[str, ...] = GPT2_VARIANTS,
    splits: tuple[str, ...] = GPT2_SPLITS,
    include_wiki: bool = True,
    retries: int = 3,
) -> dict:
    """Download the public corpora into target_dir and catalog them.

    Already-present files are kept (checksum recorded, no re-download).
    Returns a catalog: file name -> {status, sha256?, note?}, plus
    entries flagging the private Pubmed/Twitter corpora as unavailable.
    """
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    catalog: dict[str, dict] = {}

    jobs = [
        (f"{variant}.{split}.jsonl", f"{GPT2_BASE_URL}/{variant}.{split}.jsonl")
        for variant in variants
        for split in splits
    ]
    if include_wiki:
        jobs.append(("GPT-wiki-intro.csv.zip", WIKI_INTRO_URL))

    for name, url in jobs:
        dest = target / name
        if dest.is_file():
            catalog[name] = {"status": "cached", "sha256": sha256_file(dest)}
            continue
        try:
            catalog[name] = {
                "status": "downloaded",
                "sha256": _download(url, dest, retries),
            }
        except DownloadFailed as err:
            catalog[name] = {"status": "failed", "note": str(err)}

    fetched = [n for n, e in catalog.items() if e["status"] in ("cached", "downloaded")]
    if jobs and not fetched:
        raise DownloadFailed("no requested file could be fetched")

    for source, note in PRIVATE_SOURCES.items():
        catalog[source] = {"status": "unavailable", "note": note}

    (target / "DOWNLOADS.json").write_text(
        json.dumps(catalog, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return catalog
