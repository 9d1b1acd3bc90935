"""Versioned, gzip-compressed dataset archive.

Layout after decompression: a magic line ``DYNREC-DATASET v1`` followed by a
single JSON document ``{"name", "catalog": [[id, title, [terms]]...],
"interactions": [[user, item, kind, ts, value]...]}``. Compression uses a
fixed mtime so equal datasets give equal bytes.
"""

from __future__ import annotations

import gzip
import json
from pathlib import Path

from .ingest import Dataset, Interaction, ItemMeta

MAGIC = b"DYNREC-DATASET"
VERSION = 1


class ArchiveError(ValueError):
    pass


def dumps(d: Dataset) -> bytes:
    doc = {
        "name": d.name,
        "catalog": [[m.item_id, m.title, list(m.terms)] for _, m in sorted(d.catalog.items())],
        "interactions": [
            [x.user_id, x.item_id, x.kind, x.timestamp, x.value] for x in d.interactions
        ],
    }
    body = json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return gzip.compress(MAGIC + b" v%d\n" % VERSION + body, mtime=0)


def loads(data: bytes) -> Dataset:
    try:
        raw = gzip.decompress(data)
    except (OSError, EOFError) as e:
        raise ArchiveError(f"not a dataset archive: {e}") from None
    head, _, body = raw.partition(b"\n")
    if not head.startswith(MAGIC + b" v"):
        raise ArchiveError("missing dataset archive header")
    version = head[len(MAGIC) + 2 :]
    if version != str(VERSION).encode():
        raise ArchiveError(f"unsupported archive version {version.decode(errors='replace')}")
    doc = json.loads(body.decode("utf-8"))
    catalog = {i: ItemMeta(i, title, tuple(terms)) for i, title, terms in doc["catalog"]}
    interactions = [Interaction(u, i, k, ts, v) for u, i, k, ts, v in doc["interactions"]]
    return Dataset(interactions, catalog, name=doc["name"])


def save(d: Dataset, path: str | Path):
    Path(path).write_bytes(dumps(d))


def load(path: str | Path) -> Dataset:
    return loads(Path(path).read_bytes())
