"""Single-root seed derivation.

Every random draw in the toolkit is keyed off one root seed through
``derive_seed(root, purpose, ...)`` so that outputs are reproducible
regardless of processing order or worker count.
"""

from __future__ import annotations

import hashlib


def derive_seed(root_seed: int, *tags: str | int) -> int:
    """Derive a 64-bit sub-seed from the root seed and a tag path.

    The derivation is sha256 over "root|tag1|tag2|..." taken little-endian
    from the first 8 digest bytes; stable across platforms and runs.
    """
    material = "|".join([str(int(root_seed))] + [str(t) for t in tags])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
