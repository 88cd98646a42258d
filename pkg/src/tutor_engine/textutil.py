"""Code-aware text helpers shared by the metrics and voting modules."""

from __future__ import annotations

import re

UNBALANCED_FENCE = "unbalanced-fence"

_INLINE_CODE = re.compile(r"`[^`\n]*`")


def strip_code(text: str) -> tuple[str, list[str]]:
    """Replace fenced code blocks and inline code spans with a single space.

    Fences are triple-backtick pairs; an unmatched opening fence swallows the
    rest of the text (conservative) and is reported as a warning. Replacing
    with a space rather than deleting keeps prose on either side of a block
    from fusing into one word or sentence.
    """
    warnings: list[str] = []
    parts = text.split("```")
    if len(parts) % 2 == 0:
        # Odd number of fence markers: drop everything after the last opener.
        warnings.append(UNBALANCED_FENCE)
        parts = parts[:-1] + [""]
    prose = " ".join(parts[::2])
    prose = _INLINE_CODE.sub(" ", prose)
    return prose, warnings
