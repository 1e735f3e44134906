#!/usr/bin/env python3
"""Generate the bundled demonstration corpus (data/corpus.jsonl).

Fully deterministic: 2100 prompt pairs (420 per dialect, 10 lexemes x 42
prompts, half concise / half detailed) of which 432 carry a polysemy
prompt, so the corpus totals 4632 prompt strings.  Lexeme pairs are real
dialect/standard synonyms; the prompt text itself is synthetic template
filler, structurally valid for the loader's invariants (single-token
lexeme slot, style bounds) rather than literary.

Run from the repository root:  python tools/make_corpus.py
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dialectkit.dataset import load_dataset  # noqa: E402

# (standard lexeme, dialect lexeme, dialect lexeme has a standard sense)
LEXICON = {
    "AAE": [
        ("sneakers", "kicks", True),
        ("car", "whip", True),
        ("house", "crib", True),
        ("money", "bread", True),
        ("sunglasses", "shades", True),
        ("teeth", "grill", True),
        ("head", "dome", True),
        ("clothes", "threads", True),
        ("car", "wheels", True),
        ("money", "cheddar", True),
    ],
    "BrE": [
        ("bathroom", "loo", False),
        ("truck", "lorry", False),
        ("cookie", "biscuit", True),
        ("apartment", "flat", True),
        ("trunk", "boot", True),
        ("sweater", "jumper", True),
        ("fries", "chips", True),
        ("sneakers", "trainers", True),
        ("umbrella", "brolly", False),
        ("flashlight", "torch", True),
    ],
    "ChE": [
        ("brother", "carnal", False),
        ("truck", "troca", False),
        ("car", "ranfla", False),
        ("guy", "vato", False),
        ("mother", "jefita", False),
        ("sandals", "chanclas", False),
        ("money", "feria", False),
        ("son", "mijo", False),
        ("kids", "plebe", True),
        ("house", "chante", False),
    ],
    "InE": [
        ("eggplant", "brinjal", False),
        ("lunchbox", "tiffin", False),
        ("diner", "dhaba", False),
        ("sandal", "chappal", False),
        ("wardrobe", "almirah", False),
        ("heater", "geyser", True),
        ("gasoline", "petrol", False),
        ("yogurt", "curd", True),
        ("pepper", "capsicum", False),
        ("field", "maidan", False),
    ],
    "SgE": [
        ("squid", "sotong", False),
        ("food", "makan", False),
        ("coffee", "kopi", False),
        ("tea", "teh", False),
        ("drain", "longkang", False),
        ("village", "kampung", False),
        ("stamp", "chop", True),
        ("elevator", "lift", True),
        ("roof", "atap", False),
        ("blanket", "bolster", True),
    ],
}

# 432 polysemy prompts total, spread over the dialects in proportion to how
# many of their lexemes have a standard sense.
POLYSEMY_BUDGET = {"AAE": 111, "BrE": 111, "ChE": 42, "InE": 84, "SgE": 84}

CONCISE_TEMPLATES = [
    "a spacious {}",
    "a brand new {}",
    "one {} on a table",
    "a {} near a window",
    "two {} under warm light",
    "a shiny {}",
    "an old {}",
    "a {} in the rain",
    "a colorful {}",
    "the {} at dawn",
    "a {} on wet grass",
    "a tiny {}",
    "a {} beside a lamp",
    "a painted {}",
    "the {} in fog",
    "a {} at sunset",
    "a gleaming {}",
    "a {} on a shelf",
    "a wooden {}",
    "the {} after dark",
    "a {} in snow",
]

DETAILED_TEMPLATES = [
    "a clean and tidy {} with shiny blue tiles behind it",
    "a little girl standing proudly beside a bright red {}",
    "a wide photograph of one {} placed on a rustic table",
    "an old man carefully inspecting a {} in the morning sun",
    "a {} resting on a wooden bench near a quiet canal",
    "a close up view of a {} covered in fresh raindrops",
    "a brightly lit market stall displaying a single {} for sale",
    "a studio photograph of a {} against a plain gray backdrop",
    "a child pointing excitedly at a {} outside the shop window",
    "a weathered {} sitting alone in the middle of an empty street",
    "a {} placed neatly between two potted plants on a balcony",
    "a painter making a detailed sketch of a {} in charcoal",
    "a vintage postcard showing a {} in front of a lighthouse",
    "a museum display case holding a {} under soft white light",
    "a street photographer framing a {} against a graffiti wall",
    "a {} wrapped in brown paper on a post office counter",
    "a grandmother proudly showing her {} to the visiting family",
    "a {} balanced on a stack of old hardcover books",
    "a shop owner polishing a {} behind the glass counter",
    "a {} photographed from above on a checkered picnic blanket",
    "a delivery rider strapping a {} onto the back of a bicycle",
]

POLYSEMY_TEMPLATES = [
    "a plain {} in its everyday standard sense on a counter",
    "a photograph of an ordinary {} shown in its usual meaning",
    "a simple {} exactly as the common word would suggest",
    "an illustration of a typical {} in the familiar textbook sense",
    "a standard {} of the most conventional kind on display",
    "a regular {} pictured the way the word is normally used",
]


def build_records():
    records = []
    for dialect in sorted(LEXICON):
        budget = POLYSEMY_BUDGET[dialect]
        count = 0
        for lex_idx, (sae_lex, dia_lex, has_standard_sense) in enumerate(LEXICON[dialect]):
            for style, templates in (("concise", CONCISE_TEMPLATES),
                                     ("detailed", DETAILED_TEMPLATES)):
                for t_idx in range(21):
                    template = templates[t_idx]
                    rec = {
                        "id": f"{dialect.lower()}-{count:04d}",
                        "dialect": dialect,
                        "lexeme_sae": sae_lex,
                        "lexeme_dialect": dia_lex,
                        "sae_prompt": template.format(sae_lex),
                        "dialect_prompt": template.format(dia_lex),
                        "style": style,
                    }
                    if has_standard_sense and budget > 0:
                        ptemplate = POLYSEMY_TEMPLATES[(lex_idx + t_idx) % len(POLYSEMY_TEMPLATES)]
                        rec["polysemy_prompt"] = ptemplate.format(dia_lex)
                        budget -= 1
                    records.append(rec)
                    count += 1
        assert budget == 0, (dialect, budget)
    return records


def main():
    out_path = os.path.join(os.path.dirname(__file__), "..", "data", "corpus.jsonl")
    records = build_records()
    with open(out_path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")

    pairs = load_dataset(out_path)
    assert not pairs.violations, pairs.violations[:3]
    assert len(pairs) == 2100, len(pairs)
    assert pairs.polysemy_count == 432, pairs.polysemy_count
    assert pairs.prompt_count == 4632, pairs.prompt_count
    assert not pairs.style_warnings, pairs.style_warnings[:3]
    print(f"wrote {out_path}: {len(pairs)} pairs, {pairs.polysemy_count} polysemy, "
          f"{pairs.prompt_count} prompt strings")


if __name__ == "__main__":
    main()
