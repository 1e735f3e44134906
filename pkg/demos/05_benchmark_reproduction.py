#!/usr/bin/env python3
"""Reproduce the published dialect-robustness drop table from the bundled
per-dialect score means, and correlate the three metrics.

Run from the repository root:  python demos/05_benchmark_reproduction.py
"""

from dialectkit import pearson_r
from dialectkit import tables

expected = tables.expected_drops()

print("VQAScore drops recomputed from per-dialect means (concise prompts):")
print(f"{'model':34s} " + " ".join(f"{d:>6s}" for d in tables.DIALECTS) + "  overall")
for model in tables.benchmark_models():
    per_dialect, overall = tables.computed_drops("vqascore", model, "concise")
    cells = " ".join(f"{per_dialect[d]:6.2f}" for d in tables.DIALECTS)
    exp = expected[(model, "concise")].overall["vqascore"]
    print(f"{model:34s} {cells}  {overall:7.2f} (published {exp:.2f})")

print("\nthree published cells are self-inconsistent; the errata fixture "
      "records the evidence:")
for e in tables.load_errata():
    print(f"  {e.model} / {e.style} / {e.field}: published {e.published} -> "
          f"{e.corrected}")
    print(f"    why: {e.evidence}")

# Study-level metric agreement: correlate overall drops across all rows.
rows = list(tables.load_published_drops().values())
human = [r.overall["human"] for r in rows]
vqa = [r.overall["vqascore"] for r in rows]
clip = [r.overall["clipscore"] for r in rows]
print(f"\nmetric correlations over {len(rows)} (model, style) rows:")
print(f"  r(human, vqascore)  = {pearson_r(human, vqa):.3f}")
print(f"  r(human, clipscore) = {pearson_r(human, clip):.3f}")
print(f"  r(vqascore, clipscore) = {pearson_r(vqa, clip):.3f}")
