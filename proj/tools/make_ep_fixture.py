#!/usr/bin/env python3
"""Writes tests/fixtures/ep_emotion_en.jsonl.

The crowd-sourced corpus is not redistributable, so this is a stand-in with
the same per-class counts and field layout. Texts are templated.
"""
import json
import random
from pathlib import Path

COUNTS = {"fear_anxiety": 284, "anger": 297, "sadness": 300, "joy_contentment": 300}
CUES = {
    "fear_anxiety": ["worried", "nervous", "scared", "anxious", "uneasy"],
    "anger": ["furious", "annoyed", "angry", "fed up", "irritated"],
    "sadness": ["sad", "down", "lonely", "heartbroken", "low"],
    "joy_contentment": ["happy", "content", "grateful", "relaxed", "cheerful"],
}
SUBJECTS = ["work", "my family", "the exam", "my friend", "the weekend", "moving house",
            "my health", "the news", "my partner", "money"]
FRAMES = ["I feel {cue} about {subj}.", "Lately {subj} makes me {cue}.",
          "I have been {cue} since {subj} came up.", "Thinking about {subj}, I am {cue}.",
          "Honestly I am {cue} because of {subj} today."]


def main() -> None:
    rng = random.Random(1181)
    rows = []
    for label, n in COUNTS.items():
        for i in range(n):
            text = rng.choice(FRAMES).format(cue=rng.choice(CUES[label]), subj=rng.choice(SUBJECTS))
            text = f"{text} ({label[:2]}{i})"
            split = "train" if i % 10 < 8 else ("dev" if i % 10 == 8 else "test")
            rows.append({"text": text, "language": "en", "label": label, "split": split, "origin": "crowd"})
    rng.shuffle(rows)
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "ep_emotion_en.jsonl"
    with out.open("w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    print(f"wrote {len(rows)} records to {out}")


if __name__ == "__main__":
    main()
