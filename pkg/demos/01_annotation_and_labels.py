"""From bracket annotation to per-token states.

A disfluency is written ``[ reparandum + {interregnum} repair ]``; ``[S``
marks a repetition. Each sentence below is parsed, rendered back, and
labelled under the three built-in schemes.
"""
from disfluency.corpus import cleaned_words, collapse_labels, derive_labels, parse_annotated_line, render
from disfluency.schemes import EIGHT, EXTENDED, FIVE

LINES = [
    "[ by + ] it was attached to",
    "[S it's + {uh} it's ] almost like",
    "[ I just + I ] enjoy working",
    "[S the + th- + the ] decision",
]

for line in LINES:
    s = parse_annotated_line(line)
    assert render(s) == line
    print(line)
    for sp in s.spans:
        print(f"  span: reparandum={sp.reparandum} interregnum={sp.interregnum} "
              f"repair={sp.repair} kind={sp.kind}")
    width = max(len(w) for w in s.words) + 2
    for scheme in (FIVE, EIGHT, EXTENDED):
        labels = derive_labels(s, scheme)
        print(f"  {scheme.name:<9}" + "".join(f"{l:<{max(width, 12)}}" for l in labels))
    print("  words   " + "".join(f"{w:<{max(width, 12)}}" for w in s.words))
    # the eight-state labels collapse onto the five-state ones
    assert collapse_labels(derive_labels(s, EIGHT), EIGHT) == derive_labels(s, FIVE)
    print("  cleaned:", " ".join(s.words[i] for i in cleaned_words(s)))
    print()
