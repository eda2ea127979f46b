"""Regenerates samples/corpus.jsonl: a small synthetic multi-theme esports corpus."""
import json
import random

rng = random.Random(2023)

groups = {
    "medals": "gold silver bronze medal podium ceremony anthem winners champion final victory flag proud".split(),
    "venue": "hangzhou venue arena stadium tickets volunteers organizers schedule opening ceremony lights crowd".split(),
    "players": "faker player legend carry clutch mvp rookie veteran teamfight highlight outplay streamer".split(),
    "titles": "dota league legends streetfighter fifa pubg arena kings valor moba fighting roster patch".split(),
    "debate": "sport recognition olympic debate official future esport real athletes respect legitimacy mainstream".split(),
}
decor = ["", "#AsianGames ", "@fan{n} ", "", "", "https://t.co/{n} "]
tags = ["esports", "asian games", "hangzhou 2023", "asiangames"]

lines, seen, n = [], set(), 0
for name, vocab in groups.items():
    made = 0
    while made < 60:
        words = rng.sample(vocab, rng.randint(6, 9))
        body = " ".join(words)
        if body in seen:
            continue
        seen.add(body)
        tag = rng.choice(tags)
        text = f"{rng.choice(decor).format(n=n)}{body} {tag}!"
        day = rng.choice(range(20, 41))
        ts = f"2023-09-{day:02d}" if day <= 30 else f"2023-10-{day - 30:02d}"
        lines.append({"id": f"s{n:04d}", "text": text, "ts": ts + "T08:30:00Z",
                      "likes": rng.randint(0, 500), "retweets": rng.randint(0, 80), "lang": "en"})
        n += 1
        made += 1
# Off-topic posts the keyword filter removes.
for i in range(20):
    lines.append({"id": f"x{i:03d}", "text": f"weekend brunch coffee recipe number {i}", "ts": "2023-09-30T10:00:00Z",
                  "likes": 1, "retweets": 0})
rng.shuffle(lines)
with open("corpus.jsonl", "w") as f:
    for l in lines:
        f.write(json.dumps(l) + "\n")
