#!/usr/bin/env python3
"""Convert the public spam and news corpora to the text,label CSV layout.

  spam: SMSSpamCollection (tab-separated "label<TAB>text", UCI release)
  news: Fake.csv and True.csv (Kaggle "Fake and real news"); title and body
        are joined with a newline
"""

import argparse
import csv
import os
import random


def write(path, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["text", "label"])
        w.writerows(rows)
    print("wrote %d rows to %s" % (len(rows), path))


def spam(args):
    rows = []
    with open(args.input, encoding="utf-8", errors="replace") as f:
        for line in f:
            line = line.rstrip("\r\n")
            if not line:
                continue
            label, _, text = line.partition("\t")
            rows.append((text, label))
    write(args.out, rows)


def news(args):
    rows = []
    for path, label in ((args.fake, "fake"), (args.true, "real")):
        csv.field_size_limit(1 << 30)
        with open(path, encoding="utf-8", newline="") as f:
            for row in csv.DictReader(f):
                text = (row.get("title", "") + "\n" + row.get("text", "")).strip()
                if text:
                    rows.append((text, label))
    if args.max_samples and len(rows) > args.max_samples:
        rng = random.Random(args.seed)
        rows = rng.sample(rows, args.max_samples)
    write(args.out, rows)


def main():
    ap = argparse.ArgumentParser()
    sub = ap.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("spam")
    s.add_argument("input")
    s.add_argument("--out", default="data/spam_ham.csv")
    s.set_defaults(fn=spam)
    n = sub.add_parser("news")
    n.add_argument("fake")
    n.add_argument("true")
    n.add_argument("--out", default="data/fake_news.csv")
    n.add_argument("--max-samples", type=int, default=10000)
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(fn=news)
    args = ap.parse_args()
    args.fn(args)


if __name__ == "__main__":
    main()
