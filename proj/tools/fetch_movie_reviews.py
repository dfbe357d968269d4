#!/usr/bin/env python3
"""Extract the Rotten Tomatoes sentence-polarity corpus from the
`movie-reviews` wheel on PyPI and write it as a text,label CSV."""

import argparse
import csv
import glob
import io
import os
import subprocess
import sys
import tempfile
import zipfile

PACKAGE = "movie-reviews"
VERSION = "0.0.2"
MEMBER = "movie_reviews/data/combined_movie_reviews.csv"


def download_wheel(dest):
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                    "-d", dest, f"{PACKAGE}=={VERSION}"], check=True)
    wheels = glob.glob(os.path.join(dest, "*.whl"))
    if not wheels:
        sys.exit("pip did not produce a wheel for %s %s" % (PACKAGE, VERSION))
    return wheels[0]


def read_rows(wheel, source):
    rows = csv.DictReader(io.TextIOWrapper(wheel.open(MEMBER), encoding="utf-8"))
    return [(row["text"], row["label"]) for row in rows if row["source"] == source]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/movie_reviews.csv")
    ap.add_argument("--source", default="rotten_tomatoes")
    ap.add_argument("--wheel", help="use an already downloaded wheel")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        path = args.wheel or download_wheel(tmp)
        with zipfile.ZipFile(path) as wheel:
            kept = read_rows(wheel, args.source)
    if not kept:
        sys.exit("no rows with source == %r" % args.source)

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["text", "label"])
        w.writerows(kept)
    print("wrote %d rows to %s" % (len(kept), args.out))


if __name__ == "__main__":
    main()
