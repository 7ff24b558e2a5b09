"""Download the South African heart-disease table and keep the age and chd columns.

The data are not redistributed with this repository. The source is the
public dataset page of The Elements of Statistical Learning.

    python scripts/fetch_heart.py data/heart.csv
"""

import argparse
import csv
import io
import urllib.error
import urllib.request
from pathlib import Path

URL = "https://hastie.su.domains/ElemStatLearn/datasets/SAheart.data"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("output", nargs="?", default="data/heart.csv")
    p.add_argument("--url", default=URL)
    args = p.parse_args()

    try:
        with urllib.request.urlopen(args.url, timeout=60) as resp:
            text = resp.read().decode()
    except (urllib.error.URLError, TimeoutError) as exc:
        raise SystemExit(f"could not download {args.url}: {exc}") from None
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"age", "chd"} <= set(rows[0]):
        raise SystemExit(f"unexpected format from {args.url}")
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["age", "chd"])
        for r in rows:
            wr.writerow([r["age"], r["chd"]])
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
