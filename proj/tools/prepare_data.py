#!/usr/bin/env python3
# Copyright 2026 The ShapNet Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the tabular datasets used by the presets as headered CSV files.

  prepare_data.py breast-cancer data/breast_cancer.csv
  prepare_data.py yeast /path/to/yeast.data data/yeast.csv
  prepare_data.py yeast-keel /path/to/keel_ds-*.whl data/yeast.csv

The Breast Cancer Wisconsin (Diagnostic) table comes from the copy bundled
with scikit-learn. Yeast normally comes from the UCI repository as a
whitespace separated file with the sequence name first and the localization
class last.

When UCI is out of reach, yeast-keel rebuilds the same table from the
one-vs-rest partitions that the keel-ds package ships. Each partition holds
a subset of the 1484 rows with a binary label; intersecting them recovers
the ten localization classes. The result is checked against the class
counts documented for the UCI file and against every partition, and the
script refuses to write anything if a row is ambiguous.
"""

import argparse
import collections
import csv
import os
import sys
import zipfile

YEAST_COLUMNS = ["mcg", "gvh", "alm", "mit", "erl", "pox", "vac", "nuc"]

YEAST_CLASS_COUNTS = {
    "CYT": 463, "NUC": 429, "MIT": 244, "ME3": 163, "ME2": 51,
    "ME1": 44, "EXC": 35, "VAC": 30, "POX": 20, "ERL": 5,
}

# KEEL numbers the classes; the partition sizes pin the numbering down.
KEEL_CLASS_IDS = ["MIT", "NUC", "CYT", "ME1", "ME2", "ME3", "EXC", "VAC",
                  "POX", "ERL"]

KEEL_ONE_VS_REST = {"yeast1": "NUC", "yeast3": "ME3", "yeast4": "ME2",
                    "yeast5": "ME1", "yeast6": "EXC"}


def write_breast_cancer(out_path):
  from sklearn.datasets import load_breast_cancer
  bunch = load_breast_cancer()
  names = [n.replace(" ", "_") for n in bunch.feature_names]
  # sklearn encodes malignant as 0; keep the original diagnosis letters.
  letters = {0: "M", 1: "B"}
  with open(out_path, "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(names + ["diagnosis"])
    for row, target in zip(bunch.data, bunch.target):
      w.writerow([repr(float(v)) for v in row] + [letters[int(target)]])
  return len(bunch.data)


def write_yeast(raw_path, out_path):
  rows = []
  with open(raw_path) as f:
    for line_no, line in enumerate(f, 1):
      cells = line.split()
      if not cells:
        continue
      if len(cells) != 10:
        sys.exit(f"{raw_path}:{line_no}: expected 10 fields, got {len(cells)}")
      rows.append(cells)
  with open(out_path, "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["sequence_name"] + YEAST_COLUMNS + ["localization"])
    w.writerows(rows)
  return len(rows)


class _KeelSource:
  """Reads raw .dat partitions from a keel-ds wheel or package directory."""

  def __init__(self, path):
    self._zip = None
    self._dir = None
    if zipfile.is_zipfile(path):
      self._zip = zipfile.ZipFile(path)
    else:
      self._dir = path

  def partition_names(self):
    prefix = "keel_ds/data/imbalanced/raw/"
    if self._zip is not None:
      names = [n[len(prefix):] for n in self._zip.namelist()
               if n.startswith(prefix)]
    else:
      base = os.path.join(self._dir, prefix)
      if not os.path.isdir(base):
        base = os.path.join(self._dir, prefix.split("/", 1)[1])
      names = os.listdir(base)
    return sorted(n[:-4] for n in names
                  if n.startswith("yeast") and n.endswith(".dat"))

  def rows(self, name):
    rel = f"keel_ds/data/imbalanced/raw/{name}.dat"
    if self._zip is not None:
      text = self._zip.read(rel).decode()
    else:
      candidates = [os.path.join(self._dir, rel),
                    os.path.join(self._dir, rel.split("/", 1)[1])]
      found = next((c for c in candidates if os.path.exists(c)), None)
      if found is None:
        sys.exit(f"cannot find {rel} under {self._dir}")
      with open(found) as f:
        text = f.read()
    out = []
    for line in text.splitlines():
      if not line.strip() or line.startswith("@"):
        continue
      cells = [c.strip() for c in line.split(",")]
      # Values are two-decimal in the source; normalize '0.5' vs '0.50'.
      key = tuple(round(float(v), 2) for v in cells[:-1])
      out.append((key, cells[-1] == "positive"))
    return out


def _partition_classes(name):
  left, right = name[len("yeast-"):].split("_vs_")
  ids = lambda s: {KEEL_CLASS_IDS[int(i)] for i in s.split("-")}
  return ids(left), ids(right)


def reconstruct_yeast(source):
  def pool(name, positive=True):
    return collections.Counter(k for k, p in source.rows(name) if p == positive)

  master = [k for k, _ in source.rows("yeast1")]
  pools = {cls: pool(name) for name, cls in KEEL_ONE_VS_REST.items()}
  pools["VAC"] = pool("yeast-1-2-8-9_vs_7")
  pools["POX"] = pool("yeast-2_vs_8")
  pools["CYT"] = pool("yeast-2_vs_4", positive=False)
  wide = "yeast-0-2-5-6_vs_3-7-8-9"
  pools["ERL"] = pool(wide) - pools["ME1"] - pools["VAC"] - pools["POX"]
  pools["MIT"] = (pool(wide, positive=False) - pools["CYT"] - pools["ME3"] -
                  pools["EXC"])

  labels = []
  for key in master:
    hits = [cls for cls, p in pools.items() if p[key] > 0]
    if len(hits) != 1:
      sys.exit(f"row {key} matches classes {hits}; refusing to guess")
    pools[hits[0]][key] -= 1
    labels.append(hits[0])

  counts = collections.Counter(labels)
  if dict(counts) != YEAST_CLASS_COUNTS:
    sys.exit(f"class counts {dict(counts)} differ from {YEAST_CLASS_COUNTS}")

  # Every shipped partition must agree with the rebuilt labels.
  by_class = collections.defaultdict(collections.Counter)
  for key, cls in zip(master, labels):
    by_class[cls][key] += 1
  checked = 0
  for name in source.partition_names():
    if name in KEEL_ONE_VS_REST or len(source.rows(name)[0][0]) != 8:
      continue
    neg, pos = _partition_classes(name)
    expect = collections.Counter()
    for cls, positive in [(c, False) for c in neg] + [(c, True) for c in pos]:
      for key, n in by_class[cls].items():
        expect[(key, positive)] += n
    got = collections.Counter(source.rows(name))
    # KEEL drops a few exact duplicates inside partitions.
    if got - expect or sum((expect - got).values()) > 2:
      sys.exit(f"partition {name} disagrees with the rebuilt labels")
    checked += 1
  return master, labels, checked


def write_yeast_keel(source_path, out_path):
  source = _KeelSource(source_path)
  rows, labels, checked = reconstruct_yeast(source)
  with open(out_path, "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(YEAST_COLUMNS + ["localization"])
    for key, cls in zip(rows, labels):
      w.writerow([f"{v:.2f}" for v in key] + [cls])
  print(f"cross-checked against {checked} partitions")
  return len(rows)


def main():
  parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
  sub = parser.add_subparsers(dest="dataset", required=True)
  bc = sub.add_parser("breast-cancer")
  bc.add_argument("out")
  ye = sub.add_parser("yeast")
  ye.add_argument("raw")
  ye.add_argument("out")
  yk = sub.add_parser("yeast-keel")
  yk.add_argument("source", help="keel-ds wheel or unpacked package")
  yk.add_argument("out")
  args = parser.parse_args()
  if args.dataset == "breast-cancer":
    n = write_breast_cancer(args.out)
  elif args.dataset == "yeast":
    n = write_yeast(args.raw, args.out)
  else:
    n = write_yeast_keel(args.source, args.out)
  print(f"wrote {n} rows to {args.out}")


if __name__ == "__main__":
  main()
