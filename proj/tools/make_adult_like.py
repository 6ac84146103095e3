#!/usr/bin/env python3
"""Generate an offline stand-in for the UCI Adult census table.

The real file (https://archive.ics.uci.edu/dataset/2/adult) cannot be fetched
inside the build sandbox, so this script writes a table with the same column
layout, the same category vocabularies (a subset), a '?' missing-value marker
and an income label that is correlated with the protected attribute. The fair
classification configs accept either this file or the real adult.data once it
has been converted with tools/fetch_datasets.sh.

Output is deterministic for a given --seed.
"""

import argparse
import csv

import numpy as np

WORKCLASS = ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
             "Local-gov", "State-gov"]
MARITAL = ["Married-civ-spouse", "Divorced", "Never-married", "Separated",
           "Widowed"]
OCCUPATION = ["Tech-support", "Craft-repair", "Other-service", "Sales",
              "Exec-managerial", "Prof-specialty", "Machine-op-inspct",
              "Adm-clerical"]
RELATIONSHIP = ["Wife", "Own-child", "Husband", "Not-in-family", "Unmarried"]
RACE = ["White", "Black", "Asian-Pac-Islander", "Other"]
SEX = ["Female", "Male"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", default="data/adult_like.csv")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.rows
    sex = rng.choice(2, size=n, p=[0.33, 0.67])
    age = np.clip(rng.normal(38.5, 13.0, n), 17, 90).round().astype(int)
    edu = np.clip(rng.normal(10.0, 2.5, n), 1, 16).round().astype(int)
    hours = np.clip(rng.normal(40.0 + 3.0 * sex, 11.0, n), 1, 99).round().astype(int)
    gain = np.where(rng.random(n) < 0.08, rng.exponential(8000.0, n), 0.0).round().astype(int)
    loss = np.where(rng.random(n) < 0.05, rng.exponential(1800.0, n), 0.0).round().astype(int)
    workclass = rng.choice(len(WORKCLASS), size=n, p=[0.70, 0.08, 0.04, 0.04, 0.07, 0.07])
    marital = rng.choice(len(MARITAL), size=n, p=[0.46, 0.14, 0.33, 0.03, 0.04])
    occupation = rng.choice(len(OCCUPATION), size=n)
    relationship = np.where(
        marital == 0, np.where(sex == 1, 2, 0),
        rng.choice([1, 3, 4], size=n, p=[0.3, 0.5, 0.2]))
    race = rng.choice(len(RACE), size=n, p=[0.85, 0.10, 0.03, 0.02])

    logit = (-8.2 + 0.045 * age + 0.33 * edu + 0.03 * hours
             + 0.00012 * gain + 0.0004 * loss
             + 1.1 * (marital == 0) + 0.6 * np.isin(occupation, [4, 5])
             + 0.9 * sex)
    income = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))

    missing_workclass = rng.random(n) < 0.02
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age", "workclass", "education_num", "marital_status",
                    "occupation", "relationship", "race", "sex",
                    "capital_gain", "capital_loss", "hours_per_week", "income"])
        for i in range(n):
            w.writerow([
                age[i],
                "?" if missing_workclass[i] else WORKCLASS[workclass[i]],
                edu[i], MARITAL[marital[i]], OCCUPATION[occupation[i]],
                RELATIONSHIP[relationship[i]], RACE[race[i]], SEX[sex[i]],
                gain[i], loss[i], hours[i],
                ">50K" if income[i] else "<=50K",
            ])


if __name__ == "__main__":
    main()
