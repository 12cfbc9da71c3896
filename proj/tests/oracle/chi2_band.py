#!/usr/bin/env python3
"""Prints the chi-square critical value used as the class-frequency sanity
band in the scene-generator test (uniform class sampling over an 80-class
catalog => df = 79). The C++ test freezes the 0.999 quantile printed here.
"""
from scipy.stats import chi2

for df in (79,):
    for q in (0.999, 0.9999):
        print(f"df={df} q={q}: {chi2.ppf(q, df):.6f}")
