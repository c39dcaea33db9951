import argparse
import numpy as np
import pandas as pd
from glob import glob
from os.path import join, exists
from fracdecay.base.io import read_table

parser = argparse.ArgumentParser(description="Compare reproduced values with the published ones")
parser.add_argument("--out", default="./results")
args = parser.parse_args()

rows = []

def add(quantity, reference, value, tolerance):
    ok = value is not None and abs(value - reference) <= tolerance
    rows.append({'quantity': quantity, 'reference': reference, 'value': value, 'tolerance': tolerance, 'ok': ok})

#fractional strengths of PbSe dots at the fixed detuning
strengths = {"lossless": 0.84, "3e-4 cm^-1": 0.87, "3e-5 cm^-1": 0.96}
for path in sorted(glob(join(args.out, "fig3", "decay_*.dat"))):
    _, meta = read_table(path)
    label = meta["alpha_label"]
    if label in strengths:
        add(f"|a|^2 {label}", strengths[label], float(meta["strength"]), 0.02)

#vacuum decay rate in units of the golden-rule rate
path = join(args.out, "vacuum", "decay_vacuum.dat")
if exists(path):
    frame, meta = read_table(path)
    tail = frame["population"] > 1e-3
    slope = np.polyfit(frame["t"][tail], np.log(frame["population"][tail]), 1)[0]
    beta = float(meta["emitter.beta"])
    add("vacuum rate / Gamma0", 1.0, -slope / (2 * np.pi * beta), 1e-3)

#band-edge prefactor and square-root law at the H point
path = join(args.out, "fig1", "ldos_histogram.dat")
if exists(path):
    _, meta = read_table(path)
    for o in ["x", "y", "z"]:
        key = f"k_be_scaled_{o}"
        if key in meta:
            add(f"K_BE at H ({o})", 10.0, float(meta[key]), 3.0)
    if meta.get("fit_exponent", "None") != "None":
        add("LDOS exponent", 0.5, float(meta["fit_exponent"]), 0.05)

#degree of fractional decay falls with coupling
path = join(args.out, "fig4", "df_scan.dat")
if exists(path):
    frame, _ = read_table(path)
    for delta, group in frame.groupby("delta_over_omega"):
        d_f = group.sort_values("beta_k")["d_f_resolved"].to_numpy()
        add(f"D_f monotone (delta={delta:g})", 0.0, float(max(np.diff(d_f).max(), 0.0)), 1e-3)

results_df = pd.DataFrame(rows, columns=['quantity', 'reference', 'value', 'tolerance', 'ok'])
print(results_df.to_string(index=False))
results_df.to_csv(join(args.out, 'benchmarking_results.csv'), index=False)
