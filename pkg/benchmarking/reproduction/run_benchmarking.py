import argparse
from os.path import join, exists
from fracdecay import cli

#load command line args
parser = argparse.ArgumentParser(description="Reproduce the inverse-opal band-edge and decay results",
                                 formatter_class=argparse.ArgumentDefaultsHelpFormatter)
parser.add_argument("--out", default="./results", help="folder holding one subfolder per preset")
parser.add_argument("--threads", type=int, default=4)
parser.add_argument("--skip-crystal", action="store_true",
                    help="only run the emitter dynamics, which need no plane-wave solves")
args = parser.parse_args()

# preset, command, file whose presence marks a finished run
runs = [
        ("fig1", "ldos", "ldos_histogram.dat"),
        ("fig2", "kbe-map", "kbe_map.dat"),
        ("fig3", "decay", "decay_lossless.dat"),
        ("fig4", "df-scan", "df_scan.dat"),
        ("vacuum", "decay", "decay_vacuum.dat"),
        ]

for preset, command, marker in runs:
    if args.skip_crystal and command in ("ldos", "kbe-map"):
        continue
    out_dir = join(args.out, preset)
    if exists(join(out_dir, marker)):
        print('{0} already computed! skipping...'.format(preset))
        continue
    print('running {0} for preset {1}'.format(command, preset))
    code = cli.main([command, "--preset", preset, "--out", out_dir, "--threads", str(args.threads), "-v"])
    if code != 0:
        print('{0} failed with exit code {1}'.format(preset, code))
