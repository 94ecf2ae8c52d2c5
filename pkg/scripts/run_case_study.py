"""Run the case-study experiment; extra arguments are passed through as config flags.

    python3 scripts/run_case_study.py --config scripts/batch_reactor.conf --outdir out
"""

import sys

from privctrl.cli import main

if __name__ == "__main__":
    sys.exit(main(["case-study", *sys.argv[1:]]))
