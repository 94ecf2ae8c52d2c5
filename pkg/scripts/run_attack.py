"""Run the attack experiment; extra arguments are passed through as config flags.

    python3 scripts/run_attack.py --config scripts/batch_reactor.conf --outdir out
"""

import sys

from privctrl.cli import main

if __name__ == "__main__":
    sys.exit(main(["attack", *sys.argv[1:]]))
