"""
Script evaluates the limit law of diffusion in a spectrally negative stable environment and validates it by Monte Carlo.

    python run_stablenv.py bias --alpha-min 1 --alpha-max 2 --points 3
    python run_stablenv.py simulate --alpha 1.5 --paths 2000 --threads 4
    python run_stablenv.py verify --fast
"""
import sys

from stablenv.cli import run

if __name__ == '__main__':
    sys.exit(run())
