"""
Main entry point for the PAC-Bayes bound-minimisation project.

Usage:
    uv run python main.py train --dataset mushrooms --model linear --posterior dirac
    uv run python main.py certify --dataset mushrooms --checkpoint results/reports/run.pbfg
    uv run python main.py lipschitz --dataset yeast --model linear
    uv run python main.py student --p 3 --d 10 --sigma 0.01 --m 1000 --lip 0.5
    uv run python main.py reproduce linear-dirac-data-free-mushrooms linear-gaussian-data-free-yeast

See ``src/cli.py`` for every flag.
"""

from src.cli import main

if __name__ == "__main__":
    exit(main())
