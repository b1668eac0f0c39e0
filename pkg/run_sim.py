#!/usr/bin/env python3
"""
Command-line entry point for the ISATN carbon-aware orchestration simulator.

    python run_sim.py validate
    python run_sim.py run --policy qos --seed 1 --out out/qos
    python run_sim.py train-rl --episodes 50 --out policy.json
    python run_sim.py compare --seeds 1,2,3 --policy-file policy.json --out out/compare
"""
from dotenv import load_dotenv

from isatn_sim.cli import main

if __name__ == "__main__":
    load_dotenv()
    main()
