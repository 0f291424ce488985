#!/usr/bin/env python3
"""
MALEFIC - Main Entry Point

Usage:
    python main.py pipeline --preset tiny --artifacts artifacts
    python main.py train --data artifacts/data --modalities text,audio
    python main.py classify --data bundle/ --checkpoint model.ckpt.json --json
"""

import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli import main


if __name__ == "__main__":
    sys.exit(main())
