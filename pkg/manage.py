#!/usr/bin/env python
"""Command-line entry point for domain discovery, gradual self-training and experiment runs."""
from experiments.cli import main

if __name__ == '__main__':
    main()
