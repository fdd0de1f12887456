#!/usr/bin/env python3
"""
Startup script for the supermatch toolkit
"""
import sys

from cli import main

if __name__ == '__main__':
    sys.exit(main())
