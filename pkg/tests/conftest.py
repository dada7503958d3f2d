import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

WORKERS = min(2, os.cpu_count() or 1)
