import glob
import os
import sys

# Allow running against a CMake build tree without installing the wheel.
_here = os.path.dirname(os.path.abspath(__file__))
_root = os.path.dirname(os.path.dirname(_here))
for _cand in sorted(glob.glob(os.path.join(_root, "build*", "python"))):
    if os.path.isdir(os.path.join(_cand, "polyrec")) and _cand not in sys.path:
        sys.path.insert(0, _cand)
