"""
Tutorial 03: Propagate one labeled view to every view through instance
masks, and look at the boundary-region restriction.

Prerequisites:
  python tutorials/01_synthetic_scene.py

Run:
  python tutorials/03_pseudo_labels.py
"""

import numpy as np

from semsplat.cli.commands import cmd_pseudo
from semsplat.pseudolabel import UNASSIGNED


def main() -> None:
    pseudo = cmd_pseudo("runs/tutorial_scene", reference="random", margin=0.15, seed=0)
    print(f"reference view: {pseudo.reference_view}")
    print(f"instance -> class: {pseudo.classes}")
    print(f"instances supervised only inside the boundary region: {sorted(pseudo.flagged)}")
    for view_id, labels in sorted(pseudo.labels.items())[:3]:
        boundary = pseudo.boundary[view_id]
        assigned = np.count_nonzero(labels != UNASSIGNED)
        print(f"  {view_id}: {assigned} labeled pixels, {int(boundary.sum())} boundary pixels")


if __name__ == "__main__":
    main()
