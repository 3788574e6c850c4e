"""Dyadic Carleson boxes on the disk: meshes, exact areas, the box heap."""

import numpy as np

from bergmanlab import DiskMesh, DyadicInterval, box_area, top_area

mesh = DiskMesh("G1", depth=4)
print(f"depth-4 mesh: {mesh.ncells} cells, {mesh.z.size} quadrature nodes")
rim = 1.0 - 2.0 ** -5
print(f"cell areas sum to {mesh.cell_area.sum():.12f} = rim^2 = {rim * rim:.12f}")

iv = DyadicInterval("G1", 2, 1)
ln = iv.length
print(f"\ninterval level 2 index 1: arc [{iv.start}, {iv.start + ln})")
print(f"closed-form box area  {box_area(ln):.12f}")
print(f"closed-form top half  {top_area(ln):.12f}")
print(f"quadrature top half   {mesh.cell_area[iv.cell_id]:.12f}")

sums = mesh.box_sums(mesh.cell_area, 4)
c = iv.cell_id
additive = mesh.cell_area[c] + sums[2 * c + 1] + sums[2 * c + 2]
print(f"\nbox heap: parent mass {sums[c]:.12f} = own cell + children = {additive:.12f}")

lengths = 2.0 ** -np.arange(1, 6)
areas = np.array([box_area(x) for x in lengths])
print("\narc lengths:", np.array2string(lengths, precision=6))
print("box areas  :", np.array2string(areas, precision=6))
