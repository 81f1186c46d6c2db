"""Legacy-VTK output of meshes and discontinuous fields.

Fields are sampled at element vertices with points duplicated per element,
so interelement discontinuities survive in the output.
"""

import numpy as np


def write_vtk_mesh(path, mesh, title="triangulation"):
    """Unstructured-grid dump of the triangulation (shared points, no data)."""
    with open(path, "w") as out:
        out.write("# vtk DataFile Version 3.0\n")
        out.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        out.write(f"POINTS {mesh.num_vertices} double\n")
        for x, y in mesh.vertices:
            out.write(f"{x:.12g} {y:.12g} 0\n")
        out.write(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}\n")
        for tri in mesh.triangles:
            out.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
        out.write(f"CELL_TYPES {mesh.num_triangles}\n")
        out.write("\n".join(["5"] * mesh.num_triangles) + "\n")


def write_vtk_fields(path, vel_field, pres_field, title="flow state"):
    """Velocity vectors and pressure scalars at per-element vertices."""
    mesh = vel_field.space.mesh
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    phi_v = vel_field.space.basis.eval(corners)
    phi_p = pres_field.space.basis.eval(corners)
    vel = np.einsum("ecj,qj->eqc", vel_field.space.coeff_view(vel_field.coeffs), phi_v)
    pres = np.einsum("ecj,qj->eqc", pres_field.space.coeff_view(pres_field.coeffs),
                     phi_p)[:, :, 0]
    coords = mesh.vertices[mesh.triangles]  # (nt, 3, 2)

    nt = mesh.num_triangles
    with open(path, "w") as out:
        out.write("# vtk DataFile Version 3.0\n")
        out.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        out.write(f"POINTS {3 * nt} double\n")
        for e in range(nt):
            for v in range(3):
                out.write(f"{coords[e, v, 0]:.12g} {coords[e, v, 1]:.12g} 0\n")
        out.write(f"CELLS {nt} {4 * nt}\n")
        for e in range(nt):
            out.write(f"3 {3 * e} {3 * e + 1} {3 * e + 2}\n")
        out.write(f"CELL_TYPES {nt}\n")
        out.write("\n".join(["5"] * nt) + "\n")
        out.write(f"POINT_DATA {3 * nt}\n")
        out.write("VECTORS velocity double\n")
        for e in range(nt):
            for v in range(3):
                out.write(f"{vel[e, v, 0]:.12g} {vel[e, v, 1]:.12g} 0\n")
        out.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for e in range(nt):
            for v in range(3):
                out.write(f"{pres[e, v]:.12g}\n")
