#pragma once

#include "cpfmesh/mesh.hpp"

// Analytic test surfaces. All carry exact vertex normals except the flat grid.
namespace cpfmesh::shapes {

TriangleSurface icosphere(int subdivisions, double radius = 1.0);
// Open cylinder along z with rings of `around` vertices and `along` quad rows, split into triangles.
TriangleSurface cylinder(double radius, double height, int around, int along);
// Flat square [0,size]^2 in the z = 0 plane with n x n quads.
TriangleSurface grid(int n, double size = 1.0);
// z = (x^2 - y^2) / 2 over [-extent, extent]^2.
TriangleSurface hyperbolic_paraboloid(int n, double extent = 1.0);
// Torus with major radius R and tube radius r, major angle restricted to [0, sweep].
TriangleSurface torus_sector(double R, double r, double sweep, int nMajor, int nMinor);

}  // namespace cpfmesh::shapes
