#include "cavlev/mech.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"

namespace cavlev {

void MechGeometry::validate() const
{
    if (!(thickness > 0.0) || !(disc_radius > 0.0) || !(tether_length > 0.0) ||
        !(tether_width > 0.0))
        throw DomainError("MechGeometry: all dimensions must be > 0");
    if (!(tether_width < disc_radius))
        throw DomainError("MechGeometry: tether width must be small against the disc radius");
    if (!(material.density > 0.0) || !(material.youngs_modulus > 0.0) ||
        !(material.poisson >= 0.0 && material.poisson < 0.5))
        throw DomainError("MechGeometry: invalid material");
}

double MechGeometry::bending_rigidity() const
{
    const double t3 = thickness * thickness * thickness;
    return material.youngs_modulus * t3 / (12.0 * (1.0 - material.poisson * material.poisson));
}

MechGeometry MechGeometry::tethered_silicon_disc()
{
    MechGeometry g;
    g.thickness = 110e-9;
    g.disc_radius = 5e-6;
    g.tether_length = 45e-6;
    g.tether_width = 100e-9;
    g.material = MechMaterial{2330.0, 170e9, 0.28};
    return g;
}

std::string symmetry_name(SymmetryClass s)
{
    switch (s) {
    case SymmetryClass::symmetric: return "s";
    case SymmetryClass::antisymmetric: return "a";
    case SymmetryClass::torsional: return "t";
    case SymmetryClass::mixed: return "m";
    }
    return "?";
}

namespace {

constexpr int kW = 0;  // out-of-plane displacement
constexpr int kSy = 1; // dw/dy
constexpr int kSz = 2; // dw/dz

// ---------------------------------------------------------------------------
// DKT plate bending element (discrete Kirchhoff triangle) with slope DOFs
// (w, dw/dx, dw/dy) per corner in local plate coordinates x = global y,
// y = global z.
// ---------------------------------------------------------------------------

struct DktGeometry {
    double x[3], y[3];
    double a[3], b[3], c[3], d[3], e[3]; // side coefficients, side k opposite node k
    double x31, x12, y31, y12;
    double area2; // 2A > 0
};

DktGeometry dkt_geometry(const std::array<double, 2>& p1, const std::array<double, 2>& p2,
                         const std::array<double, 2>& p3)
{
    DktGeometry g;
    g.x[0] = p1[0]; g.y[0] = p1[1];
    g.x[1] = p2[0]; g.y[1] = p2[1];
    g.x[2] = p3[0]; g.y[2] = p3[1];
    const double x21 = g.x[1] - g.x[0], y21 = g.y[1] - g.y[0];
    g.x31 = g.x[2] - g.x[0];
    g.y31 = g.y[2] - g.y[0];
    g.x12 = -x21;
    g.y12 = -y21;
    g.area2 = x21 * g.y31 - g.x31 * y21;

    // Side k: 0 <-> (2,3), 1 <-> (3,1), 2 <-> (1,2); coefficients from the
    // directed edge i -> j.
    const int side_i[3] = {1, 2, 0};
    const int side_j[3] = {2, 0, 1};
    for (int k = 0; k < 3; ++k) {
        const double xij = g.x[side_i[k]] - g.x[side_j[k]];
        const double yij = g.y[side_i[k]] - g.y[side_j[k]];
        const double l2 = xij * xij + yij * yij;
        g.a[k] = -xij / l2;
        g.b[k] = 0.75 * xij * yij / l2;
        g.c[k] = (0.25 * xij * xij - 0.5 * yij * yij) / l2;
        g.d[k] = -yij / l2;
        g.e[k] = (0.25 * yij * yij - 0.5 * xij * xij) / l2;
    }
    return g;
}

// Derivatives of the six quadratic shape functions at (xi, eta); the
// stiffness needs only the curvature field, so shape values never appear.
void dkt_shapes_dxi(double xi, double eta, double n[6])
{
    n[0] = 4.0 * xi + 4.0 * eta - 3.0;
    n[1] = 4.0 * xi - 1.0;
    n[2] = 0.0;
    n[3] = 4.0 * eta;
    n[4] = -4.0 * eta;
    n[5] = 4.0 * (1.0 - 2.0 * xi - eta);
}

void dkt_shapes_deta(double xi, double eta, double n[6])
{
    n[0] = 4.0 * xi + 4.0 * eta - 3.0;
    n[1] = 0.0;
    n[2] = 4.0 * eta - 1.0;
    n[3] = 4.0 * xi;
    n[4] = 4.0 * (1.0 - xi - 2.0 * eta);
    n[5] = -4.0 * xi;
}

// Hx, Hy interpolation vectors over the 9 element DOFs from shape values n[].
// The mid-side rotations come from the Kirchhoff constraints: the tangential
// component follows the cubic edge interpolation of w, the normal component
// the average of the corner slopes. A node enters its "next" side (directed
// away from it) with -3/2 a_k and its "prev" side with +3/2 a_k.
void dkt_h_vectors(const DktGeometry& g, const double n[6], double hx[9], double hy[9])
{
    // Mid-side shape index for side k is 3 + k. Sides are directed
    // 0: 2->3, 1: 3->1, 2: 1->2.
    const int next_side[3] = {2, 0, 1};
    const int prev_side[3] = {1, 2, 0};
    for (int i = 0; i < 3; ++i) {
        const int sn = next_side[i];
        const int sp = prev_side[i];
        const double nn = n[3 + sn];
        const double np = n[3 + sp];
        hx[3 * i + 0] = 1.5 * (g.a[sp] * np - g.a[sn] * nn);
        hx[3 * i + 1] = n[i] - g.c[sn] * nn - g.c[sp] * np;
        hx[3 * i + 2] = -(g.b[sn] * nn + g.b[sp] * np);
        hy[3 * i + 0] = 1.5 * (g.d[sp] * np - g.d[sn] * nn);
        hy[3 * i + 1] = -(g.b[sn] * nn + g.b[sp] * np);
        hy[3 * i + 2] = n[i] - g.e[sn] * nn - g.e[sp] * np;
    }
}

// Curvature matrix B (3 x 9) at (xi, eta): kappa = (w,xx; w,yy; 2 w,xy).
Eigen::Matrix<double, 3, 9> dkt_b_matrix(const DktGeometry& g, double xi, double eta)
{
    double nxi[6], neta[6];
    dkt_shapes_dxi(xi, eta, nxi);
    dkt_shapes_deta(xi, eta, neta);
    double hx_xi[9], hy_xi[9], hx_eta[9], hy_eta[9];
    dkt_h_vectors(g, nxi, hx_xi, hy_xi);
    dkt_h_vectors(g, neta, hx_eta, hy_eta);

    Eigen::Matrix<double, 3, 9> b;
    for (int c = 0; c < 9; ++c) {
        b(0, c) = (g.y31 * hx_xi[c] + g.y12 * hx_eta[c]) / g.area2;
        b(1, c) = (-g.x31 * hy_xi[c] - g.x12 * hy_eta[c]) / g.area2;
        b(2, c) = (-g.x31 * hx_xi[c] - g.x12 * hx_eta[c] + g.y31 * hy_xi[c] +
                   g.y12 * hy_eta[c]) /
                  g.area2;
    }
    return b;
}

Eigen::Matrix<double, 9, 9> dkt_stiffness(const DktGeometry& g, double rigidity, double poisson)
{
    Eigen::Matrix3d db;
    db << 1.0, poisson, 0.0, poisson, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - poisson);
    db *= rigidity;

    static const double gauss[3][2] = {{0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}};
    Eigen::Matrix<double, 9, 9> k = Eigen::Matrix<double, 9, 9>::Zero();
    for (const auto& point : gauss) {
        const Eigen::Matrix<double, 3, 9> b = dkt_b_matrix(g, point[0], point[1]);
        k += b.transpose() * db * b;
    }
    k *= g.area2 / 6.0; // A/3 per point
    return k;
}

double rect_torsion_constant(double t, double d)
{
    const double b = std::min(t, d);
    const double c = std::max(t, d);
    const double ratio = b / c;
    return c * b * b * b * (1.0 / 3.0 - 0.21 * ratio * (1.0 - std::pow(ratio, 4) / 12.0));
}

struct TripletList {
    std::vector<Eigen::Triplet<double>> data;
    void add(int row, int col, double value)
    {
        if (row >= 0 && col >= 0 && value != 0.0)
            data.emplace_back(row, col, value);
    }
};

} // namespace

double MechModel::disc_mass() const
{
    return geometry.material.density * geometry.thickness * kPi * geometry.disc_radius *
           geometry.disc_radius;
}

Eigen::VectorXd MechModel::rigid_piston() const
{
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n_free);
    for (std::size_t node = 0; node < nodes.size(); ++node) {
        if (!on_disc[node])
            continue;
        const int dof = free_dof(static_cast<int>(node), kW);
        if (dof >= 0)
            q(dof) = 1.0;
    }
    return q;
}

Eigen::VectorXd MechModel::rigid_twist() const
{
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n_free);
    for (std::size_t node = 0; node < nodes.size(); ++node) {
        if (!on_disc[node])
            continue;
        const int w = free_dof(static_cast<int>(node), kW);
        if (w >= 0)
            q(w) = nodes[node][1]; // w = z
        const int sz = free_dof(static_cast<int>(node), kSz);
        if (sz >= 0)
            q(sz) = 1.0;
    }
    return q;
}

Eigen::VectorXd MechModel::apply_mirror_y(const Eigen::VectorXd& q) const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_free);
    for (std::size_t node = 0; node < nodes.size(); ++node) {
        const int src = mirror_y[node];
        const int w_to = free_dof(static_cast<int>(node), kW);
        const int sy_to = free_dof(static_cast<int>(node), kSy);
        const int sz_to = free_dof(static_cast<int>(node), kSz);
        const int w_from = free_dof(src, kW);
        const int sy_from = free_dof(src, kSy);
        const int sz_from = free_dof(src, kSz);
        if (w_to >= 0 && w_from >= 0)
            out(w_to) = q(w_from);
        if (sy_to >= 0 && sy_from >= 0)
            out(sy_to) = -q(sy_from);
        if (sz_to >= 0 && sz_from >= 0)
            out(sz_to) = q(sz_from);
    }
    return out;
}

Eigen::VectorXd MechModel::apply_mirror_z(const Eigen::VectorXd& q) const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_free);
    for (std::size_t node = 0; node < nodes.size(); ++node) {
        const int src = mirror_z[node];
        const int w_to = free_dof(static_cast<int>(node), kW);
        const int sy_to = free_dof(static_cast<int>(node), kSy);
        const int sz_to = free_dof(static_cast<int>(node), kSz);
        const int w_from = free_dof(src, kW);
        const int sy_from = free_dof(src, kSy);
        const int sz_from = free_dof(src, kSz);
        if (w_to >= 0 && w_from >= 0)
            out(w_to) = q(w_from);
        if (sy_to >= 0 && sy_from >= 0)
            out(sy_to) = q(sy_from);
        if (sz_to >= 0 && sz_from >= 0)
            out(sz_to) = -q(sz_from);
    }
    return out;
}

MechModel build_model(const MechGeometry& geometry, int mesh_resolution, bool clamp_tethers)
{
    geometry.validate();
    if (mesh_resolution < 4)
        throw DomainError("build_model: mesh_resolution must be >= 4");

    MechModel model;
    model.geometry = geometry;
    const double r = geometry.disc_radius;
    const int n_rings = mesh_resolution;

    // Disc nodes ring by ring; first-quadrant trigonometry is reflected so
    // the mesh is exactly mirror symmetric in y and z.
    // ring 0: center node; ring i: 4i nodes at angles pi j / (2 i).
    std::vector<std::vector<int>> ring_nodes(static_cast<std::size_t>(n_rings) + 1);
    model.nodes.push_back({0.0, 0.0});
    model.on_disc.push_back(1);
    ring_nodes[0] = {0};
    for (int i = 1; i <= n_rings; ++i) {
        const double radius = r * static_cast<double>(i) / n_rings;
        std::vector<double> cs(static_cast<std::size_t>(i) + 1), sn(static_cast<std::size_t>(i) + 1);
        for (int k = 0; k <= i; ++k) {
            cs[static_cast<std::size_t>(k)] = std::cos(kPi * k / (2.0 * i));
            sn[static_cast<std::size_t>(k)] = std::sin(kPi * k / (2.0 * i));
        }
        cs[static_cast<std::size_t>(i)] = 0.0; // angle pi/2 exactly on the z axis
        sn[0] = 0.0;
        for (int j = 0; j < 4 * i; ++j) {
            double y, z;
            if (j <= i) {
                y = cs[static_cast<std::size_t>(j)];
                z = sn[static_cast<std::size_t>(j)];
            } else if (j <= 2 * i) {
                y = -cs[static_cast<std::size_t>(2 * i - j)];
                z = sn[static_cast<std::size_t>(2 * i - j)];
            } else if (j <= 3 * i) {
                y = -cs[static_cast<std::size_t>(j - 2 * i)];
                z = -sn[static_cast<std::size_t>(j - 2 * i)];
            } else {
                y = cs[static_cast<std::size_t>(4 * i - j)];
                z = -sn[static_cast<std::size_t>(4 * i - j)];
            }
            ring_nodes[static_cast<std::size_t>(i)].push_back(static_cast<int>(model.nodes.size()));
            model.nodes.push_back({radius * y, radius * z});
            model.on_disc.push_back(1);
        }
    }

    // Triangulate between consecutive rings by walking both in angle.
    const auto add_triangle = [&](int a, int b, int c) {
        const auto& pa = model.nodes[static_cast<std::size_t>(a)];
        const auto& pb = model.nodes[static_cast<std::size_t>(b)];
        const auto& pc = model.nodes[static_cast<std::size_t>(c)];
        const double area2 = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        if (area2 < 0.0)
            model.triangles.push_back({a, c, b});
        else
            model.triangles.push_back({a, b, c});
        if (std::abs(area2) < 1e-9 * r * r / (n_rings * n_rings))
            throw DomainError("build_model: degenerate mesh triangle");
        model.mesh_disc_area += 0.5 * std::abs(area2);
    };

    for (int j = 0; j < 4; ++j)
        add_triangle(0, ring_nodes[1][static_cast<std::size_t>(j)],
                     ring_nodes[1][static_cast<std::size_t>((j + 1) % 4)]);
    for (int i = 2; i <= n_rings; ++i) {
        const auto& inner = ring_nodes[static_cast<std::size_t>(i) - 1];
        const auto& outer = ring_nodes[static_cast<std::size_t>(i)];
        const int na = static_cast<int>(inner.size());
        const int nb = static_cast<int>(outer.size());
        int ja = 0, jb = 0;
        while (ja < na || jb < nb) {
            const double next_a = static_cast<double>(ja + 1) / na;
            const double next_b = static_cast<double>(jb + 1) / nb;
            if (jb < nb && (ja == na || next_b <= next_a)) {
                add_triangle(inner[static_cast<std::size_t>(ja % na)],
                             outer[static_cast<std::size_t>(jb % nb)],
                             outer[static_cast<std::size_t>((jb + 1) % nb)]);
                ++jb;
            } else {
                add_triangle(inner[static_cast<std::size_t>(ja % na)],
                             outer[static_cast<std::size_t>(jb % nb)],
                             inner[static_cast<std::size_t>((ja + 1) % na)]);
                ++ja;
            }
        }
    }

    // Tethers along +-y, junctions at the outer-ring nodes on the y axis.
    const int junction_pos = ring_nodes[static_cast<std::size_t>(n_rings)][0];
    const int junction_neg = ring_nodes[static_cast<std::size_t>(n_rings)][static_cast<std::size_t>(2 * n_rings)];
    const int n_segments = std::max(8, mesh_resolution);
    std::vector<int> tether_pos{junction_pos}, tether_neg{junction_neg};
    for (int k = 1; k <= n_segments; ++k) {
        const double y = r + geometry.tether_length * k / n_segments;
        tether_pos.push_back(static_cast<int>(model.nodes.size()));
        model.nodes.push_back({y, 0.0});
        model.on_disc.push_back(0);
        tether_neg.push_back(static_cast<int>(model.nodes.size()));
        model.nodes.push_back({-y, 0.0});
        model.on_disc.push_back(0);
    }
    for (int k = 0; k < n_segments; ++k) {
        model.beams.push_back({tether_pos[static_cast<std::size_t>(k)], tether_pos[static_cast<std::size_t>(k) + 1]});
        model.beams.push_back({tether_neg[static_cast<std::size_t>(k) + 1], tether_neg[static_cast<std::size_t>(k)]});
    }

    // Exact mirror maps. Ring nodes: index j -> (reflection of j); tethers swap.
    const auto n_nodes = static_cast<int>(model.nodes.size());
    model.mirror_y.assign(static_cast<std::size_t>(n_nodes), -1);
    model.mirror_z.assign(static_cast<std::size_t>(n_nodes), -1);
    model.mirror_y[0] = 0;
    model.mirror_z[0] = 0;
    for (int i = 1; i <= n_rings; ++i) {
        const auto& ring = ring_nodes[static_cast<std::size_t>(i)];
        const int count = 4 * i;
        for (int j = 0; j < count; ++j) {
            // y -> -y maps angle a to pi - a: j -> 2i - j (mod 4i).
            const int jy = ((2 * i - j) % count + count) % count;
            // z -> -z maps angle a to -a: j -> -j (mod 4i).
            const int jz = ((-j) % count + count) % count;
            model.mirror_y[static_cast<std::size_t>(ring[static_cast<std::size_t>(j)])] =
                ring[static_cast<std::size_t>(jy)];
            model.mirror_z[static_cast<std::size_t>(ring[static_cast<std::size_t>(j)])] =
                ring[static_cast<std::size_t>(jz)];
        }
    }
    for (std::size_t k = 0; k < tether_pos.size(); ++k) {
        model.mirror_y[static_cast<std::size_t>(tether_pos[k])] = tether_neg[k];
        model.mirror_y[static_cast<std::size_t>(tether_neg[k])] = tether_pos[k];
        model.mirror_z[static_cast<std::size_t>(tether_pos[k])] = tether_pos[k];
        model.mirror_z[static_cast<std::size_t>(tether_neg[k])] = tether_neg[k];
    }

    // DOF numbering with clamped outer tether ends removed.
    std::vector<bool> clamped(static_cast<std::size_t>(n_nodes), false);
    if (clamp_tethers) {
        clamped[static_cast<std::size_t>(tether_pos.back())] = true;
        clamped[static_cast<std::size_t>(tether_neg.back())] = true;
    }
    model.dof_index.assign(static_cast<std::size_t>(3 * n_nodes), -1);
    int next_dof = 0;
    for (int node = 0; node < n_nodes; ++node) {
        if (clamped[static_cast<std::size_t>(node)])
            continue;
        for (int comp = 0; comp < 3; ++comp)
            model.dof_index[static_cast<std::size_t>(3 * node + comp)] = next_dof++;
    }
    model.n_free = next_dof;

    // Assembly: DKT plate on the disc, Hermite bending + torsion on tethers.
    const MechMaterial& mat = geometry.material;
    const double rigidity = geometry.bending_rigidity();
    TripletList k_triplets;
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(model.n_free);

    const double rot_inertia_per_area = mat.density * std::pow(geometry.thickness, 3) / 12.0;
    for (const auto& tri : model.triangles) {
        const DktGeometry g = dkt_geometry(model.nodes[static_cast<std::size_t>(tri[0])],
                                           model.nodes[static_cast<std::size_t>(tri[1])],
                                           model.nodes[static_cast<std::size_t>(tri[2])]);
        const Eigen::Matrix<double, 9, 9> ke = dkt_stiffness(g, rigidity, mat.poisson);
        int dofs[9];
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c)
                dofs[3 * a + c] = model.free_dof(tri[static_cast<std::size_t>(a)], c);
        for (int p = 0; p < 9; ++p)
            for (int q = 0; q < 9; ++q)
                k_triplets.add(dofs[p], dofs[q], ke(p, q));

        const double area = 0.5 * g.area2;
        const double m_trib = mat.density * geometry.thickness * area / 3.0;
        const double i_trib = rot_inertia_per_area * area / 3.0;
        for (int a = 0; a < 3; ++a) {
            if (dofs[3 * a + kW] >= 0)
                mass(dofs[3 * a + kW]) += m_trib;
            if (dofs[3 * a + kSy] >= 0)
                mass(dofs[3 * a + kSy]) += i_trib;
            if (dofs[3 * a + kSz] >= 0)
                mass(dofs[3 * a + kSz]) += i_trib;
        }
    }

    const double area_cs = geometry.tether_width * geometry.thickness;
    const double i_bend = geometry.tether_width * std::pow(geometry.thickness, 3) / 12.0;
    const double j_torsion = rect_torsion_constant(geometry.thickness, geometry.tether_width);
    const double shear_modulus = mat.youngs_modulus / (2.0 * (1.0 + mat.poisson));
    const double polar_per_length =
        mat.density * area_cs *
        (geometry.tether_width * geometry.tether_width + geometry.thickness * geometry.thickness) /
        12.0;

    for (const auto& beam : model.beams) {
        int n1 = beam[0], n2 = beam[1];
        if (model.nodes[static_cast<std::size_t>(n1)][0] > model.nodes[static_cast<std::size_t>(n2)][0])
            std::swap(n1, n2);
        const double le = model.nodes[static_cast<std::size_t>(n2)][0] -
                          model.nodes[static_cast<std::size_t>(n1)][0];
        const double ei = mat.youngs_modulus * i_bend;

        const int dw1 = model.free_dof(n1, kW), ds1 = model.free_dof(n1, kSy);
        const int dw2 = model.free_dof(n2, kW), ds2 = model.free_dof(n2, kSy);
        const int bend_dofs[4] = {dw1, ds1, dw2, ds2};
        const double f = ei / (le * le * le);
        const double kb[4][4] = {{12 * f, 6 * f * le, -12 * f, 6 * f * le},
                                 {6 * f * le, 4 * f * le * le, -6 * f * le, 2 * f * le * le},
                                 {-12 * f, -6 * f * le, 12 * f, -6 * f * le},
                                 {6 * f * le, 2 * f * le * le, -6 * f * le, 4 * f * le * le}};
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 4; ++q)
                k_triplets.add(bend_dofs[p], bend_dofs[q], kb[p][q]);

        const int dt1 = model.free_dof(n1, kSz), dt2 = model.free_dof(n2, kSz);
        const double kt = shear_modulus * j_torsion / le;
        k_triplets.add(dt1, dt1, kt);
        k_triplets.add(dt2, dt2, kt);
        k_triplets.add(dt1, dt2, -kt);
        k_triplets.add(dt2, dt1, -kt);

        const double m_half = mat.density * area_cs * le / 2.0;
        const double i_half = mat.density * i_bend * le / 2.0;
        const double p_half = polar_per_length * le / 2.0;
        for (const int d : {dw1, dw2})
            if (d >= 0)
                mass(d) += m_half;
        for (const int d : {ds1, ds2})
            if (d >= 0)
                mass(d) += i_half;
        for (const int d : {dt1, dt2})
            if (d >= 0)
                mass(d) += p_half;
    }

    model.k_mat.resize(model.n_free, model.n_free);
    model.k_mat.setFromTriplets(k_triplets.data.begin(), k_triplets.data.end());
    model.m_diag = mass;
    return model;
}

Eigen::SparseMatrix<double> optical_stiffness(const MechModel& model, double sigma,
                                              double strength)
{
    if (!(sigma > 0.0))
        throw DomainError("optical_stiffness: sigma must be > 0");
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    const auto density = [&](double y, double z) {
        return strength * std::exp(-(y * y + z * z) * inv_two_sigma_sq);
    };

    TripletList triplets;
    // Disc triangles: 3-point interior rule with linear displacement shapes.
    static const double bary[3][3] = {
        {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
        {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
        {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
    };
    for (const auto& tri : model.triangles) {
        const auto& p1 = model.nodes[static_cast<std::size_t>(tri[0])];
        const auto& p2 = model.nodes[static_cast<std::size_t>(tri[1])];
        const auto& p3 = model.nodes[static_cast<std::size_t>(tri[2])];
        const double area2 = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
        const double area = 0.5 * std::abs(area2);
        const int dofs[3] = {model.free_dof(tri[0], kW), model.free_dof(tri[1], kW),
                             model.free_dof(tri[2], kW)};
        for (const auto& bc : bary) {
            const double y = bc[0] * p1[0] + bc[1] * p2[0] + bc[2] * p3[0];
            const double z = bc[0] * p1[1] + bc[1] * p2[1] + bc[2] * p3[1];
            const double w_g = area / 3.0 * density(y, z);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    triplets.add(dofs[a], dofs[b], w_g * bc[a] * bc[b]);
        }
    }
    // Illuminated tether segments: 2-point rule, linear shapes, width d.
    static const double gl2[2] = {-0.5773502691896257, 0.5773502691896257};
    for (const auto& beam : model.beams) {
        const auto& p1 = model.nodes[static_cast<std::size_t>(beam[0])];
        const auto& p2 = model.nodes[static_cast<std::size_t>(beam[1])];
        const double le = std::abs(p2[0] - p1[0]);
        const int dofs[2] = {model.free_dof(beam[0], kW), model.free_dof(beam[1], kW)};
        for (double gp : gl2) {
            const double s = 0.5 * (1.0 + gp); // shape coordinate of node 2
            const double y = (1.0 - s) * p1[0] + s * p2[0];
            const double w_g = 0.5 * le * model.geometry.tether_width * density(y, 0.0);
            const double shapes[2] = {1.0 - s, s};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    triplets.add(dofs[a], dofs[b], w_g * shapes[a] * shapes[b]);
        }
    }

    Eigen::SparseMatrix<double> k(model.n_free, model.n_free);
    k.setFromTriplets(triplets.data.begin(), triplets.data.end());
    return k;
}

double normalize_trap_strength(const MechModel& model, double sigma, double strength)
{
    const double r = model.geometry.disc_radius;
    const double integral =
        2.0 * kPi * sigma * sigma * (1.0 - std::exp(-r * r / (2.0 * sigma * sigma)));
    return std::sqrt(std::max(0.0, strength) * integral / model.disc_mass());
}

double strength_for_normalized(const MechModel& model, double sigma, double omega_rigid)
{
    const double r = model.geometry.disc_radius;
    const double integral =
        2.0 * kPi * sigma * sigma * (1.0 - std::exp(-r * r / (2.0 * sigma * sigma)));
    return omega_rigid * omega_rigid * model.disc_mass() / integral;
}

namespace {

struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

// Shift-invert Lanczos with full M-reorthogonalization for the pencil
// (K, M): builds a Krylov space of (K + sigma M)^{-1} M in the M-inner
// product, then Rayleigh-Ritz against the unshifted K.
EigenPairs lowest_modes(const Eigen::SparseMatrix<double>& k, const Eigen::VectorXd& m_diag,
                        int n_modes, const SubspaceOptions& opts)
{
    const int n = static_cast<int>(m_diag.size());
    if (n_modes > n)
        throw DomainError("lowest_modes: more modes requested than DOFs");

    const double shift = opts.shift > 0.0 ? opts.shift : std::pow(2.0 * kPi * 1e3, 2);
    Eigen::SparseMatrix<double> shifted = k;
    Eigen::SparseMatrix<double> m_sparse(n, n);
    {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            t.emplace_back(i, i, m_diag(i));
        m_sparse.setFromTriplets(t.begin(), t.end());
    }
    shifted += shift * m_sparse;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success)
        throw NumericalError("lowest_modes: factorization of shifted stiffness failed");

    const int m_max = std::min(n, n_modes + std::max(opts.extra_vectors, 60) + n_modes / 2);
    std::mt19937 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto m_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return a.dot(m_diag.asDiagonal() * b);
    };

    Eigen::MatrixXd basis(n, m_max);
    {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
            v(i) = gauss(rng);
        basis.col(0) = v / std::sqrt(m_dot(v, v));
    }

    int m = 0;
    for (int j = 0; j < m_max; ++j) {
        Eigen::VectorXd w = solver.solve(m_diag.asDiagonal() * basis.col(j));
        // Full reorthogonalization, two passes.
        for (int pass = 0; pass < 2; ++pass)
            for (int c = 0; c <= j; ++c)
                w -= m_dot(basis.col(c), w) * basis.col(c);
        m = j + 1;
        if (m == m_max)
            break;
        double beta = std::sqrt(std::max(0.0, m_dot(w, w)));
        if (beta < 1e-20) {
            // Invariant subspace exhausted: continue with a fresh direction.
            for (int i = 0; i < n; ++i)
                w(i) = gauss(rng);
            for (int pass = 0; pass < 2; ++pass)
                for (int c = 0; c <= j; ++c)
                    w -= m_dot(basis.col(c), w) * basis.col(c);
            beta = std::sqrt(m_dot(w, w));
        }
        basis.col(j + 1) = w / beta;
    }

    // Rayleigh-Ritz on the accumulated Krylov basis against the true K.
    const Eigen::MatrixXd v = basis.leftCols(m);
    const Eigen::MatrixXd gk = v.transpose() * (k * v);
    const Eigen::MatrixXd gm = v.transpose() * (m_diag.asDiagonal() * v);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> small(
        0.5 * (gk + gk.transpose()), 0.5 * (gm + gm.transpose()));
    if (small.info() != Eigen::Success)
        throw NumericalError("lowest_modes: Rayleigh-Ritz projection failed");

    EigenPairs pairs;
    pairs.values = small.eigenvalues().head(n_modes);
    pairs.vectors = v * small.eigenvectors().leftCols(n_modes);
    return pairs;
}

} // namespace

ModalBasis untrapped_modes(const MechModel& model, int n_modes, const SubspaceOptions& opts)
{
    EigenPairs pairs = lowest_modes(model.k_mat, model.m_diag, n_modes, opts);

    ModalBasis basis;
    basis.lambda = pairs.values;
    basis.phi = pairs.vectors;
    basis.symmetry.assign(static_cast<std::size_t>(n_modes), SymmetryClass::mixed);
    basis.parity_y.assign(static_cast<std::size_t>(n_modes), 0);
    basis.parity_z.assign(static_cast<std::size_t>(n_modes), 0);

    const auto m_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return a.dot(model.m_diag.asDiagonal() * b);
    };

    // Purify into exact parity classes cluster by cluster; the mirror
    // operators commute with K and M on this mesh, so eigenvectors can be
    // chosen with sharp parity even inside degenerate clusters.
    int start = 0;
    const double lambda_floor = std::pow(2.0 * kPi * 100.0, 2);
    while (start < n_modes) {
        int end = start + 1;
        while (end < n_modes &&
               basis.lambda(end) - basis.lambda(end - 1) <
                   1e-5 * (std::abs(basis.lambda(end)) + lambda_floor))
            ++end;
        const int size = end - start;

        // All class projections of the cluster, strongest first; a sharp
        // eigenvector keeps essentially all of its norm in one class.
        struct Candidate {
            double norm_sq;
            int py, pz;
            Eigen::VectorXd vec;
        };
        std::vector<Candidate> candidates;
        for (int i = start; i < end; ++i) {
            const Eigen::VectorXd q = basis.phi.col(i);
            const Eigen::VectorXd qy = model.apply_mirror_y(q);
            const Eigen::VectorXd qz = model.apply_mirror_z(q);
            const Eigen::VectorXd qyz = model.apply_mirror_z(qy);
            for (int py : {+1, -1})
                for (int pz : {+1, -1}) {
                    Eigen::VectorXd proj = 0.25 * (q + py * qy + pz * qz + py * pz * qyz);
                    const double norm_sq = m_dot(proj, proj);
                    if (norm_sq > 1e-6)
                        candidates.push_back({norm_sq, py, pz, std::move(proj)});
                }
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& a, const Candidate& b) { return a.norm_sq > b.norm_sq; });

        std::vector<Eigen::VectorXd> accepted;
        std::vector<std::pair<int, int>> accepted_parity;
        for (auto& cand : candidates) {
            if (static_cast<int>(accepted.size()) == size)
                break;
            Eigen::VectorXd proj = std::move(cand.vec);
            for (const auto& prev : accepted)
                proj -= m_dot(prev, proj) * prev;
            const double norm_sq = m_dot(proj, proj);
            if (norm_sq > 1e-4) {
                proj /= std::sqrt(norm_sq);
                accepted.push_back(std::move(proj));
                accepted_parity.emplace_back(cand.py, cand.pz);
            }
        }

        if (static_cast<int>(accepted.size()) == size) {
            for (int i = 0; i < size; ++i) {
                basis.phi.col(start + i) = accepted[static_cast<std::size_t>(i)];
                const auto [py, pz] = accepted_parity[static_cast<std::size_t>(i)];
                basis.parity_y[static_cast<std::size_t>(start + i)] = py;
                basis.parity_z[static_cast<std::size_t>(start + i)] = pz;
                SymmetryClass label = SymmetryClass::mixed;
                if (py > 0 && pz > 0)
                    label = SymmetryClass::symmetric;
                else if (py < 0 && pz > 0)
                    label = SymmetryClass::antisymmetric;
                else if (py > 0 && pz < 0)
                    label = SymmetryClass::torsional;
                basis.symmetry[static_cast<std::size_t>(start + i)] = label;
            }
        }
        start = end;
    }

    // Parity projections of incompletely converged Ritz vectors leak across
    // the spectrum; restore M-orthonormality of the whole basis and refresh
    // the Rayleigh quotients.
    for (int j = 0; j < n_modes; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int c = 0; c < j; ++c)
                basis.phi.col(j) -= m_dot(basis.phi.col(c), basis.phi.col(j)) * basis.phi.col(c);
        const double norm_sq = m_dot(basis.phi.col(j), basis.phi.col(j));
        if (norm_sq <= 0.0)
            throw NumericalError("untrapped_modes: basis column collapsed");
        basis.phi.col(j) /= std::sqrt(norm_sq);
        basis.lambda(j) = basis.phi.col(j).dot(model.k_mat * basis.phi.col(j));
    }
    return basis;
}

Eigen::VectorXd lift(const ModalBasis& basis, const Eigen::VectorXd& reduced)
{
    return basis.phi * reduced;
}

MechSweep modal_sweep(const MechModel& model, double sigma,
                      const std::vector<double>& strengths, const MechSweepOptions& opts)
{
    if (strengths.empty())
        throw DomainError("modal_sweep: empty strength grid");
    for (std::size_t i = 1; i < strengths.size(); ++i)
        if (!(strengths[i] > strengths[i - 1]))
            throw DomainError("modal_sweep: strengths must be ascending");

    const int n_basis = std::min(opts.n_basis, model.n_free);
    const int n_track = std::min(opts.n_track, n_basis);
    const ModalBasis basis = untrapped_modes(model, n_basis, opts.subspace);

    const Eigen::SparseMatrix<double> k_opt_unit = optical_stiffness(model, sigma, 1.0);
    const Eigen::MatrixXd k_opt_reduced = basis.phi.transpose() * (k_opt_unit * basis.phi);
    // The Ritz vectors are not exact eigenvectors; project the material
    // stiffness in full so the reduced problem stays variational.
    Eigen::MatrixXd k_mat_reduced = basis.phi.transpose() * (model.k_mat * basis.phi);
    k_mat_reduced = 0.5 * (k_mat_reduced + k_mat_reduced.transpose()).eval();

    MechSweep sweep;
    sweep.strengths = strengths;
    sweep.sigma = sigma;
    sweep.modes.resize(strengths.size());
    if (opts.store_shapes)
        sweep.reduced.resize(strengths.size());
    sweep.min_tracking_overlap.assign(strengths.size() > 1 ? strengths.size() - 1 : 0, 1.0);

    Eigen::MatrixXd previous_tracked; // n_basis x n_track
    for (std::size_t is = 0; is < strengths.size(); ++is) {
        sweep.strength_norm.push_back(normalize_trap_strength(model, sigma, strengths[is]));

        const Eigen::MatrixXd h = k_mat_reduced + strengths[is] * k_opt_reduced;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
        if (solver.info() != Eigen::Success)
            throw NumericalError("modal_sweep: reduced eigensolve failed");

        // Choose tracked columns.
        std::vector<int> chosen(static_cast<std::size_t>(n_track), -1);
        if (is == 0 || previous_tracked.size() == 0) {
            std::iota(chosen.begin(), chosen.end(), 0);
        } else {
            const Eigen::MatrixXd overlap =
                (previous_tracked.transpose() * solver.eigenvectors()).cwiseAbs();
            std::vector<bool> used(static_cast<std::size_t>(n_basis), false);
            double min_overlap = 1.0;
            // Greedy best match per previous branch, highest overlaps first.
            struct Entry {
                double value;
                int row, col;
            };
            std::vector<Entry> entries;
            for (int rr = 0; rr < n_track; ++rr)
                for (int cc = 0; cc < n_basis; ++cc)
                    entries.push_back({overlap(rr, cc), rr, cc});
            std::sort(entries.begin(), entries.end(),
                      [](const Entry& a, const Entry& b) { return a.value > b.value; });
            int assigned = 0;
            for (const auto& e : entries) {
                if (assigned == n_track)
                    break;
                if (chosen[static_cast<std::size_t>(e.row)] >= 0 || used[static_cast<std::size_t>(e.col)])
                    continue;
                chosen[static_cast<std::size_t>(e.row)] = e.col;
                used[static_cast<std::size_t>(e.col)] = true;
                min_overlap = std::min(min_overlap, e.value);
                ++assigned;
            }
            sweep.min_tracking_overlap[is - 1] = min_overlap;
        }

        previous_tracked.resize(n_basis, n_track);
        auto& results = sweep.modes[is];
        results.resize(static_cast<std::size_t>(n_track));
        for (int t = 0; t < n_track; ++t) {
            const int col = chosen[static_cast<std::size_t>(t)];
            const Eigen::VectorXd q = solver.eigenvectors().col(col);
            previous_tracked.col(t) = q;

            ModalResult& mode = results[static_cast<std::size_t>(t)];
            mode.track_id = t;
            const double omega_sq = solver.eigenvalues()(col);
            mode.omega = std::sqrt(std::max(0.0, omega_sq));
            const double u_mat = q.dot(k_mat_reduced * q);
            const double u_opt = std::max(0.0, omega_sq - u_mat);
            mode.u_opt_over_u_mat = u_mat > 0.0 ? u_opt / u_mat : 0.0;

            // Exact parity of the lifted shape sets the symmetry label.
            const Eigen::VectorXd shape = basis.phi * q;
            const double norm = shape.dot(model.m_diag.asDiagonal() * shape);
            const double par_y =
                shape.dot(model.m_diag.asDiagonal() * model.apply_mirror_y(shape)) / norm;
            const double par_z =
                shape.dot(model.m_diag.asDiagonal() * model.apply_mirror_z(shape)) / norm;
            mode.symmetry = SymmetryClass::mixed;
            if (par_y > 0.8 && par_z > 0.8)
                mode.symmetry = SymmetryClass::symmetric;
            else if (par_y < -0.8 && par_z > 0.8)
                mode.symmetry = SymmetryClass::antisymmetric;
            else if (par_y > 0.8 && par_z < -0.8)
                mode.symmetry = SymmetryClass::torsional;
            if (opts.store_shapes)
                sweep.reduced[is].push_back(q);
        }
    }
    return sweep;
}

void write_mech_csv(std::ostream& out, const MechSweep& sweep)
{
    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    out << "strength_norm_rad_s,mode_id,symmetry,freq_Hz,Uopt_over_Umat\n";
    for (std::size_t is = 0; is < sweep.modes.size(); ++is) {
        for (const auto& mode : sweep.modes[is]) {
            out << fmt(sweep.strength_norm[is]) << "," << mode.track_id << ","
                << symmetry_name(mode.symmetry) << "," << fmt(mode.omega / (2.0 * kPi)) << ","
                << fmt(mode.u_opt_over_u_mat) << "\n";
        }
    }
}

} // namespace cavlev
