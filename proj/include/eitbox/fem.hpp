#ifndef EITBOX_FEM_HPP
#define EITBOX_FEM_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>

#include "eitbox/admittivity.hpp"
#include "eitbox/mesh.hpp"

namespace eitbox {

enum class Region { Omega, Augmented };

/// Two-component nodal field on the mesh (all grid nodes; nodes outside the
/// active region hold zeros). Point evaluation and gradients are trilinear
/// within the containing cell.
struct DiscreteField {
    std::shared_ptr<const StructuredMesh> mesh;
    Eigen::VectorXcd values;  // size n_nodes

    Complex value_at(const Vec3& x) const;
    Vec3c gradient_at(const Vec3& x) const;
    double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

/// Assembled 2x2 real block system for one admittivity on one region.
/// Kr and Ki are the full (unconstrained) stiffness blocks over the active
/// nodes; Dirichlet data is imposed by row elimination on the free set with
/// the retained blocks staying symmetric. The factorization of the reduced
/// block matrix is built on first use and shared afterwards.
class AssembledSystem {
  public:
    AssembledSystem(Admittivity adm, std::shared_ptr<const StructuredMesh> mesh, Region region);

    const StructuredMesh& mesh() const { return *mesh_; }
    std::shared_ptr<const StructuredMesh> mesh_ptr() const { return mesh_; }
    const Admittivity& admittivity() const { return adm_; }
    Region region() const { return region_; }

    int n_active() const { return static_cast<int>(active_nodes_.size()); }
    int n_free() const { return n_free_; }
    const std::vector<std::int64_t>& active_nodes() const { return active_nodes_; }
    const std::vector<std::int64_t>& active_cells() const { return active_cells_; }
    int rank_of_node(std::int64_t node) const { return node_rank_[static_cast<std::size_t>(node)]; }
    bool is_boundary_rank(int rank) const { return node_boundary_[static_cast<std::size_t>(rank)] != 0; }

    const Eigen::SparseMatrix<double>& Kr() const { return Kr_; }
    const Eigen::SparseMatrix<double>& Ki() const { return Ki_; }

    /// Full stiffness applied to a complex nodal vector over active ranks.
    Eigen::VectorXcd apply_K(const Eigen::VectorXcd& u) const;

    /// Dirichlet solve: boundary values from `g`, interior dual load `rhs`
    /// (may be empty for the homogeneous case). Returns active-rank values.
    Eigen::VectorXcd solve(const Eigen::VectorXcd& boundary_values,
                           const Eigen::VectorXcd& rhs_free, double rtol = 1e-10) const;

    /// Scatter active-rank values onto the full node grid.
    DiscreteField to_field(const Eigen::VectorXcd& active_values) const;
    /// Gather a full-grid field to active ranks.
    Eigen::VectorXcd from_field(const DiscreteField& f) const;

    /// Quadrature of the element-wise bilinear form int c(x) grad u . grad v
    /// with c = sigma_1 - sigma_2 style weights; used by callers via the
    /// quadrature hooks below.
    struct QuadPoint {
        Vec3 x;
        double w;
        std::int64_t cell;
        int layer;
    };
    /// Visit the assembly quadrature points of the given cells.
    void for_each_quad_point(const std::vector<std::int64_t>& cells,
                             const std::function<void(const QuadPoint&)>& fn) const;

    /// Reference gradients of the eight trilinear shape functions at the
    /// eight Gauss points of a cell with this mesh pitch.
    const std::array<std::array<Vec3, 8>, 8>& shape_gradients() const { return grad_ref_; }
    std::array<Vec3, 8> quad_points_of_cell(std::int64_t cell) const;
    double quad_weight() const { return w_quad_; }

  private:
    void build_index();
    void assemble();
    void ensure_factorization() const;

    Admittivity adm_;
    std::shared_ptr<const StructuredMesh> mesh_;
    Region region_;

    std::vector<std::int64_t> active_cells_;
    std::vector<std::int64_t> active_nodes_;
    std::vector<int> node_rank_;         // per mesh node, -1 if inactive
    std::vector<char> node_boundary_;    // per active rank
    std::vector<int> free_index_;        // per active rank, -1 for boundary
    std::vector<int> free_nodes_;        // active ranks of the free dofs
    int n_free_ = 0;

    Eigen::SparseMatrix<double> Kr_, Ki_;
    std::array<std::array<Vec3, 8>, 8> grad_ref_{};  // [quad][shape]
    std::array<Vec3, 8> quad_offset_{};              // offsets from cell lo
    double w_quad_ = 0.0;

    mutable std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
    mutable std::shared_ptr<Eigen::SparseMatrix<double>> reduced_;
};

std::shared_ptr<AssembledSystem> assemble(const Admittivity& adm,
                                          std::shared_ptr<const StructuredMesh> mesh,
                                          Region region);

using BoundaryFn = std::function<Complex(const Vec3&)>;
using SourceFn = std::function<Vec3c(const Vec3&)>;

/// Galerkin solve with Dirichlet data given as a function on the region
/// boundary. Residual of the reduced system is verified against rtol.
DiscreteField solve_dirichlet(const AssembledSystem& sys, const BoundaryFn& g,
                              double rtol = 1e-10);

/// Dirichlet solve with data supported on the given portion DOF nodes
/// (zero on the rest of the boundary). Throws UnsupportedTrace when a listed
/// node is not a boundary node of the system.
DiscreteField solve_dirichlet_dofs(const AssembledSystem& sys,
                                   const std::vector<std::int64_t>& dof_nodes,
                                   const Eigen::VectorXcd& dof_values, double rtol = 1e-10);

/// Weak-source solve: int sigma grad u . grad phi = int F . grad phi for all
/// interior phi, u = g on the region boundary. `cells` restricts the source
/// quadrature (empty = all active cells), `skip_cell` excises one cell.
DiscreteField solve_with_source(const AssembledSystem& sys, const SourceFn& F,
                                const BoundaryFn& g,
                                const std::vector<std::int64_t>& cells = {},
                                std::int64_t skip_cell = -1, double rtol = 1e-10);

/// Variational conormal flux of a zero-source solution on a portion:
/// dual values are the full-stiffness rows applied to the solution, which
/// pairs exactly with traces under the volume bilinear form.
struct FluxTrace {
    std::vector<std::int64_t> dofs;
    Eigen::VectorXcd values;   // dual values per DOF node
    Eigen::VectorXd weights;   // lumped portion mass, for pointwise readings
};

FluxTrace variational_flux(const DiscreteField& u, const AssembledSystem& sys,
                           const FlatPortion& portion, double residual_tol = 1e-8);

/// max_i |(K u)_i| over free ranks, scaled by ||K||_inf ||u||_inf; the
/// residual gate used by flux extraction and the three-sphere checker.
double interior_residual(const AssembledSystem& sys, const Eigen::VectorXcd& active_values);

}  // namespace eitbox

#endif
