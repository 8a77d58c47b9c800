#pragma once
#include <compare>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mrgl {

/// Group index (j, k): component j (1-based) at resolution level k.
struct GroupKey
{
    int j = 0;
    int k = 0;
    auto operator<=>(const GroupKey&) const = default;
};

std::string to_string(const GroupKey& g);          // "j:k"
GroupKey parse_group_key(const std::string& s);     // inverse of to_string

/// Parametric components carry d_star monomials at the baseline level only;
/// nonparametric components span levels k_star..k_max.
struct ComponentKind
{
    int d_star = 0;  // 0 means nonparametric

    static ComponentKind nonparametric() { return {}; }
    static ComponentKind parametric(int d_star);
    bool is_parametric() const { return d_star > 0; }
    bool operator==(const ComponentKind&) const = default;
};

struct SchemeOverrides
{
    std::optional<int> k_star;
    std::optional<int> k_max;
};

struct ResolutionScheme
{
    int k_star = 0;
    int k_max = 0;
    std::vector<ComponentKind> kinds;
    std::vector<GroupKey> groups;   // ascending in j, then k
    std::vector<int> dims;          // d_{j,k}, aligned with groups
    std::vector<int> offsets;       // first column of each group in the stacked design
    std::vector<int> first_group;   // index of the first group of component j (size p + 1)

    int p() const { return static_cast<int>(kinds.size()); }
    int num_groups() const { return static_cast<int>(groups.size()); }
    int total_dim() const;          // d*
    std::optional<int> find(const GroupKey& g) const;
    int index_of(const GroupKey& g) const;  // throws input_error if absent
};

/// Smallest k with 2 log(p/eps) <= 2^k.
int baseline_level(int p, double eps);
/// Largest k with 2^k < n.
int top_level(int n);

/**
 * Build the group index set.
 *
 * @param   p       number of components.
 * @param   kinds   per-component kind; empty means all nonparametric.
 * @param   n       sample size, used for the default top level.
 * @param   eps     confidence parameter in (0, 1].
 * @param   ov      optional explicit k_star / k_max.
 */
ResolutionScheme make_scheme(int p, std::vector<ComponentKind> kinds, int n, double eps,
                             const SchemeOverrides& ov = {});

/// Scheme with explicit levels; no n/eps rule is applied.
ResolutionScheme make_scheme_levels(std::vector<ComponentKind> kinds, int k_star, int k_max);

int block_size(const ResolutionScheme& scheme, int j, int k);

/// Number of basis functions of component j below level k (global index offset).
int index_offset(const ResolutionScheme& scheme, int j, int k);

enum class BasisFamily { Fourier, Haar };

std::string to_string(BasisFamily f);
BasisFamily parse_basis_family(const std::string& s);

/// sup |u_{j,k,l}| over all functions the scheme uses.
double sup_bound(BasisFamily family, const ResolutionScheme& scheme);

/// m-th function (1-based) of the family on [0, 1].
double eval_global(BasisFamily family, long m, double x);

double eval_basis(BasisFamily family, const ResolutionScheme& scheme, int j, int k, int ell,
                  double x);

/// Fill out[0..d) with the block of functions for group index g at point x.
void eval_block(BasisFamily family, const ResolutionScheme& scheme, int g, double x,
                double* out);

/// Orthonormal factor of one design block: U = Q R with Q^T Q = I.
struct GroupFactor
{
    Eigen::MatrixXd Q;       // n x r
    Eigen::MatrixXd R;       // r x d
    Eigen::MatrixXd R_pinv;  // d x r; b = R_pinv * (Q^T f) is the minimal-norm preimage

    int rank() const { return static_cast<int>(Q.cols()); }
};

/// Thin orthonormal factorization with relative rank tolerance on singular values.
GroupFactor orthonormal_factor(const Eigen::MatrixXd& U, double rank_tol = 1e-10);

class GroupedDesign
{
public:
    GroupedDesign() = default;
    GroupedDesign(int n, BasisFamily family, ResolutionScheme scheme,
                  std::vector<GroupFactor> factors);

    int n() const { return n_; }
    BasisFamily family() const { return family_; }
    const ResolutionScheme& scheme() const { return scheme_; }
    int num_groups() const { return scheme_.num_groups(); }
    const GroupFactor& factor(int g) const { return factors_[g]; }

    Eigen::MatrixXd block(int g) const;                                   // U_{j,k}
    Eigen::VectorXd project(int g, const Eigen::VectorXd& v) const;      // P_{j,k} v
    Eigen::VectorXd apply(int g, const Eigen::VectorXd& b) const;        // U_{j,k} b
    Eigen::VectorXd coef_from_fitted(int g, const Eigen::VectorXd& f) const;
    Eigen::MatrixXd stacked() const;                                      // [U_1 ... U_G]

private:
    int n_ = 0;
    BasisFamily family_ = BasisFamily::Fourier;
    ResolutionScheme scheme_;
    std::vector<GroupFactor> factors_;
};

struct AssembleOptions
{
    int threads = 1;
    double rank_tol = 1e-10;
};

GroupedDesign assemble_design(const Eigen::MatrixXd& X, BasisFamily family,
                              const ResolutionScheme& scheme, const AssembleOptions& opt = {});

/// Raw design block of group g, without factorization.
Eigen::MatrixXd design_block(const Eigen::MatrixXd& X, BasisFamily family,
                             const ResolutionScheme& scheme, int g);

/// Column-wise min-max rescaling to [0, 1]; constant columns map to 0.
Eigen::MatrixXd rescale_unit(const Eigen::MatrixXd& X);

/// CSV with header "j,k,ell" triplets, one row per sample.
void write_design_csv(std::ostream& os, const GroupedDesign& design);

} // namespace mrgl
