#pragma once

#include <map>
#include <optional>
#include <vector>

#include "polycbf/lp.hpp"
#include "polycbf/types.hpp"

namespace polycbf {

/// Closed half-space {x | a^T x + b >= 0}.
struct HalfSpace {
    Vector a;
    double b = 0;

    double eval(const Vector& x) const { return a.dot(x) + b; }
};

/// Positional safety set: a union over terms of intersections of half-spaces.
///
/// Construction validates the geometry: nonzero normals and offsets, pairwise
/// linearly independent augmented vectors (a_i, b_i), nonempty in-range terms,
/// and a feasible intersection for every term. Invalid input raises
/// ErrorKind::InvalidSpec.
class SafetySpec {
public:
    SafetySpec() = default;
    SafetySpec(std::vector<HalfSpace> halfspaces, std::vector<IndexSet> terms);

    int dim() const { return n_; }
    int size() const { return static_cast<int>(halfspaces_.size()); }
    bool empty() const { return halfspaces_.empty(); }

    const std::vector<HalfSpace>& halfspaces() const { return halfspaces_; }
    const HalfSpace& halfspace(int i) const { return halfspaces_[i]; }
    const std::vector<IndexSet>& terms() const { return terms_; }

    /// r x n matrix of stacked normals and the r offsets.
    const Matrix& normals() const { return normals_; }
    const Vector& offsets() const { return offsets_; }

    /// All r affine values h_i(x1).
    Vector eval_all(const Vector& x1) const { return normals_ * x1 + offsets_; }

    /// Same geometry with every (a_i, b_i) multiplied by factor > 0.
    SafetySpec scaled(double factor) const;

private:
    int n_ = 0;
    std::vector<HalfSpace> halfspaces_;
    std::vector<IndexSet> terms_;
    Matrix normals_;
    Vector offsets_;
};

// h(x1) = max over terms of min over the term's members of h_i(x1).
double eval_h(const SafetySpec& spec, const Vector& x1);
bool contains(const SafetySpec& spec, const Vector& x1);

/// Per-term value min_{i in term} h_i(x1).
Vector term_values(const SafetySpec& spec, const Vector& x1);

/// Whether {x | normals x + offsets >= 0} is bounded, decided by the
/// recession cone {z | normals z >= 0}: 2k box-constrained LPs maximizing
/// +-z_j must all have optimum 0. Throws EmptySet if the set is empty.
bool is_bounded(const Matrix& normals, const Vector& offsets);
bool is_bounded(const std::vector<HalfSpace>& rows);

/// Feasibility of {h_i >= 0, i in indices}.
bool is_feasible(const SafetySpec& spec, const IndexSet& indices);

/// Every nonempty I whose intersection meets C. Exhaustive over subsets,
/// limited to r <= 20 (TooManyHalfspaces beyond).
std::vector<IndexSet> enumerate_s_cap(const SafetySpec& spec);

inline constexpr int kMaxEnumeratedHalfspaces = 20;

struct WitnessPoint {
    Vector point;
    double margin = 0;
    int term = -1;
};

/// argmax over x in C of min_{i in I} h_i(x), solved per term as an LP.
/// Ties among optimal points are resolved lexicographically (the smallest
/// remaining h_i is pushed up in successive LPs), so a symmetric set yields
/// its center. Ties across terms go to the lowest term index.
/// Throws AssumptionViolated when the best margin is not positive.
WitnessPoint max_min_point(const SafetySpec& spec, const IndexSet& indices);

/// Caller-pinned witnesses. `uniform` applies to every I not in `pinned`.
struct WitnessOverrides {
    std::map<IndexSet, Vector> pinned;
    std::optional<Vector> uniform;

    bool empty() const { return pinned.empty() && !uniform; }
    std::optional<Vector> find(const IndexSet& indices) const;
};

struct GeometryCert {
    std::vector<IndexSet> s_cap;
    std::map<IndexSet, Vector> witnesses;
    double delta = 0;
    bool proj_bounded = false;
    std::vector<bool> term_bounded;

    const Vector& witness(const IndexSet& indices) const;
};

/// Runs the boundedness checks, S_cap enumeration and witness selection, and
/// assembles delta = min over (I, i in I) of h_i(y_I).
/// Throws UnboundedPositions if any term is unbounded, and AssumptionViolated
/// if a witness fails h_i(y_I) > 0 or y_I in C.
GeometryCert compute_cert(const SafetySpec& spec, const WitnessOverrides& overrides = {});

/// Axis-aligned bounding box of C, computed by 2n LPs per term.
std::pair<Vector, Vector> bounding_box(const SafetySpec& spec);

} // namespace polycbf
