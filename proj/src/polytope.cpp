#include "polycbf/polytope.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace polycbf {

namespace {

constexpr double kBoundTol = 1e-9;

Matrix term_normals(const SafetySpec& spec, const IndexSet& idx)
{
    Matrix A(idx.size(), spec.dim());
    for (std::size_t k = 0; k < idx.size(); ++k)
        A.row(k) = spec.normals().row(idx[k]);
    return A;
}

Vector term_offsets(const SafetySpec& spec, const IndexSet& idx)
{
    Vector b(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
        b(k) = spec.offsets()(idx[k]);
    return b;
}

bool rows_feasible(const Matrix& normals, const Vector& offsets)
{
    LpProblem<double> lp;
    lp.cost = Vector::Zero(normals.cols());
    lp.rows = normals;
    lp.rhs = -offsets;
    return lp_solve(lp).status == LpStatus::Optimal;
}

std::string describe(const IndexSet& idx)
{
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < idx.size(); ++k)
        os << (k ? "," : "") << idx[k] + 1;
    os << '}';
    return os.str();
}

// Lexicographic max-min of h_i, i in `free_idx`, over the polytope of `term`.
// Returns the point and the first-stage optimum, or nullopt-like infinite
// margin when the LP is unbounded.
struct StageResult {
    LpStatus status;
    Vector x;
    double margin;
};

StageResult lexicographic_max_min(const SafetySpec& spec, const IndexSet& free_in,
                                  const IndexSet& term, bool refine)
{
    const int n = spec.dim();
    IndexSet free_idx = free_in;
    std::vector<std::pair<int, double>> fixed;
    StageResult result{LpStatus::Optimal, Vector::Zero(n), 0};
    bool first = true;

    while (!free_idx.empty()) {
        const int rows = static_cast<int>(free_idx.size() + fixed.size() + term.size());
        LpProblem<double> lp;
        lp.sense = LpSense::Maximize;
        lp.cost = Vector::Zero(n + 1);
        lp.cost(n) = 1;
        lp.rows = Matrix::Zero(rows, n + 1);
        lp.rhs = Vector::Zero(rows);
        int r = 0;
        for (int i : free_idx) {
            lp.rows.row(r).head(n) = spec.normals().row(i);
            lp.rows(r, n) = -1;
            lp.rhs(r++) = -spec.offsets()(i);
        }
        for (const auto& [i, level] : fixed) {
            lp.rows.row(r).head(n) = spec.normals().row(i);
            lp.rhs(r++) = level - spec.offsets()(i);
        }
        for (int i : term) {
            lp.rows.row(r).head(n) = spec.normals().row(i);
            lp.rhs(r++) = -spec.offsets()(i);
        }
        const auto sol = lp_solve(lp);
        if (sol.status != LpStatus::Optimal) {
            if (first)
                return {sol.status, Vector::Zero(n), 0};
            break; // later stages only refine a point already found
        }
        const double level = sol.x(n);
        result.x = sol.x.head(n);
        if (first) {
            result.margin = level;
            first = false;
        }
        if (!refine || level <= 0)
            break;

        // Rows with a positive multiplier cannot be raised further.
        IndexSet still_free;
        for (std::size_t k = 0; k < free_idx.size(); ++k) {
            if (sol.row_duals(k) > 1e-9)
                fixed.emplace_back(free_idx[k], level);
            else
                still_free.push_back(free_idx[k]);
        }
        if (still_free.size() == free_idx.size()) {
            // Degenerate duals: fix the currently smallest row.
            std::size_t worst = 0;
            double worst_val = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < free_idx.size(); ++k) {
                const double v = spec.halfspace(free_idx[k]).eval(result.x);
                if (v < worst_val) {
                    worst_val = v;
                    worst = k;
                }
            }
            fixed.emplace_back(free_idx[worst], level);
            still_free.erase(still_free.begin() + static_cast<long>(worst));
        }
        free_idx = std::move(still_free);
    }
    return result;
}

} // namespace

SafetySpec::SafetySpec(std::vector<HalfSpace> halfspaces, std::vector<IndexSet> terms)
    : halfspaces_(std::move(halfspaces)), terms_(std::move(terms))
{
    if (halfspaces_.empty())
        throw Error(ErrorKind::InvalidSpec, "at least one half-space is required");
    n_ = static_cast<int>(halfspaces_.front().a.size());
    if (n_ < 1)
        throw Error(ErrorKind::InvalidSpec, "position dimension must be positive");

    const int r = size();
    normals_.resize(r, n_);
    offsets_.resize(r);
    for (int i = 0; i < r; ++i) {
        const auto& hs = halfspaces_[i];
        if (hs.a.size() != n_)
            throw Error(ErrorKind::InvalidSpec, "half-space " + std::to_string(i + 1) +
                                                    " has inconsistent dimension");
        if (!hs.a.allFinite() || !std::isfinite(hs.b))
            throw Error(ErrorKind::InvalidSpec, "non-finite half-space coefficients");
        if (hs.a.norm() == 0)
            throw Error(ErrorKind::InvalidSpec, "half-space " + std::to_string(i + 1) +
                                                    " has a zero normal");
        if (hs.b == 0)
            throw Error(ErrorKind::InvalidSpec, "half-space " + std::to_string(i + 1) +
                                                    " has a zero offset");
        normals_.row(i) = hs.a.transpose();
        offsets_(i) = hs.b;
    }

    // Augmented vectors (a_i, b_i) must be pairwise linearly independent.
    Matrix aug(r, n_ + 1);
    aug << normals_, offsets_;
    for (int i = 0; i < r; ++i) {
        for (int j = i + 1; j < r; ++j) {
            const double ni = aug.row(i).squaredNorm();
            const double nj = aug.row(j).squaredNorm();
            const double dot = aug.row(i).dot(aug.row(j));
            if (ni * nj - dot * dot <= 1e-12 * ni * nj)
                throw Error(ErrorKind::InvalidSpec,
                            "half-spaces " + std::to_string(i + 1) + " and " +
                                std::to_string(j + 1) + " are linearly dependent");
        }
    }

    if (terms_.empty())
        throw Error(ErrorKind::InvalidSpec, "at least one term is required");
    for (auto& term : terms_) {
        if (term.empty())
            throw Error(ErrorKind::InvalidSpec, "empty term");
        std::sort(term.begin(), term.end());
        if (std::adjacent_find(term.begin(), term.end()) != term.end())
            throw Error(ErrorKind::InvalidSpec, "duplicate index in term");
        if (term.front() < 0 || term.back() >= r)
            throw Error(ErrorKind::InvalidSpec, "term index out of range");
        if (!rows_feasible(term_normals(*this, term), term_offsets(*this, term)))
            throw Error(ErrorKind::InvalidSpec, "term " + describe(term) + " is infeasible");
    }
}

SafetySpec SafetySpec::scaled(double factor) const
{
    auto hs = halfspaces_;
    for (auto& h : hs) {
        h.a *= factor;
        h.b *= factor;
    }
    return SafetySpec(std::move(hs), terms_);
}

Vector term_values(const SafetySpec& spec, const Vector& x1)
{
    const Vector h = spec.eval_all(x1);
    Vector out(spec.terms().size());
    for (std::size_t l = 0; l < spec.terms().size(); ++l) {
        double v = std::numeric_limits<double>::infinity();
        for (int i : spec.terms()[l])
            v = std::min(v, h(i));
        out(static_cast<Eigen::Index>(l)) = v;
    }
    return out;
}

double eval_h(const SafetySpec& spec, const Vector& x1)
{
    if (x1.size() != spec.dim())
        throw Error(ErrorKind::InvalidSpec, "position dimension mismatch");
    return term_values(spec, x1).maxCoeff();
}

bool contains(const SafetySpec& spec, const Vector& x1) { return eval_h(spec, x1) >= 0; }

bool is_bounded(const Matrix& normals, const Vector& offsets)
{
    if (!rows_feasible(normals, offsets))
        throw Error(ErrorKind::EmptySet, "intersection of half-spaces is empty");
    const int k = static_cast<int>(normals.cols());
    LpProblem<double> lp;
    lp.sense = LpSense::Maximize;
    lp.rows = normals;
    lp.rhs = Vector::Zero(normals.rows());
    lp.lower = Vector::Constant(k, -1.0);
    lp.upper = Vector::Constant(k, 1.0);
    for (int j = 0; j < k; ++j) {
        for (double s : {1.0, -1.0}) {
            lp.cost = Vector::Zero(k);
            lp.cost(j) = s;
            const auto sol = lp_solve(lp);
            if (sol.status != LpStatus::Optimal || sol.objective > kBoundTol)
                return false;
        }
    }
    return true;
}

bool is_bounded(const std::vector<HalfSpace>& rows)
{
    if (rows.empty())
        throw Error(ErrorKind::InvalidSpec, "no rows");
    const auto k = rows.front().a.size();
    Matrix A(rows.size(), k);
    Vector b(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        A.row(static_cast<Eigen::Index>(i)) = rows[i].a.transpose();
        b(static_cast<Eigen::Index>(i)) = rows[i].b;
    }
    return is_bounded(A, b);
}

bool is_feasible(const SafetySpec& spec, const IndexSet& indices)
{
    return rows_feasible(term_normals(spec, indices), term_offsets(spec, indices));
}

std::vector<IndexSet> enumerate_s_cap(const SafetySpec& spec)
{
    const int r = spec.size();
    if (r > kMaxEnumeratedHalfspaces)
        throw Error(ErrorKind::TooManyHalfspaces,
                    std::to_string(r) + " half-spaces exceed the enumeration cap of " +
                        std::to_string(kMaxEnumeratedHalfspaces));

    const std::uint32_t full = (std::uint32_t{1} << r) - 1;
    const std::size_t n_terms = spec.terms().size();
    std::vector<std::uint32_t> term_mask(n_terms, 0);
    for (std::size_t l = 0; l < n_terms; ++l)
        for (int i : spec.terms()[l])
            term_mask[l] |= std::uint32_t{1} << i;

    // feasible[l][mask]: h_i >= 0 on mask | term_l is feasible. Feasibility is
    // inherited by subsets, so a set is only tried when all its maximal
    // proper subsets passed. Subsets are numerically smaller, hence visited
    // earlier.
    std::vector<std::vector<bool>> feasible(n_terms, std::vector<bool>(std::size_t{full} + 1));
    std::vector<IndexSet> out;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        bool any = false;
        for (std::size_t l = 0; l < n_terms; ++l) {
            bool ok = true;
            for (std::uint32_t rest = mask; rest && ok; rest &= rest - 1) {
                const std::uint32_t sub = mask & ~(rest & -rest);
                if (sub != 0 && !feasible[l][sub])
                    ok = false;
            }
            if (ok && (mask & ~term_mask[l]) != 0) {
                IndexSet idx;
                for (int i = 0; i < r; ++i)
                    if ((mask | term_mask[l]) >> i & 1u)
                        idx.push_back(i);
                ok = is_feasible(spec, idx);
            }
            feasible[l][mask] = ok;
            any = any || ok;
        }
        if (any) {
            IndexSet idx;
            for (int i = 0; i < r; ++i)
                if (mask >> i & 1u)
                    idx.push_back(i);
            out.push_back(std::move(idx));
        }
    }
    std::sort(out.begin(), out.end(), [](const IndexSet& a, const IndexSet& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return out;
}

WitnessPoint max_min_point(const SafetySpec& spec, const IndexSet& indices)
{
    if (indices.empty())
        throw Error(ErrorKind::InvalidSpec, "empty index set");
    WitnessPoint best;
    best.margin = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < spec.terms().size(); ++l) {
        const auto stage = lexicographic_max_min(spec, indices, spec.terms()[l], false);
        if (stage.status == LpStatus::Unbounded)
            throw Error(ErrorKind::UnboundedPositions,
                        "max-min LP unbounded for " + describe(indices));
        if (stage.status != LpStatus::Optimal)
            continue;
        if (stage.margin > best.margin + 1e-12) {
            best.margin = stage.margin;
            best.term = static_cast<int>(l);
        }
    }
    if (best.term < 0 || best.margin <= 0)
        throw Error(ErrorKind::AssumptionViolated,
                    "no point of C has h_i > 0 for all i in " + describe(indices));

    const auto refined = lexicographic_max_min(spec, indices, spec.terms()[best.term], true);
    best.point = refined.x;
    double m = std::numeric_limits<double>::infinity();
    for (int i : indices)
        m = std::min(m, spec.halfspace(i).eval(best.point));
    best.margin = m;
    if (best.margin <= 0)
        throw Error(ErrorKind::AssumptionViolated, "witness lost positivity for " + describe(indices));
    return best;
}

std::optional<Vector> WitnessOverrides::find(const IndexSet& indices) const
{
    if (auto it = pinned.find(indices); it != pinned.end())
        return it->second;
    return uniform;
}

const Vector& GeometryCert::witness(const IndexSet& indices) const
{
    auto it = witnesses.find(indices);
    if (it == witnesses.end())
        throw Error(ErrorKind::InternalConsistency,
                    "no witness stored for " + describe(indices));
    return it->second;
}

GeometryCert compute_cert(const SafetySpec& spec, const WitnessOverrides& overrides)
{
    GeometryCert cert;
    cert.proj_bounded = true;
    for (const auto& term : spec.terms()) {
        const bool bounded = is_bounded(term_normals(spec, term), term_offsets(spec, term));
        cert.term_bounded.push_back(bounded);
        cert.proj_bounded = cert.proj_bounded && bounded;
    }
    if (!cert.proj_bounded)
        throw Error(ErrorKind::UnboundedPositions, "a term of the safety set is unbounded");

    cert.s_cap = enumerate_s_cap(spec);
    cert.delta = std::numeric_limits<double>::infinity();
    for (const auto& I : cert.s_cap) {
        Vector y;
        if (auto pinned = overrides.find(I)) {
            y = *pinned;
            if (y.size() != spec.dim())
                throw Error(ErrorKind::InvalidSpec, "witness dimension mismatch");
            if (!contains(spec, y))
                throw Error(ErrorKind::AssumptionViolated,
                            "pinned witness for " + describe(I) + " lies outside C");
        } else {
            y = max_min_point(spec, I).point;
        }
        for (int i : I) {
            const double hi = spec.halfspace(i).eval(y);
            if (!(hi > 0))
                throw Error(ErrorKind::AssumptionViolated,
                            "witness for " + describe(I) + " has h_" + std::to_string(i + 1) +
                                " <= 0");
            cert.delta = std::min(cert.delta, hi);
        }
        cert.witnesses.emplace(I, std::move(y));
    }
    return cert;
}

std::pair<Vector, Vector> bounding_box(const SafetySpec& spec)
{
    const int n = spec.dim();
    Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
    Vector hi = Vector::Constant(n, -std::numeric_limits<double>::infinity());
    for (const auto& term : spec.terms()) {
        LpProblem<double> lp;
        lp.rows = term_normals(spec, term);
        lp.rhs = -term_offsets(spec, term);
        for (int j = 0; j < n; ++j) {
            for (auto sense : {LpSense::Minimize, LpSense::Maximize}) {
                lp.sense = sense;
                lp.cost = Vector::Unit(n, j);
                const auto sol = lp_solve(lp);
                if (sol.status == LpStatus::Unbounded)
                    throw Error(ErrorKind::UnboundedPositions, "safety set is unbounded");
                if (sol.status != LpStatus::Optimal)
                    continue;
                if (sense == LpSense::Minimize)
                    lo(j) = std::min(lo(j), sol.objective);
                else
                    hi(j) = std::max(hi(j), sol.objective);
            }
        }
    }
    return {lo, hi};
}

} // namespace polycbf
