#include "polycbf/cbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polycbf/lp.hpp"
#include "polycbf/rng.hpp"

namespace polycbf {

ExtendedCbf::ExtendedCbf(SafetySpec spec, GeometryCert cert, double gamma, double epsilon)
    : spec_(std::move(spec)), cert_(std::move(cert)), gamma_(gamma), epsilon_(epsilon)
{
    if (!(gamma_ > 0) || !(epsilon_ > 0))
        throw Error(ErrorKind::ParameterViolation, "gamma and epsilon must be positive");
    if (!(gamma_ * cert_.delta > epsilon_))
        throw Error(ErrorKind::ParameterViolation,
                    "gamma * delta = " + std::to_string(gamma_ * cert_.delta) +
                        " must exceed epsilon = " + std::to_string(epsilon_));

    const int n = spec_.dim();
    const int r = spec_.size();
    rows_ = Matrix::Zero(2 * r, 2 * n);
    offsets_.resize(2 * r);
    rows_.topLeftCorner(r, n) = spec_.normals();
    rows_.bottomLeftCorner(r, n) = gamma_ * spec_.normals();
    rows_.bottomRightCorner(r, n) = spec_.normals();
    offsets_.head(r) = spec_.offsets();
    offsets_.tail(r) = (gamma_ * spec_.offsets()).array() - epsilon_;

    for (const auto& term : spec_.terms()) {
        IndexSet ext = term;
        for (int i : term)
            ext.push_back(i + r);
        extended_terms_.push_back(std::move(ext));
    }
}

Matrix ExtendedCbf::term_rows(int term) const
{
    const auto& idx = extended_terms_.at(term);
    Matrix A(idx.size(), state_dim());
    for (std::size_t k = 0; k < idx.size(); ++k)
        A.row(static_cast<Eigen::Index>(k)) = rows_.row(idx[k]);
    return A;
}

Vector ExtendedCbf::term_offsets(int term) const
{
    const auto& idx = extended_terms_.at(term);
    Vector b(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
        b(static_cast<Eigen::Index>(k)) = offsets_(idx[k]);
    return b;
}

ExtendedCbf build_cbf(const SafetySpec& spec, const GeometryCert& cert, double gamma,
                      double epsilon)
{
    return ExtendedCbf(spec, cert, gamma, epsilon);
}

ActiveSet eval_B(const ExtendedCbf& cbf, const Vector& x, double tol)
{
    if (x.size() != cbf.state_dim())
        throw Error(ErrorKind::InvalidSpec, "state dimension mismatch");
    ActiveSet out;
    out.values = cbf.eval_all(x);
    const auto& terms = cbf.extended_terms();
    out.per_term_min.resize(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t l = 0; l < terms.size(); ++l) {
        double v = std::numeric_limits<double>::infinity();
        for (int i : terms[l])
            v = std::min(v, out.values(i));
        out.per_term_min(static_cast<Eigen::Index>(l)) = v;
    }
    out.value = out.per_term_min.maxCoeff();

    std::vector<bool> active(static_cast<std::size_t>(cbf.count()), false);
    for (std::size_t l = 0; l < terms.size(); ++l) {
        if (out.per_term_min(static_cast<Eigen::Index>(l)) < out.value - tol)
            continue;
        out.argmax_terms.push_back(static_cast<int>(l));
        for (int i : terms[l])
            if (std::abs(out.values(i) - out.value) <= tol)
                active[static_cast<std::size_t>(i)] = true;
    }
    for (int i = 0; i < cbf.count(); ++i)
        if (active[static_cast<std::size_t>(i)])
            out.active_indices.push_back(i);
    return out;
}

Vector lift_position(const ExtendedCbf& cbf, const Vector& x1)
{
    const auto& spec = cbf.spec();
    const Vector tv = term_values(spec, x1);
    Eigen::Index best = 0;
    const double h = tv.maxCoeff(&best); // first maximizer on ties
    if (h < 0)
        throw Error(ErrorKind::NotInC, "position lies outside the safety set");

    const Vector& y = cbf.cert().witness(spec.terms()[static_cast<std::size_t>(best)]);
    const double gd = cbf.gamma() * cbf.cert().delta;
    const double sigma = 0.5 * (1.0 + cbf.epsilon() / gd);
    Vector x(cbf.state_dim());
    x << x1, -cbf.gamma() * sigma * (x1 - y);

    const double b = eval_B(cbf, x).value;
    if (b < -1e-12)
        throw Error(ErrorKind::InternalConsistency,
                    "lifted state has B = " + std::to_string(b));
    return x;
}

bool check_compactness(const ExtendedCbf& cbf)
{
    bool compact = true;
    for (int l = 0; l < static_cast<int>(cbf.extended_terms().size()); ++l)
        compact = is_bounded(cbf.term_rows(l), cbf.term_offsets(l)) && compact;
    if (cbf.cert().proj_bounded && !compact)
        throw Error(ErrorKind::InternalConsistency,
                    "bounded positions but unbounded extended set");
    return compact;
}

VelocityCert velocity_bound(const ExtendedCbf& cbf)
{
    const int n = cbf.position_dim();
    VelocityCert cert;
    cert.gamma = cbf.gamma();
    cert.epsilon = cbf.epsilon();
    for (int l = 0; l < static_cast<int>(cbf.extended_terms().size()); ++l) {
        LpProblem<double> lp;
        lp.sense = LpSense::Maximize;
        lp.rows = cbf.term_rows(l);
        lp.rhs = -cbf.term_offsets(l);
        for (int j = 0; j < n; ++j) {
            for (double s : {1.0, -1.0}) {
                lp.cost = Vector::Zero(2 * n);
                lp.cost(n + j) = s;
                const auto sol = lp_solve(lp);
                if (sol.status == LpStatus::Unbounded)
                    throw Error(ErrorKind::UnboundedPositions, "velocity unbounded on C^s");
                if (sol.status != LpStatus::Optimal)
                    continue; // empty term
                cert.per_component_bound = std::max(cert.per_component_bound, sol.objective);
            }
        }
    }
    cert.norm_bound = std::sqrt(static_cast<double>(n)) * cert.per_component_bound;
    cert.c = cert.norm_bound / cert.gamma;
    return cert;
}

namespace {

struct Facet {
    int term;
    int index;
    std::vector<Vector> vertices;
};

std::vector<Facet> boundary_facets(const ExtendedCbf& cbf, Rng& rng)
{
    const int dim = cbf.state_dim();
    std::vector<Facet> facets;
    for (int l = 0; l < static_cast<int>(cbf.extended_terms().size()); ++l) {
        const Matrix A = cbf.term_rows(l);
        const Vector b = cbf.term_offsets(l);
        const auto& idx = cbf.extended_terms()[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < idx.size(); ++k) {
            LpProblem<double> lp;
            lp.rows.resize(A.rows() + 1, dim);
            lp.rows << A, -A.row(static_cast<Eigen::Index>(k));
            lp.rhs.resize(b.size() + 1);
            lp.rhs << -b, b(static_cast<Eigen::Index>(k));

            Facet facet{l, idx[k], {}};
            const int pool = 2 * dim + 2;
            for (int v = 0; v < pool; ++v) {
                lp.cost.resize(dim);
                for (int j = 0; j < dim; ++j)
                    lp.cost(j) = rng.uniform(-1.0, 1.0);
                const auto sol = lp_solve(lp);
                if (sol.status != LpStatus::Optimal)
                    break; // empty facet
                const bool seen = std::any_of(facet.vertices.begin(), facet.vertices.end(),
                                              [&](const Vector& w) {
                                                  return (w - sol.x).cwiseAbs().maxCoeff() < 1e-9;
                                              });
                if (!seen)
                    facet.vertices.push_back(sol.x);
            }
            if (!facet.vertices.empty())
                facets.push_back(std::move(facet));
        }
    }
    return facets;
}

} // namespace

std::vector<Vector> sample_boundary(const ExtendedCbf& cbf, int count, std::uint64_t seed)
{
    std::vector<Vector> out;
    if (count <= 0)
        return out;
    Rng rng(seed);
    auto facets = boundary_facets(cbf, rng);
    std::vector<bool> dead(facets.size(), false);
    constexpr int kAttempts = 32;

    std::size_t cursor = 0;
    std::size_t alive = facets.size();
    while (static_cast<int>(out.size()) < count && alive > 0) {
        const std::size_t f = cursor++ % facets.size();
        if (dead[f])
            continue;
        const auto& verts = facets[f].vertices;
        bool placed = false;
        for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
            Vector w(static_cast<Eigen::Index>(verts.size()));
            for (Eigen::Index j = 0; j < w.size(); ++j)
                w(j) = rng.exponential();
            w /= w.sum();
            Vector x = Vector::Zero(cbf.state_dim());
            for (std::size_t j = 0; j < verts.size(); ++j)
                x += w(static_cast<Eigen::Index>(j)) * verts[j];
            if (std::abs(eval_B(cbf, x).value) <= 1e-9) {
                out.push_back(std::move(x));
                placed = true;
            }
        }
        if (!placed) {
            dead[f] = true;
            --alive;
        }
    }
    return out;
}

bool ConditionReport::all_feasible() const
{
    return std::all_of(samples.begin(), samples.end(),
                       [](const ConditionSample& s) { return s.feasible; });
}

double ConditionReport::worst_margin() const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples)
        m = std::min(m, s.margin);
    return m;
}

int ConditionReport::infeasible_count() const
{
    return static_cast<int>(std::count_if(samples.begin(), samples.end(),
                                          [](const ConditionSample& s) { return !s.feasible; }));
}

double condition_margin(const ExtendedCbf& cbf, const PlantModel& plant, const Vector& x,
                        const IndexSet& critical, const Vector& u)
{
    const int n = cbf.position_dim();
    const Vector x1 = x.head(n);
    const Vector x2 = x.tail(n);
    const Vector accel = cbf.gamma() * x2 + plant.f2(x1, x2) + plant.G2(x1) * u;
    double m = std::numeric_limits<double>::infinity();
    for (int i : critical)
        m = std::min(m, cbf.spec().halfspace(i).a.dot(accel));
    return m;
}

ConditionReport verify_safety_condition(const ExtendedCbf& cbf, const PlantModel& plant,
                                        const InputSet& input_set,
                                        const std::vector<Vector>& samples)
{
    const int n = cbf.position_dim();
    const int r = cbf.base_count();
    if (plant.n != n)
        throw Error(ErrorKind::InvalidSpec, "plant dimension does not match the safety set");

    ConditionReport report;
    report.samples.reserve(samples.size());
    for (const auto& x : samples) {
        ConditionSample s;
        s.x = x;
        const auto act = eval_B(cbf, x);
        s.active = act.active_indices;
        for (int i : act.active_indices)
            if (i >= r && std::abs(act.values(i)) <= kActivationTol)
                s.critical.push_back(i - r);

        if (s.critical.empty()) {
            s.margin = std::numeric_limits<double>::infinity();
            s.feasible = true;
            report.samples.push_back(std::move(s));
            continue;
        }

        const Vector x1 = x.head(n);
        const Vector x2 = x.tail(n);
        Vector y;
        if (auto it = cbf.cert().witnesses.find(s.critical); it != cbf.cert().witnesses.end()) {
            y = it->second;
        } else {
            try {
                y = max_min_point(cbf.spec(), s.critical).point;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::AssumptionViolated)
                    throw;
                s.margin = -std::numeric_limits<double>::infinity();
                report.samples.push_back(std::move(s));
                continue;
            }
        }

        const Matrix Gp = right_inverse(plant.G2(x1));
        const Vector yx = -x2 - cbf.gamma() * x1 + cbf.gamma() * y;
        const Vector u0 = -Gp * (plant.f2(x1, x2) + cbf.gamma() * x2);
        const Vector v = Gp * yx;

        const auto steps = input_set.admissible_steps(u0, v);
        if (!steps || steps->second <= 0) {
            s.margin = -std::numeric_limits<double>::infinity();
            report.samples.push_back(std::move(s));
            continue;
        }
        s.beta = std::isinf(steps->second) ? 1.0 : steps->second;
        Vector u = u0 + s.beta * v;
        s.margin = condition_margin(cbf, plant, x, s.critical, u);
        s.feasible = s.margin > 0 && input_set.contains(u, 1e-9);
        s.witness = std::move(u);
        report.samples.push_back(std::move(s));
    }
    return report;
}

} // namespace polycbf
