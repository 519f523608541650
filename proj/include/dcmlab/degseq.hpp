#pragma once

// Degree-sequence families, per-n materialization, and the deterministic
// exponents and length/time scales attached to them.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcmlab/error.hpp"

namespace dcmlab {

using Degree = std::uint16_t;
inline constexpr std::uint32_t kMaxDegree = 1u << 15;

struct DegreeType {
    Degree in_deg = 1;
    Degree out_deg = 1;

    auto operator<=>(const DegreeType&) const = default;
    std::string str() const { return "(" + std::to_string(in_deg) + "," + std::to_string(out_deg) + ")"; }
};

/// Exact nonnegative rational, used for type fractions so that sums and the
/// in/out balance are checked without floating-point drift.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Fraction make(std::int64_t num, std::int64_t den) {
        if (den <= 0) throw InputError("fraction with nonpositive denominator");
        const std::int64_t g = std::gcd(num, den);
        return g == 0 ? Fraction{0, 1} : Fraction{num / g, den / g};
    }

    /// Parses "0.5", "1", "0.125", "3/8".
    static Fraction parse(const std::string& text) {
        const auto slash = text.find('/');
        try {
            if (slash != std::string::npos) {
                return make(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
            }
            const auto dot = text.find('.');
            if (dot == std::string::npos) return make(std::stoll(text), 1);
            const std::string whole = text.substr(0, dot);
            const std::string frac = text.substr(dot + 1);
            if (frac.size() > 17 || frac.find_first_not_of("0123456789") != std::string::npos)
                throw InputError("bad decimal fraction '" + text + "'");
            std::int64_t den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            const std::int64_t w = whole.empty() ? 0 : std::stoll(whole);
            const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
            return make(w * den + f, den);
        } catch (const InputError&) {
            throw;
        } catch (const std::exception&) {
            throw InputError("bad fraction '" + text + "'");
        }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Fraction operator+(Fraction a, Fraction b) {
        const std::int64_t g = std::gcd(a.den, b.den);
        const __int128 num = static_cast<__int128>(a.num) * (b.den / g) + static_cast<__int128>(b.num) * (a.den / g);
        const __int128 den = static_cast<__int128>(a.den / g) * b.den;
        return reduce(num, den);
    }
    friend Fraction operator*(Fraction a, std::int64_t k) { return reduce(static_cast<__int128>(a.num) * k, a.den); }
    friend bool operator==(const Fraction& a, const Fraction& b) { return a.num == b.num && a.den == b.den; }

private:
    static Fraction reduce(__int128 num, __int128 den) {
        __int128 a = num < 0 ? -num : num, b = den;
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a == 0) return {0, 1};
        num /= a;
        den /= a;
        if (num > INT64_MAX || den > INT64_MAX || num < INT64_MIN) throw InputError("fraction overflow");
        return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
    }
};

struct DegreeModel {
    struct Entry {
        DegreeType type;
        Fraction fraction;
    };

    std::vector<Entry> entries;
    /// Types declared to have linear size. Linear size is a property of the
    /// family, so it is declared rather than measured.
    std::vector<DegreeType> linear_types;
    /// Declared exponents a with |V_type| = n^(a+o(1)); types with a == 1 form,
    /// together with the linear types, the set used for the primed exponents.
    std::map<DegreeType, double> sublinear_exponents;
    /// Per-degree exponents for Eulerian families.
    std::map<Degree, double> alpha_d;

    bool is_linear(DegreeType t) const {
        return std::find(linear_types.begin(), linear_types.end(), t) != linear_types.end();
    }

    bool eulerian() const {
        return std::all_of(entries.begin(), entries.end(),
                           [](const Entry& e) { return e.type.in_deg == e.type.out_deg; });
    }

    /// Mean degree d = sum fraction * out_deg (equal to the in-degree mean).
    double mean_degree() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.fraction.value() * e.type.out_deg;
        return s;
    }

    /// Throws InputError describing the first violated invariant.
    void validate(bool paper_mode = true) const {
        if (entries.empty()) throw InputError("degree model has no types");
        Fraction total{0, 1};
        Fraction in_mass{0, 1};
        Fraction out_mass{0, 1};
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            if (e.type.in_deg < 1 || e.type.out_deg < 1)
                throw InputError("type " + e.type.str() + " has a zero degree");
            if (e.type.in_deg > kMaxDegree || e.type.out_deg > kMaxDegree)
                throw InputError("type " + e.type.str() + " exceeds the degree cap 2^15");
            if (paper_mode && (e.type.in_deg < 2 || e.type.out_deg < 2))
                throw InputError("type " + e.type.str() + " violates minimum degree 2");
            if (e.fraction.num <= 0 || e.fraction.num > e.fraction.den)
                throw InputError("type " + e.type.str() + " has fraction outside (0,1]");
            for (std::size_t j = 0; j < i; ++j)
                if (entries[j].type == e.type) throw InputError("type " + e.type.str() + " listed twice");
            total = total + e.fraction;
            in_mass = in_mass + e.fraction * e.type.in_deg;
            out_mass = out_mass + e.fraction * e.type.out_deg;
        }
        if (!(total == Fraction{1, 1})) throw InputError("type fractions do not sum to 1");
        if (!(in_mass == out_mass))
            throw InputError("model is unbalanced: mean in-degree " + std::to_string(in_mass.value()) +
                             " != mean out-degree " + std::to_string(out_mass.value()));
        for (const auto& t : linear_types) {
            const bool present = std::any_of(entries.begin(), entries.end(),
                                             [&](const Entry& e) { return e.type == t; });
            if (!present) throw InputError("linear type " + t.str() + " is not among the model types");
        }
        for (const auto& [t, a] : sublinear_exponents)
            if (!(a > 0.0 && a <= 1.0)) throw InputError("sublinear exponent of " + t.str() + " outside (0,1]");
        if (!linear_types.empty()) {
            const bool has_out_heavy = std::any_of(linear_types.begin(), linear_types.end(),
                                                   [](DegreeType t) { return t.out_deg >= t.in_deg; });
            const bool has_in_heavy = std::any_of(linear_types.begin(), linear_types.end(),
                                                  [](DegreeType t) { return t.in_deg >= t.out_deg; });
            if (!has_out_heavy || !has_in_heavy)
                throw InputError("linear types cannot carry a balanced degree mass");
        }
    }
};

/// Per-vertex degrees. Vertex x has d_minus[x] heads and d_plus[x] tails.
class DegreeSequence {
public:
    DegreeSequence() = default;

    DegreeSequence(std::vector<Degree> d_minus, std::vector<Degree> d_plus, bool paper_mode = true)
        : d_minus_(std::move(d_minus)), d_plus_(std::move(d_plus)) {
        if (d_minus_.size() != d_plus_.size()) throw InputError("in/out degree arrays differ in length");
        if (d_minus_.empty()) throw InputError("empty degree sequence");
        std::uint64_t in_sum = 0, out_sum = 0;
        for (std::size_t x = 0; x < d_minus_.size(); ++x) {
            const std::uint32_t lo = paper_mode ? 2 : 1;
            if (d_minus_[x] < lo || d_plus_[x] < lo)
                throw InputError("vertex " + std::to_string(x) + " has degree below " + std::to_string(lo));
            if (d_minus_[x] > kMaxDegree || d_plus_[x] > kMaxDegree)
                throw InputError("vertex " + std::to_string(x) + " exceeds the degree cap 2^15");
            in_sum += d_minus_[x];
            out_sum += d_plus_[x];
        }
        if (in_sum != out_sum)
            throw InputError("sum of in-degrees " + std::to_string(in_sum) + " != sum of out-degrees " +
                             std::to_string(out_sum));
        m_ = in_sum;
    }

    std::uint32_t n() const { return static_cast<std::uint32_t>(d_minus_.size()); }
    std::uint64_t m() const { return m_; }
    std::span<const Degree> d_minus() const { return d_minus_; }
    std::span<const Degree> d_plus() const { return d_plus_; }
    Degree in_degree(std::uint32_t x) const { return d_minus_[x]; }
    Degree out_degree(std::uint32_t x) const { return d_plus_[x]; }

    Degree min_in() const { return *std::min_element(d_minus_.begin(), d_minus_.end()); }
    Degree max_in() const { return *std::max_element(d_minus_.begin(), d_minus_.end()); }
    Degree min_out() const { return *std::min_element(d_plus_.begin(), d_plus_.end()); }
    Degree max_out() const { return *std::max_element(d_plus_.begin(), d_plus_.end()); }
    Degree min_degree() const { return std::min(min_in(), min_out()); }
    Degree max_degree() const { return std::max(max_in(), max_out()); }

    bool eulerian() const { return d_minus_ == d_plus_; }

    friend bool operator==(const DegreeSequence&, const DegreeSequence&) = default;

private:
    std::vector<Degree> d_minus_;
    std::vector<Degree> d_plus_;
    std::uint64_t m_ = 0;
};

enum class BalanceMode {
    Reject,          // largest remainder plus one swap, otherwise InputError
    DropToFeasible,  // as Reject, retrying n-1, n-2, ... and recording a warning
};

struct Materialized {
    DegreeSequence sequence;
    /// Vertex counts per type, in lexicographic type order.
    std::vector<std::pair<DegreeType, std::uint32_t>> counts;
    std::optional<std::string> warning;
};

namespace detail {

inline std::optional<std::vector<std::pair<DegreeType, std::uint32_t>>> round_counts(
    const std::vector<DegreeModel::Entry>& sorted, std::uint32_t n, std::int64_t* residual) {
    const std::size_t k = sorted.size();
    std::vector<std::int64_t> count(k);
    std::vector<__int128> remainder(k);  // numerator over the entry's denominator, scaled to common compare
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const __int128 scaled = static_cast<__int128>(sorted[i].fraction.num) * n;
        count[i] = static_cast<std::int64_t>(scaled / sorted[i].fraction.den);
        remainder[i] = scaled % sorted[i].fraction.den;
        assigned += count[i];
    }
    // Largest remainder; ties go to the lexicographically smaller type.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] * sorted[b].fraction.den > remainder[b] * sorted[a].fraction.den;
    });
    for (std::int64_t extra = static_cast<std::int64_t>(n) - assigned, j = 0; extra > 0; --extra, ++j)
        ++count[order[static_cast<std::size_t>(j) % k]];

    auto imbalance = [&] {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < k; ++i)
            s += count[i] * (static_cast<std::int64_t>(sorted[i].type.in_deg) - sorted[i].type.out_deg);
        return s;
    };
    std::int64_t imb = imbalance();
    if (imb != 0) {
        bool fixed = false;
        for (std::size_t a = 0; a < k && !fixed; ++a) {
            if (count[a] == 0) continue;
            const std::int64_t da = static_cast<std::int64_t>(sorted[a].type.in_deg) - sorted[a].type.out_deg;
            for (std::size_t b = 0; b < k && !fixed; ++b) {
                if (a == b) continue;
                const std::int64_t db = static_cast<std::int64_t>(sorted[b].type.in_deg) - sorted[b].type.out_deg;
                if (imb - da + db == 0) {
                    --count[a];
                    ++count[b];
                    fixed = true;
                }
            }
        }
        if (!fixed) {
            *residual = imb;
            return std::nullopt;
        }
    }
    std::vector<std::pair<DegreeType, std::uint32_t>> out;
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(sorted[i].type, static_cast<std::uint32_t>(count[i]));
    return out;
}

}  // namespace detail

/// Rounds the model's fractions to vertex counts for a given n.
///
/// Counts start at floor(fraction * n); the remaining vertices go to the types
/// with the largest fractional remainders (ties: lexicographic type order). If
/// sum d- != sum d+ afterwards, a single vertex is moved between two types, the
/// first (from, to) pair in lexicographic order that restores balance. Vertices
/// are laid out type by type in lexicographic order.
inline Materialized materialize(const DegreeModel& model, std::uint32_t n, BalanceMode mode = BalanceMode::Reject,
                                bool paper_mode = true) {
    if (n < 2) throw InputError("materialize needs n >= 2");
    model.validate(paper_mode);
    auto sorted = model.entries;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.type < b.type; });

    std::int64_t residual = 0;
    std::uint32_t target = n;
    std::optional<std::vector<std::pair<DegreeType, std::uint32_t>>> counts;
    for (;;) {
        counts = detail::round_counts(sorted, target, &residual);
        if (counts) break;
        if (mode == BalanceMode::Reject || target <= 2)
            throw InputError("cannot balance degrees at n=" + std::to_string(target) +
                             ": residual imbalance sum(d-) - sum(d+) = " + std::to_string(residual));
        --target;
    }
    std::vector<Degree> din, dout;
    din.reserve(target);
    dout.reserve(target);
    for (const auto& [type, c] : *counts) {
        din.insert(din.end(), c, type.in_deg);
        dout.insert(dout.end(), c, type.out_deg);
    }
    Materialized out{DegreeSequence(std::move(din), std::move(dout), paper_mode), std::move(*counts), std::nullopt};
    if (target != n)
        out.warning = "n=" + std::to_string(n) + " is not balanceable; dropped to nearest feasible n=" +
                      std::to_string(target);
    return out;
}

struct ModelScales {
    double nu = 0.0;       // (1/m) sum d- d+
    double entropy = 0.0;  // sum (d-/m) log d+
    double t_ent = 0.0;    // log n / entropy
    double d_star = 0.0;   // log n / log nu
    double hslash = 0.0;   // (1/5) log n / log Delta
    std::optional<double> theta;  // log log log n, undefined for n < 16
    double ell0 = 0.0;     // 4 log log n / log delta
    double eta = 0.5;
    double h_eta = 0.0;    // (1 - eta) log n / log nu
};

inline ModelScales scales(const DegreeSequence& seq, double eta = 0.5) {
    const auto n = static_cast<double>(seq.n());
    const auto m = static_cast<double>(seq.m());
    ModelScales s;
    s.eta = eta;
    double nu_sum = 0.0, ent_sum = 0.0;
    for (std::uint32_t x = 0; x < seq.n(); ++x) {
        nu_sum += static_cast<double>(seq.in_degree(x)) * seq.out_degree(x);
        ent_sum += static_cast<double>(seq.in_degree(x)) * std::log(static_cast<double>(seq.out_degree(x)));
    }
    s.nu = nu_sum / m;
    s.entropy = ent_sum / m;
    const double log_n = std::log(n);
    s.t_ent = log_n / s.entropy;
    s.d_star = log_n / std::log(s.nu);
    s.hslash = log_n / (5.0 * std::log(static_cast<double>(seq.max_degree())));
    if (seq.n() >= 16) s.theta = std::log(std::log(log_n));
    s.ell0 = 4.0 * std::log(log_n) / std::log(static_cast<double>(seq.min_degree()));
    s.h_eta = (1.0 - eta) * s.d_star;
    return s;
}

/// Depth used for the locally-tree-like test: max(1, floor(log log log n)).
inline int ltl_depth(std::uint32_t n) {
    if (n < 16) return 1;
    const double theta = std::log(std::log(std::log(static_cast<double>(n))));
    return std::max(1, static_cast<int>(std::floor(theta)));
}

struct Exponents {
    double gamma0 = 1.0;
    double gamma1 = 1.0;
    double kappa0 = 1.0;
    double kappa1 = 1.0;
    std::optional<double> gamma0_prime;
    std::optional<double> kappa0_prime;
    std::optional<double> alpha;  // 1 / (gamma1 - 1), left-tail exponent of the bulk law
    std::optional<double> beta_euler;
};

inline Exponents exponents(const DegreeModel& model) {
    model.validate(false);
    if (model.linear_types.empty()) throw InputError("exponents need at least one declared linear type");
    auto ratio = [](DegreeType t) { return std::log(double(t.out_deg)) / std::log(double(t.in_deg)); };

    Degree min_in = kMaxDegree, max_in = 0, min_out = kMaxDegree, max_out = 0;
    for (const auto& e : model.entries) {
        min_in = std::min(min_in, e.type.in_deg);
        max_in = std::max(max_in, e.type.in_deg);
        min_out = std::min(min_out, e.type.out_deg);
        max_out = std::max(max_out, e.type.out_deg);
    }
    Exponents ex;
    ex.gamma0 = std::log(double(max_out)) / std::log(double(min_in));
    ex.kappa0 = std::log(double(min_out)) / std::log(double(max_in));
    ex.gamma1 = ratio(model.linear_types.front());
    ex.kappa1 = ex.gamma1;
    for (const auto& t : model.linear_types) {
        ex.gamma1 = std::max(ex.gamma1, ratio(t));
        ex.kappa1 = std::min(ex.kappa1, ratio(t));
    }
    if (ex.gamma1 > 1.0) ex.alpha = 1.0 / (ex.gamma1 - 1.0);

    if (!model.sublinear_exponents.empty()) {
        std::vector<DegreeType> l0 = model.linear_types;
        for (const auto& [t, a] : model.sublinear_exponents)
            if (a >= 1.0 && !model.is_linear(t)) l0.push_back(t);
        Degree min_in0 = kMaxDegree, max_in0 = 0, min_out0 = kMaxDegree, max_out0 = 0;
        for (const auto& t : l0) {
            min_in0 = std::min(min_in0, t.in_deg);
            max_in0 = std::max(max_in0, t.in_deg);
            min_out0 = std::min(min_out0, t.out_deg);
            max_out0 = std::max(max_out0, t.out_deg);
        }
        ex.gamma0_prime = std::log(double(max_out0)) / std::log(double(min_in0));
        ex.kappa0_prime = std::log(double(min_out0)) / std::log(double(max_in0));
    }

    if (model.eulerian()) {
        double best = -1.0;
        bool complete = true;
        for (const auto& e : model.entries) {
            const Degree d = e.type.in_deg;
            std::optional<double> a;
            if (auto it = model.alpha_d.find(d); it != model.alpha_d.end())
                a = it->second;
            else if (model.is_linear(e.type))
                a = 1.0;
            else if (auto jt = model.sublinear_exponents.find(e.type); jt != model.sublinear_exponents.end())
                a = jt->second;
            if (!a) {
                complete = false;
                break;
            }
            best = std::max(best, *a / d);
        }
        if (complete) ex.beta_euler = model.mean_degree() * best;
    }
    return ex;
}

}  // namespace dcmlab
