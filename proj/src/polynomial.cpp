#include "lcarma/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "lcarma/errors.hpp"

namespace lcarma {

MultiPolynomial::MultiPolynomial(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ArgumentError("polynomial: dimension must be positive");
    refresh();
}

MultiPolynomial MultiPolynomial::constant(std::size_t dim, double c) {
    MultiPolynomial p(dim);
    p.add_term(MultiIndex(dim, 0), c);
    return p;
}

MultiPolynomial MultiPolynomial::variable(std::size_t dim, std::size_t j) {
    if (j >= dim) throw ArgumentError("polynomial: variable index out of range");
    MultiIndex a(dim, 0);
    a[j] = 1;
    return monomial(a, 1.0);
}

MultiPolynomial MultiPolynomial::monomial(const MultiIndex& a, double c) {
    MultiPolynomial p(a.size());
    p.add_term(a, c);
    return p;
}

void MultiPolynomial::add_term(const MultiIndex& a, double c) {
    if (a.size() != dim_) throw ArgumentError("polynomial: multi-index has wrong dimension");
    for (int e : a)
        if (e < 0) throw ArgumentError("polynomial: negative exponent");
    if (!std::isfinite(c)) throw ArgumentError("polynomial: non-finite coefficient");
    if (c == 0.0) return;
    auto it = terms_.find(a);
    if (it == terms_.end()) {
        terms_.emplace(a, c);
    } else {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
    refresh();
}

void MultiPolynomial::refresh() {
    degree_ = -1;
    max_power_.assign(dim_, 0);
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (std::size_t j = 0; j < dim_; ++j) {
            s += a[j];
            max_power_[j] = std::max(max_power_[j], a[j]);
        }
        degree_ = std::max(degree_, s);
    }
    table_offset_.assign(dim_, 0);
    table_size_ = 0;
    for (std::size_t j = 0; j < dim_; ++j) {
        table_offset_[j] = table_size_;
        table_size_ += static_cast<std::size_t>(max_power_[j]) + 1;
    }
    plan_coef_.clear();
    plan_slot_.clear();
    plan_start_.assign(1, 0);
    for (const auto& [a, c] : terms_) {
        plan_coef_.push_back(c);
        for (std::size_t j = 0; j < dim_; ++j)
            if (a[j]) plan_slot_.push_back(table_offset_[j] + static_cast<std::size_t>(a[j]));
        plan_start_.push_back(plan_slot_.size());
    }
}

double MultiPolynomial::coefficient(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? 0.0 : it->second;
}

double MultiPolynomial::coefficient_norm() const {
    double s = 0.0;
    for (const auto& [a, c] : terms_) s += c * c;
    return std::sqrt(s);
}

bool MultiPolynomial::is_homogeneous() const {
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s != degree_) return false;
    }
    return true;
}

std::complex<double> MultiPolynomial::eval(std::span<const std::complex<double>> z) const {
    if (z.size() != dim_) throw ArgumentError("polynomial: evaluation point has wrong dimension");
    return eval(z.data());
}

std::complex<double> MultiPolynomial::eval(const std::complex<double>* z) const {
    if (terms_.empty()) return 0.0;
    constexpr std::size_t kStack = 128;
    std::complex<double> stack[kStack];
    std::vector<std::complex<double>> heap;
    std::complex<double>* table = stack;
    if (table_size_ > kStack) {
        heap.resize(table_size_);
        table = heap.data();
    }
    for (std::size_t j = 0; j < dim_; ++j) {
        std::complex<double>* t = table + table_offset_[j];
        t[0] = 1.0;
        for (int k = 1; k <= max_power_[j]; ++k) t[k] = t[k - 1] * z[j];
    }
    std::complex<double> sum = 0.0;
    for (std::size_t k = 0; k < plan_coef_.size(); ++k) {
        std::complex<double> t = plan_coef_[k];
        for (std::size_t s = plan_start_[k]; s < plan_start_[k + 1]; ++s) t *= table[plan_slot_[s]];
        sum += t;
    }
    return sum;
}

std::complex<double> MultiPolynomial::symbol(const double* xi, const double* eta) const {
    constexpr std::size_t kStack = 16;
    std::complex<double> stack[kStack];
    std::vector<std::complex<double>> heap;
    std::complex<double>* z = stack;
    if (dim_ > kStack) {
        heap.resize(dim_);
        z = heap.data();
    }
    for (std::size_t j = 0; j < dim_; ++j) z[j] = {eta ? eta[j] : 0.0, xi[j]};
    return eval(z);
}

MultiPolynomial MultiPolynomial::adjoint() const {
    MultiPolynomial p(dim_);
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        p.terms_.emplace(a, (s % 2) ? -c : c);
    }
    p.refresh();
    return p;
}

MultiPolynomial MultiPolynomial::leading_form() const {
    MultiPolynomial p(dim_);
    for (const auto& [a, c] : terms_) {
        int s = 0;
        for (int e : a) s += e;
        if (s == degree_) p.terms_.emplace(a, c);
    }
    p.refresh();
    return p;
}

MultiPolynomial MultiPolynomial::pow(unsigned n) const {
    MultiPolynomial r = constant(dim_, 1.0);
    for (unsigned k = 0; k < n; ++k) r = r * *this;
    return r;
}

void MultiPolynomial::check_same_dim(const MultiPolynomial& o) const {
    if (dim_ != o.dim_) throw ArgumentError("polynomial: dimension mismatch");
}

MultiPolynomial MultiPolynomial::operator+(const MultiPolynomial& o) const {
    check_same_dim(o);
    MultiPolynomial r = *this;
    for (const auto& [a, c] : o.terms_) r.add_term(a, c);
    return r;
}

MultiPolynomial MultiPolynomial::operator-(const MultiPolynomial& o) const { return *this + o * -1.0; }

MultiPolynomial MultiPolynomial::operator*(const MultiPolynomial& o) const {
    check_same_dim(o);
    MultiPolynomial r(dim_);
    MultiIndex s(dim_);
    for (const auto& [a, c] : terms_) {
        for (const auto& [b, e] : o.terms_) {
            for (std::size_t j = 0; j < dim_; ++j) s[j] = a[j] + b[j];
            r.add_term(s, c * e);
        }
    }
    return r;
}

MultiPolynomial MultiPolynomial::operator*(double s) const {
    MultiPolynomial r(dim_);
    if (s == 0.0) return r;
    for (const auto& [a, c] : terms_) r.terms_.emplace(a, c * s);
    r.refresh();
    return r;
}

// ---- text form ----

namespace {

struct Lexer {
    const std::string& s;
    std::size_t i = 0;

    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool at_end() {
        skip();
        return i >= s.size();
    }
    char peek() {
        skip();
        return i < s.size() ? s[i] : '\0';
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("polynomial parse error at column " + std::to_string(i + 1) + ": " + what +
                          " in \"" + s + "\"");
    }
    double number() {
        skip();
        std::size_t j = i;
        while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                                s[j] == 'e' || s[j] == 'E' ||
                                ((s[j] == '+' || s[j] == '-') && j > i &&
                                 (s[j - 1] == 'e' || s[j - 1] == 'E'))))
            ++j;
        if (j == i) fail("expected number");
        double v = 0.0;
        auto res = std::from_chars(s.data() + i, s.data() + j, v);
        if (res.ec != std::errc() || res.ptr != s.data() + j) fail("malformed number");
        i = j;
        return v;
    }
    int integer() {
        skip();
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) fail("expected integer");
        int v = 0;
        auto res = std::from_chars(s.data() + i, s.data() + j, v);
        if (res.ec != std::errc()) fail("integer out of range");
        i = j;
        return v;
    }
};

struct RawTerm {
    double coef = 1.0;
    std::vector<std::pair<int, int>> factors;  // (1-based variable, power)
};

}  // namespace

MultiPolynomial MultiPolynomial::parse(const std::string& text, std::size_t dim) {
    Lexer lx{text};
    std::vector<RawTerm> raw;
    int max_var = 0;
    if (lx.at_end()) lx.fail("empty polynomial");
    bool first = true;
    while (!lx.at_end()) {
        double sign = 1.0;
        char c = lx.peek();
        if (c == '+' || c == '-') {
            sign = c == '-' ? -1.0 : 1.0;
            ++lx.i;
        } else if (!first) {
            lx.fail("expected '+' or '-'");
        }
        first = false;
        RawTerm t;
        t.coef = sign;
        bool any = false;
        while (true) {
            c = lx.peek();
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                t.coef *= lx.number();
            } else if (c == 'x' || c == 'z') {
                ++lx.i;
                int v = lx.integer();
                if (v < 1) lx.fail("variable indices start at 1");
                int p = 1;
                if (lx.peek() == '^') {
                    ++lx.i;
                    p = lx.integer();
                }
                t.factors.emplace_back(v, p);
                max_var = std::max(max_var, v);
            } else {
                break;
            }
            any = true;
            if (lx.peek() == '*') {
                ++lx.i;
                char n = lx.peek();
                if (!(std::isdigit(static_cast<unsigned char>(n)) || n == '.' || n == 'x' || n == 'z'))
                    lx.fail("dangling '*'");
            }
        }
        if (!any) lx.fail("expected a term");
        raw.push_back(std::move(t));
    }
    if (dim == 0) dim = static_cast<std::size_t>(std::max(max_var, 1));
    if (static_cast<std::size_t>(max_var) > dim)
        throw ConfigError("polynomial \"" + text + "\" uses x" + std::to_string(max_var) +
                          " but dimension is " + std::to_string(dim));
    MultiPolynomial p(dim);
    for (const auto& t : raw) {
        MultiIndex a(dim, 0);
        for (auto [v, pw] : t.factors) a[static_cast<std::size_t>(v - 1)] += pw;
        p.add_term(a, t.coef);
    }
    return p;
}

std::string MultiPolynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    // Highest degree first reads more naturally; ties in map order.
    std::vector<std::pair<MultiIndex, double>> sorted(terms_.begin(), terms_.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
        int sx = 0, sy = 0;
        for (int e : x.first) sx += e;
        for (int e : y.first) sy += e;
        return sx > sy;
    });
    char buf[40];
    for (const auto& [a, c] : sorted) {
        double mag = std::abs(c);
        if (first) {
            if (c < 0) out += "-";
        } else {
            out += c < 0 ? " - " : " + ";
        }
        first = false;
        std::snprintf(buf, sizeof buf, "%.17g", mag);
        out += buf;
        for (std::size_t j = 0; j < dim_; ++j) {
            if (a[j] == 0) continue;
            out += " * x" + std::to_string(j + 1);
            if (a[j] > 1) out += "^" + std::to_string(a[j]);
        }
    }
    return out;
}

MultiPolynomial regularizer(std::size_t dim, unsigned alpha) {
    MultiPolynomial base = MultiPolynomial::constant(dim, 1.0);
    for (std::size_t j = 0; j < dim; ++j) {
        MultiIndex a(dim, 0);
        a[j] = 2;
        base.add_term(a, -1.0);
    }
    return base.pow(alpha);
}

}  // namespace lcarma
