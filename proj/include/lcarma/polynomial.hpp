#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lcarma {

using MultiIndex = std::vector<int>;

// Real-coefficient polynomial in d variables, P(z) = sum_a c_a z^a. The
// operator P(D) has symbol P(i xi) under F f(xi) = int e^{-i<xi,x>} f(x) dx.
class MultiPolynomial {
public:
    MultiPolynomial() = default;
    explicit MultiPolynomial(std::size_t dim);

    static MultiPolynomial zero(std::size_t dim) { return MultiPolynomial(dim); }
    static MultiPolynomial constant(std::size_t dim, double c);
    // z_j for 0-based axis j.
    static MultiPolynomial variable(std::size_t dim, std::size_t j);
    static MultiPolynomial monomial(const MultiIndex& a, double c);

    // Text form: sum of terms `coef * x1^a1 * ... * xd^ad` (or juxtaposed
    // factors). dim = 0 infers the dimension from the largest variable index.
    static MultiPolynomial parse(const std::string& text, std::size_t dim = 0);
    std::string to_string() const;

    std::size_t dim() const { return dim_; }
    int degree() const { return degree_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_homogeneous() const;
    const std::map<MultiIndex, double>& terms() const { return terms_; }
    double coefficient(const MultiIndex& a) const;
    double coefficient_norm() const;

    // Adds c to the coefficient of z^a, dropping the term if it cancels.
    void add_term(const MultiIndex& a, double c);

    std::complex<double> eval(std::span<const std::complex<double>> z) const;
    std::complex<double> eval(const std::complex<double>* z) const;
    // P(i xi + eta); eta may be null.
    std::complex<double> symbol(const double* xi, const double* eta = nullptr) const;

    MultiPolynomial adjoint() const;
    MultiPolynomial leading_form() const;
    MultiPolynomial pow(unsigned n) const;

    MultiPolynomial operator+(const MultiPolynomial& o) const;
    MultiPolynomial operator-(const MultiPolynomial& o) const;
    MultiPolynomial operator*(const MultiPolynomial& o) const;
    MultiPolynomial operator*(double s) const;
    bool operator==(const MultiPolynomial& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

private:
    void check_same_dim(const MultiPolynomial& o) const;
    void refresh();

    std::size_t dim_ = 0;
    int degree_ = -1;
    std::map<MultiIndex, double> terms_;
    // Flattened evaluation plan: per-variable power tables laid out back to
    // back, each term a coefficient plus a list of table slots.
    std::vector<int> max_power_;
    std::vector<std::size_t> table_offset_;
    std::size_t table_size_ = 0;
    std::vector<double> plan_coef_;
    std::vector<std::size_t> plan_start_;
    std::vector<std::size_t> plan_slot_;
};

// Polynomial whose symbol at real xi is (1 + |xi|^2)^alpha: (1 - sum z_j^2)^alpha.
MultiPolynomial regularizer(std::size_t dim, unsigned alpha);

}  // namespace lcarma
