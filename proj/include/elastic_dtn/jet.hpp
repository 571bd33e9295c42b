#pragma once

/**
 * @file jet.hpp
 * @brief Truncated multivariate Taylor polynomials ("jets") with complex
 *        coefficients.
 *
 * A jet lives in a JetContext describing the chart: the manifold dimension
 * n, the truncation order K and a base covector xi0. The formal variables
 * are x_1..x_n followed by the cotangent offsets xh_1..xh_{n-1}, where the
 * covector is xi = xi0 + xh. All 2n-1 variables are centered at zero.
 *
 * Every jet carries an accuracy a <= K: all coefficients of total degree
 * <= a are exact, and nothing above a is stored. Products, sums and
 * quotients take the minimum accuracy of their operands; each partial
 * derivative costs one degree.
 *
 * @code
 * elastic_dtn::JetContext ctx(2, 4, {1.0});
 * auto xn = elastic_dtn::Jet::variable(ctx, ctx.normal());
 * auto r = elastic_dtn::reciprocal(1.0 + xn);  // 1 - xn + xn^2 - ...
 * @endcode
 */

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "elastic_dtn/errors.hpp"

namespace elastic_dtn {

using Complex = std::complex<double>;

/// Default absolute tolerance for approximate jet equality.
inline constexpr double kJetTolerance = 1e-12;

// ---------------------------------------------------------------------------
// MultiIndex
// ---------------------------------------------------------------------------

/// Exponent tuple over the 2n-1 formal variables, ordered graded
/// lexicographically (degree first, then larger leading exponents first).
class MultiIndex {
 public:
  MultiIndex() = default;

  explicit MultiIndex(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
      if (e < 0) throw InputError("negative exponent in multi-index");
      degree_ += e;
    }
  }

  static MultiIndex zero(std::size_t size) { return MultiIndex(std::vector<int>(size, 0)); }

  static MultiIndex unit(std::size_t size, std::size_t var) {
    std::vector<int> e(size, 0);
    e.at(var) = 1;
    return MultiIndex(std::move(e));
  }

  std::span<const int> exponents() const { return exponents_; }
  std::size_t size() const { return exponents_.size(); }
  int operator[](std::size_t i) const { return exponents_[i]; }
  int degree() const { return degree_; }

  /// J! = prod_i e_i!
  double factorial() const {
    double f = 1.0;
    for (int e : exponents_)
      for (int k = 2; k <= e; ++k) f *= k;
    return f;
  }

  MultiIndex operator+(const MultiIndex& other) const {
    if (other.size() != size()) throw InputError("multi-index length mismatch");
    std::vector<int> e(exponents_);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
    return MultiIndex(std::move(e));
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.exponents_ == b.exponents_;
  }

  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
    if (a.degree_ != b.degree_) return a.degree_ <=> b.degree_;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i)
      if (a.exponents_[i] != b.exponents_[i]) return b.exponents_[i] <=> a.exponents_[i];
    return a.size() <=> b.size();
  }

  /// Space-separated exponents, e.g. "0 1 2".
  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < exponents_.size(); ++i) {
      if (i) s += ' ';
      s += std::to_string(exponents_[i]);
    }
    return s;
  }

  static MultiIndex parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::vector<int> e;
    std::string tok;
    while (in >> tok) {
      std::size_t pos = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &pos);
      } catch (const std::exception&) {
        throw InputError("malformed exponent tuple \"" + std::string(text) + "\"");
      }
      if (pos != tok.size() || v < 0)
        throw InputError("malformed exponent tuple \"" + std::string(text) + "\"");
      e.push_back(v);
    }
    return MultiIndex(std::move(e));
  }

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// All multi-indices of the given length and total degree, in graded order.
inline std::vector<MultiIndex> multi_indices_of_degree(std::size_t length, int degree) {
  std::vector<MultiIndex> out;
  std::vector<int> e(length, 0);
  auto rec = [&](auto&& self, std::size_t var, int remaining) -> void {
    if (var + 1 == length) {
      e[var] = remaining;
      out.emplace_back(e);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      self(self, var + 1, remaining - k);
    }
    e[var] = 0;
  };
  if (length == 0) {
    if (degree == 0) out.emplace_back(std::vector<int>{});
    return out;
  }
  rec(rec, 0, degree);
  return out;
}

// ---------------------------------------------------------------------------
// JetContext
// ---------------------------------------------------------------------------

class JetContext {
 public:
  JetContext(int dimension, int truncation_order, std::vector<double> base_covector) {
    if (dimension < 2) throw InputError("dimension must be at least 2");
    if (truncation_order < 2) throw InputError("truncation order must be at least 2");
    if (base_covector.size() != static_cast<std::size_t>(dimension - 1))
      throw InputError("base covector must have n-1 components");
    double norm = 0.0;
    for (double v : base_covector) {
      if (!std::isfinite(v)) throw InputError("base covector must be finite");
      norm += v * v;
    }
    if (norm == 0.0) throw InputError("base covector must be nonzero");
    tables_ = build(dimension, truncation_order, std::move(base_covector));
  }

  int dimension() const { return tables_->n; }
  int truncation_order() const { return tables_->K; }
  int num_variables() const { return 2 * tables_->n - 1; }
  std::span<const double> base_covector() const { return tables_->xi0; }

  /// Variable index of x_{k+1} (0-based k).
  int x(int k) const { return k; }
  /// Variable index of the normal coordinate x_n.
  int normal() const { return tables_->n - 1; }
  /// Variable index of the covector offset along xi_{alpha+1}.
  int xi(int alpha) const { return tables_->n + alpha; }
  bool is_xi(int var) const { return var >= tables_->n; }

  std::size_t num_monomials() const { return tables_->monomials.size(); }
  const MultiIndex& monomial(std::uint32_t rank) const { return tables_->monomials[rank]; }
  int degree(std::uint32_t rank) const { return tables_->degrees[rank]; }

  /// First rank of total degree d; ranks are grouped by degree.
  std::uint32_t degree_begin(int d) const {
    if (d <= 0) return 0;
    if (d > tables_->K) return static_cast<std::uint32_t>(tables_->monomials.size());
    return tables_->degree_start[d];
  }

  std::optional<std::uint32_t> rank(const MultiIndex& m) const {
    if (m.size() != static_cast<std::size_t>(num_variables()) || m.degree() > tables_->K)
      return std::nullopt;
    auto it = tables_->rank_of.find(key(m.exponents()));
    if (it == tables_->rank_of.end()) return std::nullopt;
    return it->second;
  }

  /// Rank of the product monomial, or -1 when it exceeds the truncation.
  std::int32_t product_rank(std::uint32_t a, std::uint32_t b) const {
    const auto& t = *tables_;
    if (!t.product.empty()) return t.product[static_cast<std::size_t>(a) * t.monomials.size() + b];
    if (t.degrees[a] + t.degrees[b] > t.K) return -1;
    const auto& ea = t.monomials[a].exponents();
    const auto& eb = t.monomials[b].exponents();
    std::uint64_t k = 0, w = 1;
    for (std::size_t i = 0; i < ea.size(); ++i) {
      k += static_cast<std::uint64_t>(ea[i] + eb[i]) * w;
      w *= static_cast<std::uint64_t>(t.K + 1);
    }
    return static_cast<std::int32_t>(t.rank_of.at(k));
  }

  /// Rank of m - e_var, or -1 when the exponent of var is zero.
  std::int32_t lowered_rank(std::uint32_t a, int var) const {
    return tables_->lowered[static_cast<std::size_t>(a) * num_variables() + var];
  }

  friend bool operator==(const JetContext& a, const JetContext& b) {
    if (a.tables_ == b.tables_) return true;
    return a.tables_->n == b.tables_->n && a.tables_->K == b.tables_->K &&
           a.tables_->xi0 == b.tables_->xi0;
  }

 private:
  struct Tables {
    int n = 0;
    int K = 0;
    std::vector<double> xi0;
    std::vector<MultiIndex> monomials;
    std::vector<int> degrees;
    std::vector<std::uint32_t> degree_start;
    std::unordered_map<std::uint64_t, std::uint32_t> rank_of;
    std::vector<std::int32_t> product;
    std::vector<std::int32_t> lowered;
  };

  std::uint64_t key(std::span<const int> e) const {
    std::uint64_t k = 0, w = 1;
    for (int v : e) {
      k += static_cast<std::uint64_t>(v) * w;
      w *= static_cast<std::uint64_t>(tables_->K + 1);
    }
    return k;
  }

  static std::shared_ptr<const Tables> build(int n, int K, std::vector<double> xi0) {
    auto t = std::make_shared<Tables>();
    t->n = n;
    t->K = K;
    t->xi0 = std::move(xi0);
    const int vars = 2 * n - 1;
    if (std::log(static_cast<double>(K + 1)) * vars > std::log(1.8e19))
      throw InputError("truncation order too large for this dimension");
    t->degree_start.assign(K + 2, 0);
    for (int d = 0; d <= K; ++d) {
      t->degree_start[d] = static_cast<std::uint32_t>(t->monomials.size());
      for (auto& m : multi_indices_of_degree(vars, d)) {
        t->monomials.push_back(std::move(m));
        t->degrees.push_back(d);
      }
    }
    t->degree_start[K + 1] = static_cast<std::uint32_t>(t->monomials.size());
    const std::size_t N = t->monomials.size();
    auto keyf = [&](const std::vector<int>& e) {
      std::uint64_t k = 0, w = 1;
      for (int v : e) {
        k += static_cast<std::uint64_t>(v) * w;
        w *= static_cast<std::uint64_t>(K + 1);
      }
      return k;
    };
    t->rank_of.reserve(N * 2);
    for (std::size_t r = 0; r < N; ++r) {
      auto e = t->monomials[r].exponents();
      t->rank_of.emplace(keyf(std::vector<int>(e.begin(), e.end())), static_cast<std::uint32_t>(r));
    }
    t->lowered.assign(N * vars, -1);
    for (std::size_t r = 0; r < N; ++r) {
      auto es = t->monomials[r].exponents();
      std::vector<int> e(es.begin(), es.end());
      for (int v = 0; v < vars; ++v) {
        if (e[v] == 0) continue;
        --e[v];
        t->lowered[r * vars + v] = static_cast<std::int32_t>(t->rank_of.at(keyf(e)));
        ++e[v];
      }
    }
    constexpr std::size_t kMaxProductTable = 2048;
    if (N <= kMaxProductTable) {
      t->product.assign(N * N, -1);
      std::vector<int> e(vars);
      for (std::size_t a = 0; a < N; ++a) {
        const int da = t->degrees[a];
        const auto ea = t->monomials[a].exponents();
        const std::size_t limit = t->degree_start[K - da + 1];
        for (std::size_t b = 0; b < limit; ++b) {
          const auto eb = t->monomials[b].exponents();
          for (int v = 0; v < vars; ++v) e[v] = ea[v] + eb[v];
          t->product[a * N + b] = static_cast<std::int32_t>(t->rank_of.at(keyf(e)));
        }
      }
    }
    return t;
  }

  std::shared_ptr<const Tables> tables_;
};

// ---------------------------------------------------------------------------
// Jet
// ---------------------------------------------------------------------------

class Jet {
 public:
  using Term = std::pair<std::uint32_t, Complex>;

  /// Exact zero.
  explicit Jet(JetContext ctx) : ctx_(std::move(ctx)), accuracy_(ctx_.truncation_order()) {}

  static Jet constant(const JetContext& ctx, Complex c) {
    Jet j(ctx);
    if (c != Complex{}) j.terms_.emplace_back(0u, c);
    return j;
  }

  /// The formal variable itself (x_k, or the covector offset xh_alpha).
  static Jet variable(const JetContext& ctx, int var) {
    if (var < 0 || var >= ctx.num_variables()) throw InputError("variable index out of range");
    Jet j(ctx);
    j.terms_.emplace_back(*ctx.rank(MultiIndex::unit(ctx.num_variables(), var)), Complex{1.0});
    return j;
  }

  /// The full covector component xi_alpha = xi0_alpha + xh_alpha.
  static Jet covector(const JetContext& ctx, int alpha) {
    return variable(ctx, ctx.xi(alpha)) + Jet::constant(ctx, ctx.base_covector()[alpha]);
  }

  static Jet from_coefficients(const JetContext& ctx,
                               const std::vector<std::pair<MultiIndex, Complex>>& coeffs,
                               std::optional<int> accuracy = std::nullopt) {
    Jet j(ctx);
    j.accuracy_ = accuracy.value_or(ctx.truncation_order());
    if (j.accuracy_ < 0 || j.accuracy_ > ctx.truncation_order())
      throw InputError("jet accuracy out of range");
    std::vector<Complex> dense(ctx.num_monomials());
    for (const auto& [m, c] : coeffs) {
      if (m.size() != static_cast<std::size_t>(ctx.num_variables()))
        throw InputError("exponent tuple \"" + m.to_string() + "\" has wrong length");
      if (m.degree() > j.accuracy_)
        throw InputError("exponent tuple \"" + m.to_string() + "\" exceeds the jet accuracy");
      dense[*ctx.rank(m)] += c;
    }
    j.assign_dense(dense, ctx.degree_begin(j.accuracy_ + 1));
    return j;
  }

  const JetContext& context() const { return ctx_; }
  int accuracy() const { return accuracy_; }
  bool is_zero() const { return terms_.empty(); }
  std::span<const Term> terms() const { return terms_; }

  Complex coefficient(const MultiIndex& m) const {
    auto r = ctx_.rank(m);
    if (!r) return {};
    auto it = std::lower_bound(terms_.begin(), terms_.end(), *r,
                               [](const Term& t, std::uint32_t v) { return t.first < v; });
    return (it != terms_.end() && it->first == *r) ? it->second : Complex{};
  }

  Complex constant_term() const {
    return (!terms_.empty() && terms_.front().first == 0) ? terms_.front().second : Complex{};
  }

  std::vector<std::pair<MultiIndex, Complex>> coefficients() const {
    std::vector<std::pair<MultiIndex, Complex>> out;
    out.reserve(terms_.size());
    for (const auto& [r, c] : terms_) out.emplace_back(ctx_.monomial(r), c);
    return out;
  }

  /// Drop everything above the given degree and lower the accuracy to it.
  Jet truncated(int accuracy) const {
    if (accuracy >= accuracy_) return *this;
    if (accuracy < 0) throw AccuracyExhausted("cannot truncate a jet below degree 0");
    Jet j(ctx_);
    j.accuracy_ = accuracy;
    const auto end = ctx_.degree_begin(accuracy + 1);
    for (const auto& t : terms_)
      if (t.first < end) j.terms_.push_back(t);
    return j;
  }

  /// Reinterpret the stored polynomial as exact up to the given degree.
  /// Used when a jet defines a scene rather than approximating one.
  Jet with_accuracy(int accuracy) const {
    if (accuracy < accuracy_) return truncated(accuracy);
    if (accuracy > ctx_.truncation_order()) throw InputError("accuracy beyond truncation order");
    Jet j(*this);
    j.accuracy_ = accuracy;
    return j;
  }

  Jet operator-() const {
    Jet j(*this);
    for (auto& t : j.terms_) t.second = -t.second;
    return j;
  }

  Jet& operator+=(const Jet& o) { return *this = combine(*this, o, 1.0); }
  Jet& operator-=(const Jet& o) { return *this = combine(*this, o, -1.0); }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator*=(Complex s) {
    if (s == Complex{}) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.second *= s;
    return *this;
  }
  Jet& operator+=(Complex s) { return *this += Jet::constant(ctx_, s); }
  Jet& operator-=(Complex s) { return *this += Jet::constant(ctx_, -s); }

  friend Jet operator+(const Jet& a, const Jet& b) { return combine(a, b, 1.0); }
  friend Jet operator-(const Jet& a, const Jet& b) { return combine(a, b, -1.0); }
  friend Jet operator+(Jet a, Complex s) { return a += s; }
  friend Jet operator+(Complex s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, Complex s) { return a -= s; }
  friend Jet operator-(Complex s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, Complex s) { return a *= s; }
  friend Jet operator*(Complex s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, Complex s) { return a *= (1.0 / s); }
  friend Jet operator+(Jet a, double s) { return a += Complex{s}; }
  friend Jet operator+(double s, Jet a) { return a += Complex{s}; }
  friend Jet operator-(Jet a, double s) { return a -= Complex{s}; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += Complex{s}; }
  friend Jet operator*(Jet a, double s) { return a *= Complex{s}; }
  friend Jet operator*(double s, Jet a) { return a *= Complex{s}; }
  friend Jet operator/(Jet a, double s) { return a *= Complex{1.0 / s}; }

  /// Truncated product; accuracy is the minimum of the operands'.
  friend Jet operator*(const Jet& a, const Jet& b) {
    if (!(a.ctx_ == b.ctx_)) throw ContextMismatch();
    Jet out(a.ctx_);
    out.accuracy_ = std::min(a.accuracy_, b.accuracy_);
    if (a.terms_.empty() || b.terms_.empty()) return out;
    const auto& ctx = a.ctx_;
    const int acc = out.accuracy_;
    const std::uint32_t end = ctx.degree_begin(acc + 1);
    std::vector<Complex> dense(end);
    for (const auto& [ra, ca] : a.terms_) {
      const int da = ctx.degree(ra);
      if (da > acc) break;
      const std::uint32_t limit = ctx.degree_begin(acc - da + 1);
      for (const auto& [rb, cb] : b.terms_) {
        if (rb >= limit) break;
        dense[ctx.product_rank(ra, rb)] += ca * cb;
      }
    }
    out.assign_dense(dense, end);
    return out;
  }

 private:
  friend Jet partial(const Jet&, int);

  void assign_dense(const std::vector<Complex>& dense, std::uint32_t end) {
    terms_.clear();
    for (std::uint32_t r = 0; r < end && r < dense.size(); ++r)
      if (dense[r] != Complex{}) terms_.emplace_back(r, dense[r]);
  }

  static Jet combine(const Jet& a, const Jet& b, double sign) {
    if (!(a.ctx_ == b.ctx_)) throw ContextMismatch();
    Jet out(a.ctx_);
    out.accuracy_ = std::min(a.accuracy_, b.accuracy_);
    const std::uint32_t end = a.ctx_.degree_begin(out.accuracy_ + 1);
    out.terms_.reserve(a.terms_.size() + b.terms_.size());
    auto ia = a.terms_.begin(), ib = b.terms_.begin();
    while (ia != a.terms_.end() || ib != b.terms_.end()) {
      Term t;
      if (ib == b.terms_.end() || (ia != a.terms_.end() && ia->first < ib->first)) {
        t = *ia++;
      } else if (ia == a.terms_.end() || ib->first < ia->first) {
        t = {ib->first, sign * ib->second};
        ++ib;
      } else {
        t = {ia->first, ia->second + sign * ib->second};
        ++ia;
        ++ib;
      }
      if (t.first >= end) break;
      if (t.second != Complex{}) out.terms_.push_back(t);
    }
    return out;
  }

  JetContext ctx_;
  int accuracy_;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Free operations
// ---------------------------------------------------------------------------

inline Jet mul(const Jet& a, const Jet& b) { return a * b; }

/// Formal derivative with respect to one variable; costs one trusted degree.
inline Jet partial(const Jet& a, int var) {
  const auto& ctx = a.context();
  if (var < 0 || var >= ctx.num_variables()) throw InputError("variable index out of range");
  if (a.accuracy() < 1) throw AccuracyExhausted("derivative exceeds trusted degree");
  Jet out(ctx);
  out.accuracy_ = a.accuracy() - 1;
  for (const auto& [r, c] : a.terms()) {
    const auto low = ctx.lowered_rank(r, var);
    if (low < 0) continue;
    out.terms_.emplace_back(static_cast<std::uint32_t>(low), c * static_cast<double>(ctx.monomial(r)[var]));
  }
  std::sort(out.terms_.begin(), out.terms_.end(),
            [](const Jet::Term& x, const Jet::Term& y) { return x.first < y.first; });
  return out;
}

/// Repeated derivative d^J over the listed variables (J indexed by position).
inline Jet partial(const Jet& a, std::span<const int> vars, const MultiIndex& J) {
  Jet out = a;
  for (std::size_t i = 0; i < J.size(); ++i)
    for (int k = 0; k < J[i]; ++k) out = partial(out, vars[i]);
  return out;
}

namespace detail {
/// Evaluates sum_k coeffs[k] h^k by Horner, h having zero constant term.
inline Jet nilpotent_series(const Jet& h, const std::vector<Complex>& coeffs) {
  Jet r = Jet::constant(h.context(), coeffs.back());
  for (std::size_t k = coeffs.size() - 1; k-- > 0;) r = h * r + coeffs[k];
  return r;
}
}  // namespace detail

/// 1/a via the geometric series of the nilpotent part.
inline Jet reciprocal(const Jet& a) {
  const Complex c0 = a.constant_term();
  if (std::abs(c0) <= 1e-12) throw NotInvertible("jet not invertible");
  const Jet h = a / c0 - 1.0;
  std::vector<Complex> coeffs(static_cast<std::size_t>(a.accuracy()) + 1);
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] = (k % 2 == 0) ? 1.0 : -1.0;
  return detail::nilpotent_series(h, coeffs) / c0;
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(Complex s, const Jet& b) { return reciprocal(b) * s; }
inline Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

/// Principal square root; the constant term must be real and positive.
inline Jet sqrt(const Jet& a) {
  const Complex c0 = a.constant_term();
  if (c0.real() <= 1e-12 || std::abs(c0.imag()) > 1e-12 * std::max(1.0, c0.real()))
    throw NotInvertible("square root needs a real positive constant term");
  const Jet h = a / c0 - 1.0;
  std::vector<Complex> coeffs(static_cast<std::size_t>(a.accuracy()) + 1);
  double binom = 1.0;  // binom(1/2, k)
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    coeffs[k] = binom;
    binom *= (0.5 - static_cast<double>(k)) / static_cast<double>(k + 1);
  }
  return detail::nilpotent_series(h, coeffs) * std::sqrt(c0.real());
}

inline Jet exp(const Jet& a) {
  const Complex c0 = a.constant_term();
  const Jet h = a - c0;
  std::vector<Complex> coeffs(static_cast<std::size_t>(a.accuracy()) + 1);
  double f = 1.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (k > 0) f /= static_cast<double>(k);
    coeffs[k] = f;
  }
  return detail::nilpotent_series(h, coeffs) * std::exp(c0);
}

inline Jet conj(const Jet& a) {
  std::vector<std::pair<MultiIndex, Complex>> c = a.coefficients();
  for (auto& t : c) t.second = std::conj(t.second);
  return Jet::from_coefficients(a.context(), c, a.accuracy());
}

/// Keeps only the terms passing the predicate on their multi-index.
template <typename Pred>
Jet filter_terms(const Jet& a, Pred&& keep) {
  std::vector<std::pair<MultiIndex, Complex>> c;
  for (auto& t : a.coefficients())
    if (keep(t.first)) c.push_back(std::move(t));
  return Jet::from_coefficients(a.context(), c, a.accuracy());
}

/// Restriction to the boundary x_n = 0.
inline Jet restrict_to_boundary(const Jet& a) {
  const int xn = a.context().normal();
  return filter_terms(a, [xn](const MultiIndex& m) { return m[xn] == 0; });
}

/// Real part of every coefficient.
inline Jet real_part(const Jet& a) {
  std::vector<std::pair<MultiIndex, Complex>> c = a.coefficients();
  for (auto& t : c) t.second = t.second.real();
  return Jet::from_coefficients(a.context(), c, a.accuracy());
}

inline double max_abs(const Jet& a) {
  double m = 0.0;
  for (const auto& t : a.terms()) m = std::max(m, std::abs(t.second));
  return m;
}

inline double max_imag(const Jet& a) {
  double m = 0.0;
  for (const auto& t : a.terms()) m = std::max(m, std::abs(t.second.imag()));
  return m;
}

/// Coefficientwise comparison over the degrees trusted by both operands.
inline bool approx_equal(const Jet& a, const Jet& b, double tol = kJetTolerance) {
  return max_abs(a - b) <= tol;
}

/// Evaluates the stored polynomial at a point given in offset variables.
inline Complex evaluate(const Jet& a, std::span<const double> point) {
  const auto& ctx = a.context();
  if (point.size() != static_cast<std::size_t>(ctx.num_variables()))
    throw InputError("evaluation point has wrong length");
  Complex s{};
  for (const auto& [r, c] : a.terms()) {
    const auto& m = ctx.monomial(r);
    double p = 1.0;
    for (std::size_t v = 0; v < m.size(); ++v)
      for (int k = 0; k < m[v]; ++k) p *= point[v];
    s += c * p;
  }
  return s;
}

// ---------------------------------------------------------------------------
// JetMatrix
// ---------------------------------------------------------------------------

class JetMatrix {
 public:
  JetMatrix(const JetContext& ctx, std::size_t rows, std::size_t cols)
      : ctx_(ctx), rows_(rows), cols_(cols), data_(rows * cols, Jet(ctx)) {}

  static JetMatrix identity(const JetContext& ctx, std::size_t n) {
    JetMatrix m(ctx, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Jet::constant(ctx, 1.0);
    return m;
  }

  static JetMatrix diagonal(const std::vector<Jet>& d) {
    if (d.empty()) throw InputError("empty diagonal");
    JetMatrix m(d.front().context(), d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  const JetContext& context() const { return ctx_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Jet& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Jet& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  int accuracy() const {
    int a = ctx_.truncation_order();
    for (const auto& e : data_) a = std::min(a, e.accuracy());
    return a;
  }

  JetMatrix transpose() const {
    JetMatrix t(ctx_, cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Conjugate transpose (coefficientwise conjugation; the variables are real).
  JetMatrix adjoint() const {
    JetMatrix t(ctx_, cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = conj((*this)(i, j));
    return t;
  }

  template <typename F>
  JetMatrix map(F&& f) const {
    JetMatrix m(ctx_, rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k) m.data_[k] = f(data_[k]);
    return m;
  }

  JetMatrix& operator+=(const JetMatrix& o) {
    check_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  JetMatrix& operator-=(const JetMatrix& o) {
    check_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  JetMatrix& operator*=(const Jet& s) {
    for (auto& e : data_) e *= s;
    return *this;
  }
  JetMatrix& operator*=(Complex s) {
    for (auto& e : data_) e *= s;
    return *this;
  }

  friend JetMatrix operator+(JetMatrix a, const JetMatrix& b) { return a += b; }
  friend JetMatrix operator-(JetMatrix a, const JetMatrix& b) { return a -= b; }
  friend JetMatrix operator*(JetMatrix a, const Jet& s) { return a *= s; }
  friend JetMatrix operator*(const Jet& s, JetMatrix a) { return a *= s; }
  friend JetMatrix operator*(JetMatrix a, Complex s) { return a *= s; }
  friend JetMatrix operator*(Complex s, JetMatrix a) { return a *= s; }
  friend JetMatrix operator*(JetMatrix a, double s) { return a *= Complex{s}; }
  friend JetMatrix operator*(double s, JetMatrix a) { return a *= Complex{s}; }
  JetMatrix operator-() const { return map([](const Jet& e) { return -e; }); }

  friend JetMatrix operator*(const JetMatrix& a, const JetMatrix& b) {
    if (a.cols_ != b.rows_) throw InputError("matrix shape mismatch");
    if (!(a.ctx_ == b.ctx_)) throw ContextMismatch();
    JetMatrix c(a.ctx_, a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < b.cols_; ++j) {
        Jet s(a.ctx_);
        for (std::size_t k = 0; k < a.cols_; ++k) s += a(i, k) * b(k, j);
        c(i, j) = std::move(s);
      }
    return c;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& e : data_) m = std::max(m, elastic_dtn::max_abs(e));
    return m;
  }

 private:
  void check_shape(const JetMatrix& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw InputError("matrix shape mismatch");
    if (!(o.ctx_ == ctx_)) throw ContextMismatch();
  }

  JetContext ctx_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Jet> data_;
};

inline JetMatrix partial(const JetMatrix& m, int var) {
  return m.map([var](const Jet& e) { return partial(e, var); });
}

inline JetMatrix restrict_to_boundary(const JetMatrix& m) {
  return m.map([](const Jet& e) { return restrict_to_boundary(e); });
}

inline JetMatrix truncated(const JetMatrix& m, int accuracy) {
  return m.map([accuracy](const Jet& e) { return e.truncated(accuracy); });
}

namespace detail {

using ConstMatrix = std::vector<std::vector<Complex>>;

inline double norm1(const ConstMatrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i][j]);
    best = std::max(best, s);
  }
  return best;
}

/// Gauss-Jordan with partial pivoting; empty result when singular.
inline std::optional<ConstMatrix> invert_constant(ConstMatrix a) {
  const std::size_t n = a.size();
  const double scale = std::max(norm1(a), 1e-300);
  ConstMatrix inv(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) <= 1e-14 * scale) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const Complex d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == Complex{}) continue;
      const Complex f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

}  // namespace detail

struct MatrixInverse {
  JetMatrix value;
  double condition_number;
  bool ill_conditioned() const { return condition_number > 1e8; }
};

/// Inverse of a square jet matrix via the Neumann series around its
/// constant-term matrix. Throws NotInvertible for a singular constant term.
inline MatrixInverse invert(const JetMatrix& m) {
  if (m.rows() != m.cols()) throw InputError("matrix inverse needs a square matrix");
  const std::size_t n = m.rows();
  const auto& ctx = m.context();
  detail::ConstMatrix c0(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c0[i][j] = m(i, j).constant_term();
  auto inv0 = detail::invert_constant(c0);
  if (!inv0) throw NotInvertible("matrix has a singular constant term");
  const double cond = detail::norm1(c0) * detail::norm1(*inv0);
  JetMatrix m0inv(ctx, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m0inv(i, j) = Jet::constant(ctx, (*inv0)[i][j]);
  // M = M0 (I + N), N = M0^{-1} M - I nilpotent; M^{-1} = sum_k (-N)^k M0^{-1}.
  const JetMatrix N = m0inv * m - JetMatrix::identity(ctx, n);
  const JetMatrix minusN = -N;
  JetMatrix r = JetMatrix::identity(ctx, n);
  for (int k = 0; k < m.accuracy(); ++k) r = JetMatrix::identity(ctx, n) + minusN * r;
  JetMatrix out = r * m0inv;
  out = truncated(out, m.accuracy());
  return {std::move(out), cond};
}

inline JetMatrix mat_inverse(const JetMatrix& m) { return invert(m).value; }

}  // namespace elastic_dtn
