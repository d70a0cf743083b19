#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Var is a value plus an index into the active Tape. Every elementary
// operation on Vars appends one node holding the indices of its (at most two)
// operands and the local partial derivatives. Backward sweeps the nodes in
// reverse order. Index -1 marks a constant that is never recorded.
//
// The active tape is thread-local and installed with TapeScope, so concurrent
// training runs each own an independent tape.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace modfx::ad {

class Tape {
public:
  std::int32_t push(std::int32_t a, double da, std::int32_t b, double db)
  {
    nodes_.push_back({da, db, a, b});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t leaf() { return push(-1, 0.0, -1, 0.0); }

  std::size_t size() const { return nodes_.size(); }

  void clear()
  {
    nodes_.clear();
    first_nonfinite_.clear();
  }

  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Adjoints of every node with respect to `output`.
  std::vector<double> backward(std::int32_t output) const;

  void note_nonfinite(const char* op)
  {
    if (first_nonfinite_.empty()) {
      first_nonfinite_ = op;
    }
  }
  const std::string& first_nonfinite() const { return first_nonfinite_; }

private:
  struct Node {
    double da;
    double db;
    std::int32_t a;
    std::int32_t b;
  };
  std::vector<Node> nodes_;
  std::string first_nonfinite_;
};

namespace detail {
inline thread_local Tape* active = nullptr;
}

inline Tape* active_tape() { return detail::active; }

class TapeScope {
public:
  explicit TapeScope(Tape& tape) : previous_(detail::active) { detail::active = &tape; }
  ~TapeScope() { detail::active = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

private:
  Tape* previous_;
};

class Var {
public:
  Var() = default;
  Var(double v) : value_(v) {} // NOLINT: constants convert implicitly

  // New independent variable on the active tape.
  static Var input(double v)
  {
    Var r(v);
    r.index_ = active_tape()->leaf();
    return r;
  }

  double value() const { return value_; }
  std::int32_t index() const { return index_; }
  bool is_constant() const { return index_ < 0; }

  // Records a node for an op with operands x (partial dx) and y (partial dy).
  static Var make(double v, const Var& x, double dx, const Var& y, double dy, const char* op)
  {
    Var r(v);
    if (!std::isfinite(v)) [[unlikely]] {
      active_tape()->note_nonfinite(op);
    }
    const bool cx = x.is_constant();
    const bool cy = y.is_constant();
    if (cx && cy) {
      return r;
    }
    Tape* t = active_tape();
    if (cx) {
      r.index_ = t->push(y.index_, dy, -1, 0.0);
    } else if (cy) {
      r.index_ = t->push(x.index_, dx, -1, 0.0);
    } else {
      r.index_ = t->push(x.index_, dx, y.index_, dy);
    }
    return r;
  }

  static Var make(double v, const Var& x, double dx, const char* op)
  {
    Var r(v);
    if (!std::isfinite(v)) [[unlikely]] {
      active_tape()->note_nonfinite(op);
    }
    if (x.is_constant()) {
      return r;
    }
    r.index_ = active_tape()->push(x.index_, dx, -1, 0.0);
    return r;
  }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

private:
  double value_ = 0.0;
  std::int32_t index_ = -1;
};

inline Var operator+(const Var& x, const Var& y)
{
  return Var::make(x.value() + y.value(), x, 1.0, y, 1.0, "add");
}
inline Var operator-(const Var& x, const Var& y)
{
  return Var::make(x.value() - y.value(), x, 1.0, y, -1.0, "sub");
}
inline Var operator-(const Var& x) { return Var::make(-x.value(), x, -1.0, "neg"); }
inline Var operator*(const Var& x, const Var& y)
{
  return Var::make(x.value() * y.value(), x, y.value(), y, x.value(), "mul");
}
inline Var operator/(const Var& x, const Var& y)
{
  const double inv = 1.0 / y.value();
  const double q = x.value() * inv;
  return Var::make(q, x, inv, y, -q * inv, "div");
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline Var exp(const Var& x)
{
  const double e = std::exp(x.value());
  return Var::make(e, x, e, "exp");
}
inline Var log(const Var& x)
{
  return Var::make(std::log(x.value()), x, 1.0 / x.value(), "log");
}
inline Var log1p(const Var& x)
{
  return Var::make(std::log1p(x.value()), x, 1.0 / (1.0 + x.value()), "log1p");
}
inline Var sin(const Var& x)
{
  return Var::make(std::sin(x.value()), x, std::cos(x.value()), "sin");
}
inline Var cos(const Var& x)
{
  return Var::make(std::cos(x.value()), x, -std::sin(x.value()), "cos");
}
inline Var tan(const Var& x)
{
  const double t = std::tan(x.value());
  return Var::make(t, x, 1.0 + t * t, "tan");
}
inline Var tanh(const Var& x)
{
  const double t = std::tanh(x.value());
  return Var::make(t, x, 1.0 - t * t, "tanh");
}
inline Var sigmoid(const Var& x)
{
  const double s = 1.0 / (1.0 + std::exp(-x.value()));
  return Var::make(s, x, s * (1.0 - s), "sigmoid");
}
inline Var powi(const Var& x, int n)
{
  const double v = std::pow(x.value(), n);
  const double d = n == 0 ? 0.0 : n * std::pow(x.value(), n - 1);
  return Var::make(v, x, d, "powi");
}

// Same names for plain doubles so templated model code compiles for both.
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double powi(double x, int n) { return std::pow(x, n); }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

// Creates tape inputs for every value, in order.
std::vector<Var> make_inputs(std::span<const double> values);

// Adjoints of `inputs` read from a completed backward sweep.
std::vector<double> gather(std::span<const Var> inputs, std::span<const double> adjoints);

} // namespace modfx::ad
