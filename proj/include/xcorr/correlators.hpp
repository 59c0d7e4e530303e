#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xcorr/common.hpp"

namespace xcorr {

// Even piecewise-linear nonlinearity built from symmetric hinge pairs,
//
//   h(x) = 1/2 * sum_l w_l (|x - alpha_l| + |x + alpha_l|),
//
// with convex weights w_l and nonnegative offsets alpha_l. A correlator is
// formed from any such h as f(x, y) = h(x + y) - h(x - y).
struct PwlMixture {
  std::vector<double> weights;
  std::vector<double> offsets;

  bool operator==(const PwlMixture&) const = default;
};

inline void validate(const PwlMixture& m) {
  if (m.weights.empty())
    throw std::invalid_argument("PwlMixture: at least one component required");
  if (m.weights.size() != m.offsets.size())
    throw std::invalid_argument("PwlMixture: weights/offsets length mismatch");
  double total = 0.0;
  for (double w : m.weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("PwlMixture: weights must be nonnegative");
    total += w;
  }
  if (!(std::abs(total - 1.0) <= 1e-12))
    throw std::invalid_argument("PwlMixture: weights must sum to 1");
  for (double a : m.offsets)
    if (!(a >= 0.0))
      throw std::invalid_argument("PwlMixture: offsets must be nonnegative");
}

// Callers are expected to have validated m; this is the hot path.
inline double pwl_h(double x, const PwlMixture& m) {
  double acc = 0.0;
  for (std::size_t l = 0; l < m.weights.size(); ++l)
    acc += m.weights[l] *
           (std::abs(x - m.offsets[l]) + std::abs(x + m.offsets[l]));
  return 0.5 * acc;
}

// Quadratic near zero, linear in the tails; C1 at |x| = delta.
inline double huber_h(double x, double delta) {
  if (!(delta > 0.0))
    throw std::invalid_argument("huber_h: delta must be positive");
  const double ax = std::abs(x);
  return ax < delta ? 0.5 * ax * ax / delta : ax - 0.5 * delta;
}

// (1/a) log(exp(a x) + exp(-a x)), evaluated in overflow-safe form.
// Bounds: |x| <= lse_h(x, a) <= |x| + log(2)/a.
inline double lse_h(double x, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("lse_h: a must be positive");
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * a * ax)) / a;
}

// The unique z solving (x - z)_+ + (-x - z)_+ = gamma. Closed form:
// |x| - gamma above the kink at |x| = gamma/2, constant -gamma/2 below.
// Differs from pwl_h with offset gamma/2 by the constant -gamma, which
// cancels in any h(x+y) - h(x-y) correlator.
inline double mp_h(double x, double gamma) {
  if (!(gamma >= 0.0))
    throw std::invalid_argument("mp_h: gamma must be nonnegative");
  const double ax = std::abs(x);
  return ax >= 0.5 * gamma ? ax - gamma : -0.5 * gamma;
}

enum class CorrelatorKind { empirical, linear_rectifier, mp, huber, lse, mixture };

// Value-semantic description of one correlator; the factories enforce the
// parameter constraints so scoring loops can skip per-call validation.
class CorrelatorSpec {
 public:
  static CorrelatorSpec empirical() { return {CorrelatorKind::empirical, 0.0}; }

  static CorrelatorSpec linear_rectifier() {
    return {CorrelatorKind::linear_rectifier, 0.0};
  }

  static CorrelatorSpec mp(double gamma) {
    if (!(gamma >= 0.0))
      throw std::invalid_argument("CorrelatorSpec: mp gamma must be nonnegative");
    return {CorrelatorKind::mp, gamma};
  }

  static CorrelatorSpec huber(double delta) {
    if (!(delta > 0.0))
      throw std::invalid_argument("CorrelatorSpec: huber delta must be positive");
    return {CorrelatorKind::huber, delta};
  }

  static CorrelatorSpec lse(double a) {
    if (!(a > 0.0))
      throw std::invalid_argument("CorrelatorSpec: lse a must be positive");
    return {CorrelatorKind::lse, a};
  }

  static CorrelatorSpec mixture(PwlMixture m) {
    validate(m);
    CorrelatorSpec spec{CorrelatorKind::mixture, 0.0};
    spec.mixture_ = std::move(m);
    return spec;
  }

  CorrelatorKind kind() const noexcept { return kind_; }

  // gamma, delta or a, depending on kind.
  double param() const noexcept { return param_; }

  const PwlMixture& mixture_params() const {
    if (kind_ != CorrelatorKind::mixture)
      throw std::logic_error("CorrelatorSpec: not a mixture");
    return mixture_;
  }

  bool operator==(const CorrelatorSpec&) const = default;

  std::string to_string() const;
  static CorrelatorSpec parse(std::string_view text);

 private:
  CorrelatorSpec(CorrelatorKind kind, double param)
      : kind_(kind), param_(param) {}

  CorrelatorKind kind_;
  double param_;
  PwlMixture mixture_;  // only populated for mixture kind
};

// Per-pair score f(x, y). Empirical is the plain product; all others are
// h(x+y) - h(x-y) for their h. Symmetric in (x, y), and flips sign when
// either argument is negated, because every h here is even.
inline double pair_score(double x, double y, const CorrelatorSpec& spec) {
  switch (spec.kind()) {
    case CorrelatorKind::empirical:
      return x * y;
    case CorrelatorKind::linear_rectifier:
      return std::abs(x + y) - std::abs(x - y);
    case CorrelatorKind::mp:
      return mp_h(x + y, spec.param()) - mp_h(x - y, spec.param());
    case CorrelatorKind::huber:
      return huber_h(x + y, spec.param()) - huber_h(x - y, spec.param());
    case CorrelatorKind::lse:
      return lse_h(x + y, spec.param()) - lse_h(x - y, spec.param());
    case CorrelatorKind::mixture:
      return pwl_h(x + y, spec.mixture_params()) -
             pwl_h(x - y, spec.mixture_params());
  }
  throw std::logic_error("pair_score: unreachable");
}

namespace detail {

// Sum of pair scores with the kind dispatched once, outside the loop.
inline double sum_pair_scores(std::span<const double> xs,
                              std::span<const double> ys,
                              const CorrelatorSpec& spec) {
  const std::size_t n = xs.size();
  double acc = 0.0;
  switch (spec.kind()) {
    case CorrelatorKind::empirical:
      for (std::size_t i = 0; i < n; ++i) acc += xs[i] * ys[i];
      break;
    case CorrelatorKind::linear_rectifier:
      for (std::size_t i = 0; i < n; ++i)
        acc += std::abs(xs[i] + ys[i]) - std::abs(xs[i] - ys[i]);
      break;
    case CorrelatorKind::mp: {
      const double gamma = spec.param();
      for (std::size_t i = 0; i < n; ++i)
        acc += mp_h(xs[i] + ys[i], gamma) - mp_h(xs[i] - ys[i], gamma);
      break;
    }
    case CorrelatorKind::huber: {
      const double delta = spec.param();
      for (std::size_t i = 0; i < n; ++i)
        acc += huber_h(xs[i] + ys[i], delta) - huber_h(xs[i] - ys[i], delta);
      break;
    }
    case CorrelatorKind::lse: {
      const double a = spec.param();
      for (std::size_t i = 0; i < n; ++i)
        acc += lse_h(xs[i] + ys[i], a) - lse_h(xs[i] - ys[i], a);
      break;
    }
    case CorrelatorKind::mixture: {
      const PwlMixture& m = spec.mixture_params();
      for (std::size_t i = 0; i < n; ++i)
        acc += pwl_h(xs[i] + ys[i], m) - pwl_h(xs[i] - ys[i], m);
      break;
    }
  }
  return acc;
}

}  // namespace detail

// Mean pair score over a batch; the raw observable that calibration maps
// back to a correlation estimate.
inline double batch_score(std::span<const double> xs,
                          std::span<const double> ys,
                          const CorrelatorSpec& spec) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("batch_score: length mismatch");
  if (xs.empty()) throw std::invalid_argument("batch_score: empty batch");
  return detail::sum_pair_scores(xs, ys, spec) / static_cast<double>(xs.size());
}

// ---- descriptor strings ----------------------------------------------
//
// Grammar: "empirical" | "l1" | "mp:gamma=G" | "huber:delta=D" | "lse:a=A"
//        | "mix:w=W1,W2,...;alpha=A1,A2,...".
// Numbers round-trip exactly (shortest form that parses back bit-equal).

namespace detail {

inline std::string format_number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw parse_error(std::string(what) + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    if (pos == std::string_view::npos) {
      out.push_back(s);
      return out;
    }
    out.push_back(s.substr(0, pos));
    s.remove_prefix(pos + 1);
  }
}

inline std::vector<double> parse_number_list(std::string_view s, const char* what) {
  std::vector<double> out;
  for (const auto part : split(s, ',')) out.push_back(parse_number(part, what));
  return out;
}

// "key=value" with the key fixed by the caller.
inline std::string_view expect_kv(std::string_view s, std::string_view key,
                                  const char* what) {
  const auto pos = s.find('=');
  if (pos == std::string_view::npos || s.substr(0, pos) != key)
    throw parse_error(std::string(what) + ": expected '" + std::string(key) +
                      "=...', got '" + std::string(s) + "'");
  return s.substr(pos + 1);
}

}  // namespace detail

inline std::string CorrelatorSpec::to_string() const {
  switch (kind_) {
    case CorrelatorKind::empirical:
      return "empirical";
    case CorrelatorKind::linear_rectifier:
      return "l1";
    case CorrelatorKind::mp:
      return "mp:gamma=" + detail::format_number(param_);
    case CorrelatorKind::huber:
      return "huber:delta=" + detail::format_number(param_);
    case CorrelatorKind::lse:
      return "lse:a=" + detail::format_number(param_);
    case CorrelatorKind::mixture: {
      std::string out = "mix:w=";
      for (std::size_t l = 0; l < mixture_.weights.size(); ++l) {
        if (l) out += ',';
        out += detail::format_number(mixture_.weights[l]);
      }
      out += ";alpha=";
      for (std::size_t l = 0; l < mixture_.offsets.size(); ++l) {
        if (l) out += ',';
        out += detail::format_number(mixture_.offsets[l]);
      }
      return out;
    }
  }
  throw std::logic_error("CorrelatorSpec::to_string: unreachable");
}

inline CorrelatorSpec CorrelatorSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head =
      colon == std::string_view::npos ? text : text.substr(0, colon);
  const std::string_view rest =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  const auto require_params = [&](const char* name) {
    if (colon == std::string_view::npos || rest.empty())
      throw parse_error(std::string("correlator spec: '") + name +
                        "' needs parameters");
  };

  try {
    if (head == "empirical" || head == "l1") {
      if (colon != std::string_view::npos)
        throw parse_error("correlator spec: '" + std::string(head) +
                          "' takes no parameters");
      return head == "empirical" ? empirical() : linear_rectifier();
    }
    if (head == "mp") {
      require_params("mp");
      return mp(detail::parse_number(detail::expect_kv(rest, "gamma", "mp"), "mp"));
    }
    if (head == "huber") {
      require_params("huber");
      return huber(
          detail::parse_number(detail::expect_kv(rest, "delta", "huber"), "huber"));
    }
    if (head == "lse") {
      require_params("lse");
      return lse(detail::parse_number(detail::expect_kv(rest, "a", "lse"), "lse"));
    }
    if (head == "mix") {
      require_params("mix");
      const auto parts = detail::split(rest, ';');
      if (parts.size() != 2)
        throw parse_error("correlator spec: mix needs 'w=...;alpha=...'");
      PwlMixture m;
      m.weights = detail::parse_number_list(detail::expect_kv(parts[0], "w", "mix"),
                                            "mix weights");
      m.offsets = detail::parse_number_list(
          detail::expect_kv(parts[1], "alpha", "mix"), "mix offsets");
      return mixture(std::move(m));
    }
  } catch (const std::invalid_argument& e) {
    // factory rejected the parameter values; report as a parse failure
    throw parse_error(std::string("correlator spec: ") + e.what());
  }
  throw parse_error("correlator spec: unknown kind '" + std::string(text) + "'");
}

}  // namespace xcorr
