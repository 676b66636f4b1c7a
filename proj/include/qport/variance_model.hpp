#pragma once

// Distributions of the per-asset return variances s_i and their inverse
// moments <s^-1>, <s^-2>, which are the only features of the variance
// distribution that enter the typical-case predictions.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "qport/core.hpp"
#include "qport/io.hpp"
#include "qport/rng.hpp"

namespace qport {

namespace variance {

/// Every asset has variance s.
struct Identical {
  double s = 1.0;
};

/// s_i = 1 with probability r, s_tilde otherwise (i.i.d. Bernoulli per asset).
struct TwoPoint {
  double r = 1.0;
  double s_tilde = 1.0;
};

/// s_i uniform on [lower, upper].
struct Uniform {
  double lower = 1.0;
  double upper = 2.0;
};

/// A fixed list of variances, used verbatim.
struct Explicit {
  std::vector<double> values;
};

}  // namespace variance

using VarianceSpec =
    std::variant<variance::Identical, variance::TwoPoint, variance::Uniform, variance::Explicit>;

struct InverseMoments {
  double m1 = 1.0;  ///< <s^-1>
  double m2 = 1.0;  ///< <s^-2>
};

inline void validate(const VarianceSpec& spec) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, variance::Identical>) {
          if (!positive(v.s)) throw DomainError("identical variance requires s > 0");
        } else if constexpr (std::is_same_v<T, variance::TwoPoint>) {
          if (!(v.r >= 0.0 && v.r <= 1.0)) throw DomainError("two-point variance requires r in [0,1]");
          if (!positive(v.s_tilde)) throw DomainError("two-point variance requires s_tilde > 0");
        } else if constexpr (std::is_same_v<T, variance::Uniform>) {
          if (!positive(v.lower) || !std::isfinite(v.upper) || !(v.upper > v.lower))
            throw DomainError("uniform variance requires upper > lower > 0");
        } else {
          if (v.values.empty()) throw DomainError("explicit variances: empty list");
          for (double s : v.values)
            if (!positive(s)) throw DomainError("explicit variances must be finite and positive");
        }
      },
      spec);
}

/// Closed-form inverse moments; empirical means for Explicit.
inline InverseMoments analytic_moments(const VarianceSpec& spec) {
  validate(spec);
  return std::visit(
      [](const auto& v) -> InverseMoments {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, variance::Identical>) {
          return {1.0 / v.s, 1.0 / (v.s * v.s)};
        } else if constexpr (std::is_same_v<T, variance::TwoPoint>) {
          const double inv = 1.0 / v.s_tilde;
          return {v.r + (1.0 - v.r) * inv, v.r + (1.0 - v.r) * inv * inv};
        } else if constexpr (std::is_same_v<T, variance::Uniform>) {
          return {std::log(v.upper / v.lower) / (v.upper - v.lower), 1.0 / (v.upper * v.lower)};
        } else {
          double a = 0.0, b = 0.0;
          for (double s : v.values) {
            a += 1.0 / s;
            b += 1.0 / (s * s);
          }
          const double n = static_cast<double>(v.values.size());
          return {a / n, b / n};
        }
      },
      spec);
}

/// Empirical inverse moments of a realized variance vector.
inline InverseMoments empirical_moments(const Vector& s) {
  const Vector inv = s.cwiseInverse();
  return {inv.mean(), inv.squaredNorm() / static_cast<double>(s.size())};
}

/// Variance of asset `index` drawn from stream (seed, index).
inline double sample_variance_at(const VarianceSpec& spec, std::uint64_t seed, std::uint64_t index) {
  const rng::Stream stream(rng::derive_key({seed, static_cast<std::uint64_t>(rng::Domain::Variance), index}));
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, variance::Identical>) {
          return v.s;
        } else if constexpr (std::is_same_v<T, variance::TwoPoint>) {
          return stream.uniform(0) < v.r ? 1.0 : v.s_tilde;
        } else if constexpr (std::is_same_v<T, variance::Uniform>) {
          return v.lower + (v.upper - v.lower) * stream.uniform(0);
        } else {
          return v.values.at(index);
        }
      },
      spec);
}

inline Vector sample_variances(const VarianceSpec& spec, std::size_t n, std::uint64_t seed) {
  validate(spec);
  if (n < 1) throw DomainError("sample_variances: n must be >= 1");
  if (const auto* e = std::get_if<variance::Explicit>(&spec); e && e->values.size() != n)
    throw DimensionMismatch("explicit variances: have " + std::to_string(e->values.size()) +
                            " values, need " + std::to_string(n));
  Vector s(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) s[static_cast<Eigen::Index>(i)] = sample_variance_at(spec, seed, i);
  return s;
}

// ---------------------------------------------------------------------------
// Presets and text form.

/// Case 1 (two variance levels) and Case 2 (uniform variances) settings.
inline const std::map<std::string, VarianceSpec, std::less<>>& presets() {
  static const std::map<std::string, VarianceSpec, std::less<>> table = {
      {"1A", variance::TwoPoint{21.0 / 25.0, 2.0 / 27.0}},
      {"1B", variance::TwoPoint{14.0 / 23.0, 3.0 / 26.0}},
      {"1C", variance::TwoPoint{5.0 / 21.0, 4.0 / 25.0}},
      {"2A'", variance::Uniform{1.0, 2.0}},
      {"2B'", variance::Uniform{1.0, 3.0}},
      {"2C'", variance::Uniform{1.0, 4.0}},
  };
  return table;
}

/// Canonical preset name; "2A" is accepted for "2A'" since the quote is awkward in shells.
inline std::string canonical_preset(std::string_view name) {
  std::string key(name);
  if (!presets().contains(key) && presets().contains(key + "'")) key += "'";
  if (!presets().contains(key))
    throw ParseError("unknown preset '" + std::string(name) + "' (expected 1A|1B|1C|2A'|2B'|2C')");
  return key;
}

inline const VarianceSpec& preset(std::string_view name) { return presets().at(canonical_preset(name)); }

/// Text form: identical:s=1 | two-point:r=0.84,s=0.074 | uniform:l=1,u=2 |
/// explicit:file=path | explicit:values=1;2;3
inline std::string format_variance_spec(const VarianceSpec& spec) {
  using io::format_double;
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, variance::Identical>) {
          return "identical:s=" + format_double(v.s);
        } else if constexpr (std::is_same_v<T, variance::TwoPoint>) {
          return "two-point:r=" + format_double(v.r) + ",s=" + format_double(v.s_tilde);
        } else if constexpr (std::is_same_v<T, variance::Uniform>) {
          return "uniform:l=" + format_double(v.lower) + ",u=" + format_double(v.upper);
        } else {
          std::string out = "explicit:values=";
          for (std::size_t i = 0; i < v.values.size(); ++i) {
            if (i) out += ';';
            out += format_double(v.values[i]);
          }
          return out;
        }
      },
      spec);
}

inline VarianceSpec parse_variance_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string kind(text.substr(0, colon));
  std::map<std::string, std::string, std::less<>> kv;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("variance spec '" + std::string(text) + "': expected key=value, got '" +
                         std::string(item) + "'");
      kv.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  const std::string ctx = "variance spec '" + std::string(text) + "'";
  auto take = [&](std::initializer_list<const char*> keys) -> double {
    for (const char* k : keys) {
      if (auto it = kv.find(k); it != kv.end()) {
        const double v = io::parse_double(it->second, ctx);
        kv.erase(it);
        return v;
      }
    }
    throw ParseError(ctx + ": missing parameter '" + std::string(*keys.begin()) + "'");
  };
  VarianceSpec spec;
  if (kind == "identical") {
    spec = variance::Identical{take({"s"})};
  } else if (kind == "two-point" || kind == "twopoint") {
    const double r = take({"r"});
    spec = variance::TwoPoint{r, take({"s", "s_tilde"})};
  } else if (kind == "uniform") {
    const double l = take({"l", "l_s", "lower"});
    spec = variance::Uniform{l, take({"u", "u_s", "upper"})};
  } else if (kind == "explicit") {
    variance::Explicit e;
    if (auto it = kv.find("file"); it != kv.end()) {
      const Vector v = io::load_vector(it->second);
      e.values.assign(v.data(), v.data() + v.size());
      kv.erase(it);
    } else if (auto jt = kv.find("values"); jt != kv.end()) {
      std::string_view rest = jt->second;
      while (!rest.empty()) {
        const auto semi = rest.find(';');
        e.values.push_back(io::parse_double(rest.substr(0, semi), ctx));
        if (semi == std::string_view::npos) break;
        rest.remove_prefix(semi + 1);
      }
      kv.erase(jt);
    } else {
      throw ParseError(ctx + ": explicit needs file= or values=");
    }
    spec = std::move(e);
  } else {
    throw ParseError(ctx + ": unknown kind '" + kind + "' (expected identical|two-point|uniform|explicit)");
  }
  if (!kv.empty()) throw ParseError(ctx + ": unknown parameter '" + kv.begin()->first + "'");
  validate(spec);
  return spec;
}

}  // namespace qport
