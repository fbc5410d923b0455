#pragma once

#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flownav/perceptron.hpp"
#include "flownav/svm.hpp"
#include "flownav/svr.hpp"

namespace flownav {

// Line-oriented model file:
//
//   flownav-model-v1 kind=<svm|perceptron|svr>
//   param C=...            (one "param key=value" per line)
//   scaler <dims>          followed by one "min max" line per dimension
//   sv <count>             followed by "coef f_1 ... f_d" per support vector
//   weights <dims>         (perceptron only) one weight per line
//   end
//
// Numbers use 17 significant digits so a load reproduces predictions exactly.

using AnyModel = std::variant<SvmModel, PerceptronModel, SvrModel>;

inline constexpr std::string_view kModelMagic = "flownav-model-v1";

namespace detail {

inline std::string fmt17(double v) { return format_sig(v, 17); }

inline void write_scaler(std::ostream& out, const Scaler& s) {
  out << "scaler " << s.dimension() << '\n';
  for (std::size_t d = 0; d < s.dimension(); ++d) out << fmt17(s.min[d]) << ' ' << fmt17(s.max[d]) << '\n';
}

inline void write_support_vectors(std::ostream& out, const std::vector<FeatureVector>& svs,
                                  const std::vector<double>& coefs) {
  out << "sv " << svs.size() << '\n';
  for (std::size_t i = 0; i < svs.size(); ++i) {
    out << fmt17(coefs[i]);
    for (double v : svs[i]) out << ' ' << fmt17(v);
    out << '\n';
  }
}

inline void write_model_head(std::ostream& out, std::string_view kind, std::string_view provenance) {
  out << kModelMagic << " kind=" << kind << '\n';
  if (!provenance.empty()) out << provenance << '\n';
}

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  // Next non-blank, non-comment line; CorruptSection at end of input.
  std::string next(std::string_view context) {
    if (pending_) {
      std::string line = std::move(*pending_);
      pending_.reset();
      return line;
    }
    std::string line;
    while (std::getline(in_, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return line;
    }
    throw Error(ErrorKind::CorruptSection, "unexpected end of model file in " + std::string(context));
  }

  std::vector<double> numbers(const std::string& line, std::size_t expected, std::string_view context) {
    std::vector<double> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) throw Error(ErrorKind::CorruptSection, "non-numeric value '" + tok + "' in " + std::string(context));
      out.push_back(*v);
    }
    if (out.size() != expected) {
      throw Error(ErrorKind::CorruptSection, "wrong number of values in " + std::string(context));
    }
    return out;
  }

  void unread(std::string line) { pending_ = std::move(line); }

  std::size_t section(std::string_view name) {
    const std::string line = next(name);
    std::istringstream ss(line);
    std::string head;
    long long count = -1;
    if (!(ss >> head >> count) || head != name || count < 0) {
      throw Error(ErrorKind::CorruptSection, "expected '" + std::string(name) + " <count>', got '" + line + "'");
    }
    return static_cast<std::size_t>(count);
  }

 private:
  std::istream& in_;
  std::optional<std::string> pending_;
};

inline Scaler read_scaler(ModelReader& r) {
  const std::size_t dims = r.section("scaler");
  Scaler s;
  s.min.resize(dims);
  s.max.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const auto v = r.numbers(r.next("scaler"), 2, "scaler");
    s.min[d] = v[0];
    s.max[d] = v[1];
  }
  return s;
}

inline void read_support_vectors(ModelReader& r, std::size_t dims, std::vector<FeatureVector>& svs,
                                 std::vector<double>& coefs) {
  const std::size_t count = r.section("sv");
  for (std::size_t i = 0; i < count; ++i) {
    auto v = r.numbers(r.next("sv"), dims + 1, "sv");
    coefs.push_back(v.front());
    svs.emplace_back(v.begin() + 1, v.end());
  }
}

inline double require_param(const std::map<std::string, std::string>& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw Error(ErrorKind::CorruptSection, "missing param " + key);
  const auto v = parse_double(it->second);
  if (!v) throw Error(ErrorKind::CorruptSection, "non-numeric param " + key);
  return *v;
}

}  // namespace detail

inline void save_model(std::ostream& out, const SvmModel& m, std::string_view provenance = {}) {
  detail::write_model_head(out, "svm", provenance);
  out << "param C=" << detail::fmt17(m.C) << '\n'
      << "param gamma=" << detail::fmt17(m.kernel.gamma) << '\n'
      << "param bias=" << detail::fmt17(m.bias) << '\n'
      << "param classes=-1,+1\n"
      << "param weight_neg=" << detail::fmt17(m.class_weights.negative) << '\n'
      << "param weight_pos=" << detail::fmt17(m.class_weights.positive) << '\n';
  detail::write_scaler(out, m.scaler);
  detail::write_support_vectors(out, m.support_vectors, m.coefs);
  out << "end\n";
}

inline void save_model(std::ostream& out, const SvrModel& m, std::string_view provenance = {}) {
  detail::write_model_head(out, "svr", provenance);
  out << "param C=" << detail::fmt17(m.C) << '\n'
      << "param gamma=" << detail::fmt17(m.kernel.gamma) << '\n'
      << "param epsilon=" << detail::fmt17(m.epsilon) << '\n'
      << "param bias=" << detail::fmt17(m.bias) << '\n';
  detail::write_scaler(out, m.scaler);
  detail::write_support_vectors(out, m.support_vectors, m.coefs);
  out << "end\n";
}

inline void save_model(std::ostream& out, const PerceptronModel& m, std::string_view provenance = {}) {
  detail::write_model_head(out, "perceptron", provenance);
  out << "param bias=" << detail::fmt17(m.bias) << '\n'
      << "param classes=-1,+1\n"
      << "param epochs=" << m.epochs_run << '\n';
  detail::write_scaler(out, m.scaler);
  out << "weights " << m.weights.size() << '\n';
  for (double w : m.weights) out << detail::fmt17(w) << '\n';
  out << "end\n";
}

inline void save_model(std::ostream& out, const AnyModel& m, std::string_view provenance = {}) {
  std::visit([&](const auto& model) { save_model(out, model, provenance); }, m);
}

inline AnyModel load_model(std::istream& in) {
  std::string first;
  if (!std::getline(in, first)) throw Error(ErrorKind::BadVersion, "empty model file");
  if (!first.empty() && first.back() == '\r') first.pop_back();
  std::istringstream head(first);
  std::string magic;
  std::string kind_kv;
  head >> magic >> kind_kv;
  if (magic != kModelMagic) throw Error(ErrorKind::BadVersion, "unsupported model header '" + magic + "'");
  if (!kind_kv.starts_with("kind=")) throw Error(ErrorKind::CorruptSection, "missing kind= in header");
  const std::string kind = kind_kv.substr(5);
  if (kind != "svm" && kind != "svr" && kind != "perceptron") {
    throw Error(ErrorKind::CorruptSection, "unknown model kind '" + kind + "'");
  }

  detail::ModelReader br(in);
  std::map<std::string, std::string> params;
  std::string line = br.next("params");
  while (line.starts_with("param ")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::CorruptSection, "malformed param line");
    params[line.substr(6, eq - 6)] = line.substr(eq + 1);
    line = br.next("params");
  }
  br.unread(std::move(line));

  auto finish = [&] {
    if (br.next("end") != "end") throw Error(ErrorKind::CorruptSection, "missing end marker");
  };

  if (kind == "svm") {
    SvmModel m;
    m.C = detail::require_param(params, "C");
    m.kernel.gamma = detail::require_param(params, "gamma");
    m.bias = detail::require_param(params, "bias");
    if (params.count("weight_neg")) m.class_weights.negative = detail::require_param(params, "weight_neg");
    if (params.count("weight_pos")) m.class_weights.positive = detail::require_param(params, "weight_pos");
    m.scaler = detail::read_scaler(br);
    detail::read_support_vectors(br, m.scaler.dimension(), m.support_vectors, m.coefs);
    finish();
    return m;
  }
  if (kind == "svr") {
    SvrModel m;
    m.C = detail::require_param(params, "C");
    m.kernel.gamma = detail::require_param(params, "gamma");
    m.epsilon = detail::require_param(params, "epsilon");
    m.bias = detail::require_param(params, "bias");
    m.scaler = detail::read_scaler(br);
    detail::read_support_vectors(br, m.scaler.dimension(), m.support_vectors, m.coefs);
    finish();
    return m;
  }
  PerceptronModel m;
  m.bias = detail::require_param(params, "bias");
  m.epochs_run = static_cast<int>(detail::require_param(params, "epochs"));
  m.scaler = detail::read_scaler(br);
  const std::size_t dims = br.section("weights");
  if (dims != m.scaler.dimension()) throw Error(ErrorKind::CorruptSection, "weights/scaler dimension mismatch");
  for (std::size_t d = 0; d < dims; ++d) m.weights.push_back(br.numbers(br.next("weights"), 1, "weights")[0]);
  finish();
  return m;
}

}  // namespace flownav
