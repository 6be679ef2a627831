#include "predfilt/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace predfilt {

namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json vec_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from_json(const json& j, Eigen::Index expected, const char* name) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw std::runtime_error(std::string("belief field '") + name + "' has the wrong length");
  }
  return Eigen::Map<const Vector>(values.data(), expected);
}

json mat_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix mat_from_json(const json& j, Eigen::Index cols, const char* name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (c != cols || rows < 0 || static_cast<Eigen::Index>(data.size()) != rows * c) {
    throw std::runtime_error(std::string("belief factor '") + name + "' has the wrong shape");
  }
  Matrix m(rows, c);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[i * c + k];
  }
  return m;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string save_belief(const Belief& belief, const NetworkSpec& spec) {
  json doc{{"format", "predfilt-belief"},
           {"version", kBeliefFormatVersion},
           {"spec_hash", hex(spec.hash())},
           {"param_count", spec.param_count()}};
  std::visit(Overloaded{
                 [&](const DenseBelief& b) {
                   doc["kind"] = "dense";
                   doc["mean"] = vec_to_json(b.mean);
                   doc["factors"] = {{"cov", mat_to_json(b.cov)}};
                 },
                 [&](const LrkfBelief& b) {
                   doc["kind"] = "lrkf";
                   doc["mean"] = vec_to_json(b.mean);
                   doc["factors"] = {{"w", mat_to_json(b.w.matrix())}};
                 },
                 [&](const HiLoFiBelief& b) {
                   doc["kind"] = "hilofi";
                   doc["mean_hidden"] = vec_to_json(b.mean_hidden);
                   doc["mean_last"] = vec_to_json(b.mean_last);
                   doc["factors"] = {{"sigma_last_half", mat_to_json(b.sigma_last_half.matrix())},
                                     {"c_hidden", mat_to_json(b.c_hidden.matrix())}};
                 },
                 [&](const LoLoFiBelief& b) {
                   doc["kind"] = "lolofi";
                   doc["mean_hidden"] = vec_to_json(b.mean_hidden);
                   doc["mean_last"] = vec_to_json(b.mean_last);
                   doc["factors"] = {{"c_last", mat_to_json(b.c_last.matrix())},
                                     {"c_hidden", mat_to_json(b.c_hidden.matrix())}};
                 },
             },
             belief);
  // dump() writes doubles in shortest round-trip form.
  return doc.dump();
}

Belief load_belief(const std::string& text, const NetworkSpec& spec) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("belief checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "predfilt-belief") throw std::runtime_error("not a belief checkpoint");
    if (doc.at("version").get<int>() != kBeliefFormatVersion) {
      throw std::runtime_error("unsupported belief format version " + doc.at("version").dump());
    }
    if (doc.at("spec_hash").get<std::string>() != hex(spec.hash())) {
      throw std::runtime_error("belief was saved for a different network spec");
    }
    const Eigen::Index dw = spec.hidden_param_count();
    const Eigen::Index de = spec.last_param_count();
    const Eigen::Index n = dw + de;
    const std::string kind = doc.at("kind").get<std::string>();
    const json& f = doc.at("factors");
    if (kind == "dense") {
      return DenseBelief{vec_from_json(doc.at("mean"), n, "mean"), mat_from_json(f.at("cov"), n, "cov")};
    }
    if (kind == "lrkf") {
      return LrkfBelief{vec_from_json(doc.at("mean"), n, "mean"), LowRankFactor(mat_from_json(f.at("w"), n, "w"))};
    }
    const Vector mh = vec_from_json(doc.at("mean_hidden"), dw, "mean_hidden");
    const Vector ml = vec_from_json(doc.at("mean_last"), de, "mean_last");
    const Eigen::Index hidden_cols = f.at("c_hidden").at("cols").get<Eigen::Index>() == 0 ? 0 : dw;
    LowRankFactor ch(mat_from_json(f.at("c_hidden"), hidden_cols, "c_hidden"));
    if (kind == "hilofi") {
      Matrix s = mat_from_json(f.at("sigma_last_half"), de, "sigma_last_half");
      if (s.rows() != de) throw std::runtime_error("belief factor 'sigma_last_half' is not square");
      return HiLoFiBelief{ml, mh, UpperTri(std::move(s)), std::move(ch)};
    }
    if (kind == "lolofi") {
      return LoLoFiBelief{ml, mh, LowRankFactor(mat_from_json(f.at("c_last"), de, "c_last")), std::move(ch)};
    }
    throw std::runtime_error("unknown belief kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed belief checkpoint: ") + e.what());
  }
}

void save_belief_file(const std::string& path, const Belief& belief, const NetworkSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << save_belief(belief, spec) << '\n';
}

Belief load_belief_file(const std::string& path, const NetworkSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_belief(ss.str(), spec);
}

}  // namespace predfilt
