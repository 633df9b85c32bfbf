#include "mixhmm/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace mixhmm {

namespace {
constexpr int kFormatVersion = 1;
}

void save_model_json(std::ostream& out, const MixtureHmmParams& params) {
  validate(params);
  const int K = params.num_components();
  const int M = params.num_states();

  nlohmann::ordered_json doc;
  doc["version"] = kFormatVersion;
  doc["K"] = K;
  doc["M"] = M;
  doc["delta"] = std::vector<double>(params.delta.data(),
                                     params.delta.data() + K);
  auto& pi = doc["pi"] = nlohmann::ordered_json::array();
  auto& trans = doc["A"] = nlohmann::ordered_json::array();
  for (int k = 0; k < K; ++k) {
    pi.push_back(std::vector<double>(params.pi[k].data(),
                                     params.pi[k].data() + M));
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int h = 0; h < M; ++h) {
      std::vector<double> row(M);
      for (int l = 0; l < M; ++l) row[l] = params.trans[k](h, l);
      rows.push_back(row);
    }
    trans.push_back(rows);
  }
  auto& emissions = doc["emissions"] = nlohmann::ordered_json::array();
  for (const auto& e : params.emissions)
    emissions.push_back({{"epsilon", e.epsilon},
                         {"shape", e.shape},
                         {"rate", e.rate}});
  out << doc.dump(2) << '\n';
}

void save_model_json_file(const std::string& path,
                          const MixtureHmmParams& params) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file: " + path);
  save_model_json(out, params);
}

MixtureHmmParams load_model_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model json parse error: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kFormatVersion)
      throw InputError("unsupported model format version");
    const int K = doc.at("K").get<int>();
    const int M = doc.at("M").get<int>();
    MixtureHmmParams params;
    const auto delta = doc.at("delta").get<std::vector<double>>();
    if (static_cast<int>(delta.size()) != K)
      throw InputError("model json: delta length disagrees with K");
    params.delta = Eigen::Map<const Vector>(delta.data(), K);
    for (const auto& row : doc.at("pi")) {
      const auto v = row.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != M)
        throw InputError("model json: pi row length disagrees with M");
      params.pi.push_back(Eigen::Map<const Vector>(v.data(), M));
    }
    for (const auto& mat : doc.at("A")) {
      Matrix A(M, M);
      int h = 0;
      for (const auto& row : mat) {
        const auto v = row.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != M || h >= M)
          throw InputError("model json: A dimensions disagree with M");
        for (int l = 0; l < M; ++l) A(h, l) = v[l];
        ++h;
      }
      if (h != M) throw InputError("model json: A dimensions disagree with M");
      params.trans.push_back(A);
    }
    for (const auto& e : doc.at("emissions"))
      params.emissions.push_back({e.at("epsilon").get<double>(),
                                  e.at("shape").get<double>(),
                                  e.at("rate").get<double>()});
    validate(params);
    if (params.num_components() != K || params.num_states() != M)
      throw InputError("model json: array counts disagree with K/M");
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model json: ") + e.what());
  }
}

MixtureHmmParams load_model_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file: " + path);
  return load_model_json(in);
}

}  // namespace mixhmm
