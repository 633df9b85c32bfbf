#ifndef MIXHMM_MODEL_IO_HPP
#define MIXHMM_MODEL_IO_HPP

#include <iosfwd>
#include <string>

#include "mixhmm/model.hpp"

namespace mixhmm {

/// JSON document {version, K, M, delta, pi, A, emissions}; doubles are
/// written with shortest round-trip decimals, so load(save(p)) == p bitwise.
void save_model_json(std::ostream& out, const MixtureHmmParams& params);
void save_model_json_file(const std::string& path,
                          const MixtureHmmParams& params);

MixtureHmmParams load_model_json(std::istream& in);
MixtureHmmParams load_model_json_file(const std::string& path);

}  // namespace mixhmm

#endif
