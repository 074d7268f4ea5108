#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gifl/nn.hpp"
#include "gifl/tensor.hpp"

namespace gifl {

// Named-array archive: a JSON meta header followed by float64 arrays.
// Writing is fully deterministic, so identical contents give identical bytes.
struct Archive {
  nlohmann::json meta;
  std::map<std::string, Tensor> arrays;
};

void save_archive(const std::string& path, const nlohmann::json& meta,
                  const std::vector<NamedParam>& arrays);
Archive load_archive(const std::string& path);

// FNV-1a over a canonical JSON dump; used for checkpoint/config compatibility.
std::uint64_t json_hash(const nlohmann::json& j);
std::string hash_hex(std::uint64_t h);

}  // namespace gifl
