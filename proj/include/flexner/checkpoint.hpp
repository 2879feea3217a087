#pragma once

#include <map>
#include <string>

#include "flexner/bilateral.hpp"

namespace flexner {

// Binary container: magic "FLXNCKPT", u64 header length, a JSON header with
// the model configuration, vocabularies, label set, inference side, metadata
// and a tensor directory, followed by every tensor as little-endian doubles
// in column-major order. Loading reproduces parameters bit for bit.
struct Checkpoint {
  BilateralModel model;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::string& path, const BilateralModel& model,
                     const std::map<std::string, std::string>& metadata = {});
Checkpoint load_checkpoint(const std::string& path);

std::string spec_to_string(const SubNetworkSpec& spec);

}  // namespace flexner
