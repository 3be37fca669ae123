#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

// Parameter checkpoints: a flat list of (name, shape, float64 values) records.
// Values live in <stem>.bin as raw little-endian doubles, concatenated in
// record order; <stem>.json carries the index (name, shape, offset in
// elements, count) plus an optional free-form "meta" object.

namespace glab {

struct ParamRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

void save_checkpoint(const std::string& stem, const std::vector<ParamRecord>& records,
                     const std::string& meta_json = "{}");

std::vector<ParamRecord> load_checkpoint(const std::string& stem);
std::string load_checkpoint_meta(const std::string& stem);

}  // namespace glab
