#include "core/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace glab {

using nlohmann::json;

namespace {
void require_little_endian() {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  if constexpr (std::endian::native != std::endian::little)
    fail(Status::bad_state, "checkpoint: container is little-endian; this host is big-endian");
}
}  // namespace

void save_checkpoint(const std::string& stem, const std::vector<ParamRecord>& records,
                     const std::string& meta_json) {
  require_little_endian();
  std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) fail(Status::io, "checkpoint: cannot open " + stem + ".bin for writing");
  json index;
  index["format"] = "glab-params";
  index["version"] = 1;
  index["dtype"] = "float64-le";
  index["records"] = json::array();
  int64_t offset = 0;
  for (const ParamRecord& r : records) {
    if (shape_numel(r.shape) != static_cast<int64_t>(r.values.size()))
      fail(Status::shape_mismatch, "checkpoint: record '" + r.name + "' shape/value count mismatch");
    bin.write(reinterpret_cast<const char*>(r.values.data()),
              static_cast<std::streamsize>(r.values.size() * sizeof(double)));
    json rec;
    rec["name"] = r.name;
    rec["shape"] = r.shape;
    rec["offset"] = offset;  // elements, not bytes
    rec["count"] = r.values.size();
    index["records"].push_back(rec);
    offset += static_cast<int64_t>(r.values.size());
  }
  if (!bin) fail(Status::io, "checkpoint: short write to " + stem + ".bin");
  bin.close();
  index["meta"] = json::parse(meta_json);
  std::ofstream js(stem + ".json", std::ios::trunc);
  if (!js) fail(Status::io, "checkpoint: cannot open " + stem + ".json for writing");
  js << index.dump(2) << "\n";
}

static json read_index(const std::string& stem) {
  std::ifstream js(stem + ".json");
  if (!js) fail(Status::io, "checkpoint: cannot open " + stem + ".json");
  json index;
  try {
    js >> index;
  } catch (const json::exception& e) {
    fail(Status::io, "checkpoint: malformed index " + stem + ".json: " + e.what());
  }
  if (index.value("format", "") != "glab-params")
    fail(Status::io, "checkpoint: " + stem + ".json is not a parameter index");
  if (index.value("version", 0) != 1)
    fail(Status::io, "checkpoint: unsupported version in " + stem + ".json");
  return index;
}

std::vector<ParamRecord> load_checkpoint(const std::string& stem) {
  require_little_endian();
  json index = read_index(stem);
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) fail(Status::io, "checkpoint: cannot open " + stem + ".bin");
  bin.seekg(0, std::ios::end);
  int64_t bytes = static_cast<int64_t>(bin.tellg());
  std::vector<ParamRecord> out;
  for (const json& rec : index["records"]) {
    ParamRecord r;
    r.name = rec.at("name").get<std::string>();
    r.shape = rec.at("shape").get<Shape>();
    int64_t offset = rec.at("offset").get<int64_t>();
    int64_t count = rec.at("count").get<int64_t>();
    if (shape_numel(r.shape) != count)
      fail(Status::io, "checkpoint: record '" + r.name + "' count does not match shape");
    if ((offset + count) * static_cast<int64_t>(sizeof(double)) > bytes)
      fail(Status::io, "checkpoint: record '" + r.name + "' overruns " + stem + ".bin");
    r.values.resize(static_cast<size_t>(count));
    bin.seekg(offset * static_cast<int64_t>(sizeof(double)));
    bin.read(reinterpret_cast<char*>(r.values.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!bin) fail(Status::io, "checkpoint: short read from " + stem + ".bin");
    out.push_back(std::move(r));
  }
  return out;
}

std::string load_checkpoint_meta(const std::string& stem) {
  json index = read_index(stem);
  return index.contains("meta") ? index["meta"].dump() : std::string("{}");
}

}  // namespace glab
