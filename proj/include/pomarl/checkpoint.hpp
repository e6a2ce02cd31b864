#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "pomarl/contract.hpp"
#include "pomarl/mlp.hpp"

namespace pomarl::nn {

// Archive of named network checkpoints in a single file.
// Layout: magic "PMAR", u32 version, u32 entry count, then per entry
// u16 name length, name bytes, u64 blob length, Mlp blob (see mlp.hpp).
template <class S>
class CheckpointArchive {
 public:
  void put(const std::string& name, const Mlp<S>& net) {
    std::ostringstream os(std::ios::binary);
    net.save(os);
    blobs_[name] = os.str();
  }

  Mlp<S> get(const std::string& name) const {
    auto it = blobs_.find(name);
    POMARL_CHECK_MSG(it != blobs_.end(), "missing checkpoint entry: " + name);
    std::istringstream is(it->second, std::ios::binary);
    return Mlp<S>::load(is);
  }

  bool contains(const std::string& name) const { return blobs_.count(name) > 0; }
  std::size_t size() const { return blobs_.size(); }
  const std::map<std::string, std::string>& blobs() const { return blobs_; }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    POMARL_CHECK_MSG(os.good(), "cannot open checkpoint file for writing: " + path);
    os.write("PMAR", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(blobs_.size()));
    for (const auto& [name, blob] : blobs_) {
      const auto len = static_cast<std::uint16_t>(name.size());
      os.write(reinterpret_cast<const char*>(&len), sizeof(len));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      const std::uint64_t blen = blob.size();
      os.write(reinterpret_cast<const char*>(&blen), sizeof(blen));
      os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
  }

  static CheckpointArchive load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    POMARL_CHECK_MSG(is.good(), "cannot open checkpoint file: " + path);
    char magic[4];
    is.read(magic, 4);
    POMARL_CHECK_MSG(is && std::string(magic, 4) == "PMAR", "bad archive magic");
    POMARL_CHECK_MSG(read_u32(is) == 1, "unsupported archive version");
    CheckpointArchive ar;
    const std::uint32_t count = read_u32(is);
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint16_t len = 0;
      is.read(reinterpret_cast<char*>(&len), sizeof(len));
      std::string name(len, '\0');
      is.read(name.data(), len);
      std::uint64_t blen = 0;
      is.read(reinterpret_cast<char*>(&blen), sizeof(blen));
      std::string blob(blen, '\0');
      is.read(blob.data(), static_cast<std::streamsize>(blen));
      POMARL_CHECK_MSG(static_cast<bool>(is), "truncated archive");
      ar.blobs_[name] = std::move(blob);
    }
    return ar;
  }

 private:
  static void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }

  std::map<std::string, std::string> blobs_;
};

}  // namespace pomarl::nn
