#include "bonlab/harness/manifest.hpp"

#include <array>
#include <ctime>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

namespace bonlab::harness {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialisation failed");
    }
  }

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len) != 1) throw std::runtime_error("SHA-256 final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::array<char, 32> buf{};
  const std::size_t n = std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return std::string(buf.data(), n);
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["config_sha256"] = m.config_sha256;
  j["threads"] = m.threads;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  auto outputs = nlohmann::json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  j["outputs"] = std::move(outputs);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_sha256 = j.at("config_sha256").get<std::string>();
  m.threads = j.at("threads").get<unsigned>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  for (const auto& o : j.at("outputs")) {
    m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(),
                         o.at("bytes").get<std::uintmax_t>()});
  }
  return m;
}

std::vector<std::string> verify_manifest(const RunManifest& manifest, const std::filesystem::path& out_dir) {
  std::vector<std::string> bad;
  for (const auto& o : manifest.outputs) {
    const auto path = out_dir / o.path;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec) || sha256_file(path) != o.sha256) bad.push_back(o.path);
  }
  return bad;
}

}  // namespace bonlab::harness
