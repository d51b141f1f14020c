#pragma once

// Dictionary file: JSON object with the atoms stored row-major (n rows of p
// values) and a SHA-256 digest of the compact serialization of that array.

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "pulsesrc/dictionary.hpp"
#include "pulsesrc/error.hpp"

namespace pulsesrc {

inline constexpr int kDictionaryFormatVersion = 1;

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline nlohmann::json dictionary_to_json(const LabeledDictionary& d) {
  nlohmann::json atoms = nlohmann::json::array();
  for (Eigen::Index r = 0; r < d.n(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < d.p(); ++c) row.push_back(d.atoms(r, c));
    atoms.push_back(std::move(row));
  }
  return nlohmann::json{
      {"schema_version", kDictionaryFormatVersion},
      {"version", kDictionaryFormatVersion},
      {"family", std::string(name_of(d.family))},
      {"n", d.n()},
      {"p", d.p()},
      {"k_target", d.k_target},
      {"k_background", d.k_background},
      {"n_target_atoms", d.n_target_atoms},
      {"n_background_atoms", d.n_background_atoms},
      {"seed", d.seed},
      {"labels", d.labels},
      {"sha256", sha256_hex(atoms.dump())},
      {"atoms", std::move(atoms)},
  };
}

inline LabeledDictionary dictionary_from_json(const nlohmann::json& j,
                                              std::optional<Family> expected = std::nullopt) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kDictionaryFormatVersion)
      throw VersionMismatch("dictionary format version " + std::to_string(version) +
                            ", expected " + std::to_string(kDictionaryFormatVersion));
    const auto& atoms = j.at("atoms");
    if (sha256_hex(atoms.dump()) != j.at("sha256").get<std::string>())
      throw ChecksumError("dictionary atoms digest mismatch");
    const auto fam = parse_family(j.at("family").get<std::string>());
    if (!fam) throw ParseError("unknown dictionary family '" + j.at("family").get<std::string>() + "'");
    if (expected && *fam != *expected)
      throw FamilyMismatch("dictionary is for " + std::string(name_of(*fam)) + ", expected " +
                           std::string(name_of(*expected)));
    LabeledDictionary d;
    d.family = *fam;
    const auto n = j.at("n").get<Eigen::Index>();
    const auto p = j.at("p").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(atoms.size()) != n)
      throw ParseError("dictionary atoms has " + std::to_string(atoms.size()) + " rows, n = " +
                       std::to_string(n));
    d.atoms.resize(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = atoms[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != p)
        throw ParseError("dictionary atoms row " + std::to_string(r) + " has wrong length");
      for (Eigen::Index c = 0; c < p; ++c) d.atoms(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    d.labels = j.at("labels").get<std::vector<int>>();
    d.k_target = j.at("k_target").get<int>();
    d.k_background = j.value("k_background", kDefaultBackgroundClusters);
    d.n_target_atoms = j.at("n_target_atoms").get<int>();
    d.n_background_atoms = j.at("n_background_atoms").get<int>();
    d.seed = j.at("seed").get<std::uint64_t>();
    if (static_cast<Eigen::Index>(d.labels.size()) != p ||
        d.n_target_atoms + d.n_background_atoms != p)
      throw ParseError("dictionary label layout inconsistent with p");
    for (int i = 0; i < p; ++i)
      if (d.labels[static_cast<std::size_t>(i)] != (i < d.n_target_atoms ? 1 : -1))
        throw ParseError("dictionary labels must be +1 block then -1 block");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed dictionary: ") + e.what());
  }
}

inline void save(const LabeledDictionary& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dictionary " + path.string());
  out << dictionary_to_json(d).dump(1) << '\n';
}

/// Loads and verifies a dictionary. A file that no longer parses as JSON is
/// reported as a checksum failure (truncation or corruption).
inline LabeledDictionary load(const std::filesystem::path& path,
                              std::optional<Family> expected = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("dictionary file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ChecksumError(path.string() + ": truncated or corrupt dictionary (" + e.what() + ")");
  }
  return dictionary_from_json(j, expected);
}

}  // namespace pulsesrc
