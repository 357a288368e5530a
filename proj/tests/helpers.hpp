#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "claimaudit/ingest.hpp"
#include "claimaudit/types.hpp"

namespace testutil {

using namespace claimaudit;

/// Unique temp directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("claimaudit_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Claim make_claim(const std::string& id, const std::string& topic,
                        Veracity veracity = Veracity::False, bool gold = false) {
  Claim c;
  c.claim_id = id;
  c.text = "Text of claim " + id;
  c.topic = topic;
  c.veracity = veracity;
  c.is_gold = gold;
  return c;
}

inline WorkerProfile make_worker(const std::string& id, Gender gender) {
  WorkerProfile w;
  w.worker_id = id;
  w.gender = gender;
  return w;
}

inline Annotation human_annotation(const std::string& claim_id, const std::string& worker_id,
                                   Gender gender, int rating,
                                   Dimension dimension = Dimension::GroupHarm) {
  Annotation a;
  a.claim_id = claim_id;
  a.source = Source::Human;
  a.condition = condition_from_gender(gender);
  a.worker_id = worker_id;
  a.dimension = dimension;
  a.rating = rating;
  return a;
}

inline Annotation llm_annotation(const std::string& claim_id, Condition condition,
                                 int variant, int rating,
                                 Dimension dimension = Dimension::GroupHarm) {
  Annotation a;
  a.claim_id = claim_id;
  a.source = Source::Llm;
  a.condition = condition;
  a.prompt_variant = variant;
  a.dimension = dimension;
  a.rating = rating;
  return a;
}

struct BundleFiles {
  std::filesystem::path claims;
  std::filesystem::path workers;
  std::filesystem::path annotations;
};

inline BundleFiles write_bundle(const DatasetBundle& bundle,
                                const std::filesystem::path& dir) {
  BundleFiles files{dir / "claims.csv", dir / "workers.csv", dir / "annotations.csv"};
  save_dataset(bundle, files.claims, files.workers, files.annotations);
  return files;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testutil
