#pragma once

#include <string>
#include <vector>

#include "glsim/config.hpp"

namespace glsim {

/// Output sink for one command run: delimited text tables, a structured
/// summary record, and binary trajectory archives, all stamped with the
/// version tag, config hash and master seed.
class ReportBundle {
 public:
  ReportBundle(std::string directory, const RunConfig& cfg, std::string command);

  const std::string& directory() const { return dir_; }

  /// Tab-separated table; `columns` names the columns of `data`.
  void write_table(const std::string& name, const std::vector<std::string>& columns,
                   const Mat& data);
  void add_summary(const std::string& key, const Json& value);
  /// Writes summary.json (idempotent; called by the destructor as well).
  void finalize();

  std::string path_of(const std::string& filename) const;

  ~ReportBundle();

 private:
  std::string dir_;
  std::string command_;
  std::string stamp_;
  Json summary_;
  bool finalized_ = false;
};

/// Binary trajectory archive, version 1, little-endian, with noise record and
/// strided state snapshots.
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

}  // namespace glsim
