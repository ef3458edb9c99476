#include "glsim/report.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "glsim/version.hpp"

namespace glsim {

namespace fs = std::filesystem;

ReportBundle::ReportBundle(std::string directory, const RunConfig& cfg, std::string command)
    : dir_(std::move(directory)), command_(std::move(command)) {
  fs::create_directories(dir_);
  std::ostringstream os;
  os << "glsim " << kVersion << " command=" << command_ << " config=" << cfg.hash_hex()
     << " seed=" << cfg.master_seed;
  stamp_ = os.str();
  summary_["version"] = kVersion;
  summary_["command"] = command_;
  summary_["config_hash"] = cfg.hash_hex();
  summary_["master_seed"] = cfg.master_seed;
  summary_["config"] = cfg.to_json();
}

std::string ReportBundle::path_of(const std::string& filename) const {
  return (fs::path(dir_) / filename).string();
}

void ReportBundle::write_table(const std::string& name, const std::vector<std::string>& columns,
                               const Mat& data) {
  if (static_cast<Index>(columns.size()) != data.cols())
    throw std::invalid_argument("write_table: column count mismatch");
  std::ofstream out(path_of(name + ".tsv"));
  if (!out) throw std::runtime_error("write_table: cannot open output file");
  out << "# " << stamp_ << "\n# ";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "\t" : "") << columns[c];
  out << "\n";
  char buf[32];
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data(r, c));
      out << (c ? "\t" : "") << buf;
    }
    out << "\n";
  }
}

void ReportBundle::add_summary(const std::string& key, const Json& value) {
  summary_[key] = value;
}

void ReportBundle::finalize() {
  if (finalized_) return;
  std::ofstream out(path_of("summary.json"));
  out << summary_.dump(2) << "\n";
  finalized_ = true;
}

ReportBundle::~ReportBundle() {
  try {
    finalize();
  } catch (...) {
  }
}

namespace {

constexpr char kMagic[8] = {'G', 'L', 'T', 'R', 'A', 'J', '0', '1'};

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw std::runtime_error("trajectory archive: truncated file");
  return value;
}

}  // namespace

void write_trajectory(const std::string& path, const Trajectory& traj) {
  static_assert(std::endian::native == std::endian::little,
                "trajectory archives are declared little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trajectory: cannot open " + path);
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, 1);  // format version
  put<std::uint32_t>(out, 1);  // endianness tag: 1 = little
  put<std::uint32_t>(out, static_cast<std::uint32_t>(traj.n_modes));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(traj.forcing.n_channels()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(traj.n_steps()));
  put<Real>(out, traj.dt);
  put<Real>(out, traj.t0);
  put<std::uint64_t>(out, traj.seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(traj.snapshot_stride));
  put<std::uint32_t>(out, traj.nonlinearity ? 1u : 0u);
  for (int m : traj.forcing.modes) put<std::int32_t>(out, m);
  out.write(reinterpret_cast<const char*>(traj.forcing.amps.data()),
            static_cast<std::streamsize>(sizeof(Real)) * traj.forcing.amps.size());
  out.write(reinterpret_cast<const char*>(traj.initial.data()),
            static_cast<std::streamsize>(sizeof(Real)) * traj.initial.size());
  out.write(reinterpret_cast<const char*>(traj.noise.data()),
            static_cast<std::streamsize>(sizeof(Real)) * traj.noise.size());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(traj.states.size()));
  for (const Vec& s : traj.states)
    out.write(reinterpret_cast<const char*>(s.data()),
              static_cast<std::streamsize>(sizeof(Real)) * s.size());
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trajectory: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("read_trajectory: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != 1) throw std::runtime_error("read_trajectory: unsupported version");
  const auto endian = get<std::uint32_t>(in);
  if (endian != 1) throw std::runtime_error("read_trajectory: unsupported endianness");

  Trajectory traj;
  traj.n_modes = static_cast<int>(get<std::uint32_t>(in));
  const int nc = static_cast<int>(get<std::uint32_t>(in));
  const auto n_steps = static_cast<Index>(get<std::uint64_t>(in));
  traj.dt = get<Real>(in);
  traj.t0 = get<Real>(in);
  traj.seed = get<std::uint64_t>(in);
  traj.snapshot_stride = static_cast<int>(get<std::uint32_t>(in));
  traj.nonlinearity = get<std::uint32_t>(in) != 0;
  traj.forcing.modes.resize(static_cast<std::size_t>(nc));
  for (int j = 0; j < nc; ++j) traj.forcing.modes[static_cast<std::size_t>(j)] = get<std::int32_t>(in);
  traj.forcing.amps.resize(nc);
  in.read(reinterpret_cast<char*>(traj.forcing.amps.data()),
          static_cast<std::streamsize>(sizeof(Real)) * nc);
  traj.initial.resize(2 * traj.n_modes);
  in.read(reinterpret_cast<char*>(traj.initial.data()),
          static_cast<std::streamsize>(sizeof(Real)) * traj.initial.size());
  traj.noise.resize(nc, n_steps);
  in.read(reinterpret_cast<char*>(traj.noise.data()),
          static_cast<std::streamsize>(sizeof(Real)) * traj.noise.size());
  const auto n_snapshots = get<std::uint64_t>(in);
  traj.states.resize(n_snapshots);
  for (auto& s : traj.states) {
    s.resize(2 * traj.n_modes);
    in.read(reinterpret_cast<char*>(s.data()),
            static_cast<std::streamsize>(sizeof(Real)) * s.size());
  }
  if (!in) throw std::runtime_error("read_trajectory: truncated file");
  return traj;
}

}  // namespace glsim
