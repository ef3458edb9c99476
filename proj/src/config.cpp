#include "glsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "glsim/rng.hpp"
#include "glsim/version.hpp"

namespace glsim {

void require_keys(const Json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

Vec parse_field(const Json& j, int n_modes) {
  Vec u = Vec::Zero(2 * n_modes);
  if (j.is_string()) {
    if (j.get<std::string>() == "zero") return u;
    throw std::invalid_argument("field: unknown preset '" + j.get<std::string>() + "'");
  }
  if (!j.is_object()) throw std::invalid_argument("field: expected object or \"zero\"");
  for (const auto& [key, value] : j.items()) {
    int mode = 0;
    try {
      mode = std::stoi(key);
    } catch (...) {
      throw std::invalid_argument("field: bad mode key '" + key + "'");
    }
    u[mode_index(n_modes, mode)] = value.get<Real>();
  }
  return u;
}

Json field_to_json(const Vec& coeffs, int n_modes) {
  Json j = Json::object();
  for (Index i = 0; i < coeffs.size(); ++i)
    if (coeffs[i] != 0.0)
      j[std::to_string(index_mode(n_modes, static_cast<int>(i)))] = coeffs[i];
  return j;
}

ForcingSpec parse_forcing(const Json& j, int n_modes) {
  require_keys(j, "model.forcing", {"modes", "amps"});
  if (!j.contains("modes")) throw std::invalid_argument("model.forcing: missing 'modes'");
  ForcingSpec f;
  f.modes = j.at("modes").get<std::vector<int>>();
  const Index nc = static_cast<Index>(f.modes.size());
  if (!j.contains("amps")) {
    f.amps = Vec::Ones(nc);
  } else if (j.at("amps").is_number()) {
    f.amps = Vec::Constant(nc, j.at("amps").get<Real>());
  } else {
    const auto amps = j.at("amps").get<std::vector<Real>>();
    if (amps.size() != f.modes.size())
      throw std::invalid_argument("model.forcing: amps length must match modes");
    f.amps = Eigen::Map<const Vec>(amps.data(), nc);
  }
  f.validate(n_modes);
  return f;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::from_json(const Json& j) {
  require_keys(j, "config", {"schema", "model", "experiment", "seeding", "output"});
  RunConfig cfg;
  if (!j.contains("schema")) throw std::invalid_argument("config: missing 'schema'");
  cfg.schema = j.at("schema").get<int>();
  if (cfg.schema != 1) throw std::invalid_argument("config: unsupported schema version");

  const Json& model = j.at("model");
  require_keys(model, "model",
               {"n_modes", "dt", "horizon", "forcing", "nonlinearity", "snapshot_stride"});
  cfg.solver.n_modes = model.at("n_modes").get<int>();
  cfg.solver.dt = model.at("dt").get<Real>();
  cfg.solver.horizon = model.at("horizon").get<Real>();
  if (model.contains("nonlinearity")) cfg.solver.nonlinearity = model.at("nonlinearity").get<bool>();
  if (model.contains("snapshot_stride"))
    cfg.solver.snapshot_stride = model.at("snapshot_stride").get<int>();
  cfg.forcing = parse_forcing(model.at("forcing"), cfg.solver.n_modes);
  cfg.solver.validate(cfg.forcing);

  if (j.contains("seeding")) {
    const Json& seeding = j.at("seeding");
    require_keys(seeding, "seeding", {"master_seed", "scheme"});
    if (seeding.contains("master_seed"))
      cfg.master_seed = seeding.at("master_seed").get<std::uint64_t>();
    cfg.seed_scheme = seeding.value("scheme", std::string(kSeedScheme));
    if (cfg.seed_scheme != kSeedScheme)
      throw std::invalid_argument("seeding: unknown scheme '" + cfg.seed_scheme + "'");
  } else {
    cfg.seed_scheme = kSeedScheme;
  }
  cfg.solver.seed = cfg.master_seed;

  if (j.contains("output")) {
    const Json& output = j.at("output");
    require_keys(output, "output", {"directory"});
    cfg.out_dir = output.value("directory", std::string("out"));
  }
  cfg.experiment = j.value("experiment", Json::object());
  return cfg;
}

Json RunConfig::to_json() const {
  Json j;
  j["schema"] = schema;
  j["model"]["n_modes"] = solver.n_modes;
  j["model"]["dt"] = solver.dt;
  j["model"]["horizon"] = solver.horizon;
  j["model"]["nonlinearity"] = solver.nonlinearity;
  j["model"]["snapshot_stride"] = solver.snapshot_stride;
  j["model"]["forcing"]["modes"] = forcing.modes;
  j["model"]["forcing"]["amps"] =
      std::vector<Real>(forcing.amps.data(), forcing.amps.data() + forcing.amps.size());
  j["seeding"]["master_seed"] = master_seed;
  j["seeding"]["scheme"] = seed_scheme;
  j["output"]["directory"] = out_dir;
  j["experiment"] = experiment;
  return j;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json().dump()); }

std::string RunConfig::hash_hex() const {
  std::ostringstream os;
  os << std::hex << hash();
  return os.str();
}

}  // namespace glsim
