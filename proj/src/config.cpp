#include "nnreach/config.hpp"

#include "nnreach/io.hpp"


namespace nnreach {

using nlohmann::json;

RunConfig::RunConfig() {
  reach.planes = {plane_from_string("xy"), plane_from_string("yz"), plane_from_string("zx")};
}

ProjectionPlane plane_from_string(const std::string& name) {
  auto axis = [&](char c) {
    switch (c) {
      case 'x': return 0;
      case 'y': return 1;
      case 'z': return 2;
      default: throw ConfigError("projection plane '" + name + "': axes must be x, y or z");
    }
  };
  if (name.size() != 2 || name[0] == name[1]) throw ConfigError("projection plane '" + name + "' must name two distinct axes");
  return {axis(name[0]), axis(name[1]), name};
}

void RunConfig::validate_all() const {
  quad.validate();
  if (!x0.valid() || x0.dim() != kStateDim) throw ConfigError("x0 must be a valid 12-dimensional box");
  if (!(control.noise_half_width >= 0.0)) throw ConfigError("control.noise_half_width must be >= 0");
  if (!control.amplitude.allFinite() || !control.frequency_hz.allFinite()) throw ConfigError("control sinusoid must be finite");
  if (n_traj == 0) throw ConfigError("dataset.n_traj must be >= 1");
  if (n_steps < 2) throw ConfigError("dataset.n_steps must be >= 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dataset.dt must be positive");
  train_config().validate();
  if (dmdc.window < 1) throw ConfigError("dmdc.window must be >= 1");
  if (dmdc.max_window < dmdc.window) throw ConfigError("dmdc.max_window must be >= dmdc.window");
  if (!(dmdc.svd_tol >= 0.0 && dmdc.svd_tol < 1.0)) throw ConfigError("dmdc.svd_tol must be in [0, 1)");
  if (reach.horizon < 1) throw ConfigError("reach.horizon must be >= 1");
  if (reach.normal_scheme != "axis") throw ConfigError("reach.normal_scheme must be 'axis'");
  if (reach.planes.empty()) throw ConfigError("reach.planes must not be empty");
  if (!(reach.max_condition > 1.0)) throw ConfigError("reach.max_condition must be > 1");
  if (validate.samples < 1) throw ConfigError("validate.samples must be >= 1");
  if (!(validate.slack_fraction >= 0.0)) throw ConfigError("validate.slack_fraction must be >= 0");
  if (!(validate.max_violation_fraction >= 0.0 && validate.max_violation_fraction <= 1.0))
    throw ConfigError("validate.max_violation_fraction must be in [0, 1]");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

DatasetSpec RunConfig::dataset_spec() const {
  DatasetSpec s;
  s.n_traj = n_traj;
  s.n_steps = n_steps;
  s.dt = dt;
  s.scenario = scenario;
  s.seed = seeds.dataset;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seeds.train;
  return t;
}

BoxSetd RunConfig::omega_at(std::size_t k) const {
  return control.omega_box(static_cast<double>(k) * dt, quad, scenario);
}

void RunConfig::override_seed(std::uint64_t seed) {
  seeds.dataset = seeds.train = seeds.excitation = seeds.mc = seed;
}

json to_json(const RunConfig& c) {
  json planes = json::array();
  for (const auto& p : c.reach.planes) planes.push_back(p.name);
  return {
      {"quad", io::to_json(c.quad)},
      {"x0", io::to_json(c.x0)},
      {"control", io::to_json(c.control)},
      {"scenario", to_string(c.scenario)},
      {"dataset", {{"n_traj", c.n_traj}, {"n_steps", c.n_steps}, {"dt", c.dt}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon},
        {"batch_size", c.train.batch_size},
        {"init_scale", c.train.init_scale},
        {"hidden", c.train.hidden},
        {"normalize", c.train.normalize}}},
      {"dmdc",
       {{"window", c.dmdc.window},
        {"svd_tol", c.dmdc.svd_tol},
        {"prior", c.dmdc.prior == LiftPrior::identity ? "identity" : "none"},
        {"max_window", c.dmdc.max_window}}},
      {"reach",
       {{"horizon", c.reach.horizon},
        {"normal_scheme", c.reach.normal_scheme},
        {"planes", planes},
        {"threads", c.reach.threads},
        {"max_condition", c.reach.max_condition}}},
      {"validate",
       {{"samples", c.validate.samples},
        {"scheme", to_string(c.validate.scheme)},
        {"slack_fraction", c.validate.slack_fraction},
        {"max_violation_fraction", c.validate.max_violation_fraction},
        {"truth", c.validate.truth}}},
      {"seeds", {{"dataset", c.seeds.dataset}, {"train", c.seeds.train}, {"excitation", c.seeds.excitation}, {"mc", c.seeds.mc}}},
      {"output_dir", c.output_dir.string()},
  };
}

namespace {

void check_keys(const json& given, const json& known, const std::string& prefix) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + prefix + key + "'");
    const json& k = known.at(key);
    // Box and vector-valued entries are checked by their parsers.
    if (k.is_object() && key != "x0") check_keys(value, k, prefix + key + ".");
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const RunConfig defaults;
  json merged = to_json(defaults);
  check_keys(j, merged, "");
  merged.merge_patch(j);

  RunConfig c;
  try {
    c.quad = io::quad_params_from_json(merged.at("quad"));
    c.x0 = io::box_from_json(merged.at("x0"));
    c.control = io::control_profile_from_json(merged.at("control"));
    c.scenario = scenario_from_string(merged.at("scenario").get<std::string>());

    const json& d = merged.at("dataset");
    c.n_traj = d.at("n_traj").get<std::size_t>();
    c.n_steps = d.at("n_steps").get<std::size_t>();
    c.dt = d.at("dt").get<double>();

    const json& t = merged.at("train");
    c.train.epochs = t.at("epochs").get<int>();
    c.train.learning_rate = t.at("learning_rate").get<double>();
    c.train.beta1 = t.at("beta1").get<double>();
    c.train.beta2 = t.at("beta2").get<double>();
    c.train.epsilon = t.at("epsilon").get<double>();
    c.train.batch_size = t.at("batch_size").get<std::size_t>();
    c.train.init_scale = t.at("init_scale").get<double>();
    c.train.hidden = t.at("hidden").get<int>();
    c.train.normalize = t.at("normalize").get<bool>();

    const json& m = merged.at("dmdc");
    c.dmdc.window = m.at("window").get<Eigen::Index>();
    c.dmdc.svd_tol = m.at("svd_tol").get<double>();
    const std::string prior = m.at("prior").get<std::string>();
    if (prior == "identity") c.dmdc.prior = LiftPrior::identity;
    else if (prior == "none") c.dmdc.prior = LiftPrior::none;
    else throw ConfigError("dmdc.prior must be 'identity' or 'none'");
    c.dmdc.max_window = m.at("max_window").get<Eigen::Index>();

    const json& r = merged.at("reach");
    c.reach.horizon = r.at("horizon").get<std::size_t>();
    c.reach.normal_scheme = r.at("normal_scheme").get<std::string>();
    c.reach.planes.clear();
    for (const auto& p : r.at("planes")) c.reach.planes.push_back(plane_from_string(p.get<std::string>()));
    c.reach.threads = r.at("threads").get<unsigned>();
    c.reach.max_condition = r.at("max_condition").get<double>();

    const json& v = merged.at("validate");
    c.validate.samples = v.at("samples").get<std::size_t>();
    c.validate.scheme = sample_scheme_from_string(v.at("scheme").get<std::string>());
    c.validate.slack_fraction = v.at("slack_fraction").get<double>();
    c.validate.max_violation_fraction = v.at("max_violation_fraction").get<double>();
    c.validate.truth = v.at("truth").get<bool>();

    const json& s = merged.at("seeds");
    c.seeds.dataset = s.at("dataset").get<std::uint64_t>();
    c.seeds.train = s.at("train").get<std::uint64_t>();
    c.seeds.excitation = s.at("excitation").get<std::uint64_t>();
    c.seeds.mc = s.at("mc").get<std::uint64_t>();

    c.output_dir = merged.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate_all();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = io::read_json(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j);
}

}  // namespace nnreach
