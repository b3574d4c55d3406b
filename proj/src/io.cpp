#include "nnreach/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nnreach::io {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

double parse_double(const std::string& s, const fs::path& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw IoError(where.string() + ": cannot parse number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw IoError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) throw IoError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw IoError("matrix entry is not a number");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw IoError("vector must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!j[i].is_number()) throw IoError("vector entry is not a number");
    v(i) = j[i].get<double>();
  }
  return v;
}

json to_json(const QuadParams& p) {
  return {{"m", p.m},     {"g", p.g},   {"Ixx", p.Ixx}, {"Iyy", p.Iyy},
          {"Izz", p.Izz}, {"kf", p.kf}, {"km", p.km},   {"l", p.l},
          {"translational_form", p.form == TranslationalForm::printed ? "printed" : "textbook"}};
}

QuadParams quad_params_from_json(const json& j) {
  QuadParams p;
  p.m = j.value("m", p.m);
  p.g = j.value("g", p.g);
  p.Ixx = j.value("Ixx", p.Ixx);
  p.Iyy = j.value("Iyy", p.Iyy);
  p.Izz = j.value("Izz", p.Izz);
  p.kf = j.value("kf", p.kf);
  p.km = j.value("km", p.km);
  p.l = j.value("l", p.l);
  const std::string form = j.value("translational_form", std::string("printed"));
  if (form == "printed") p.form = TranslationalForm::printed;
  else if (form == "textbook") p.form = TranslationalForm::textbook;
  else throw ConfigError("translational_form must be 'printed' or 'textbook'");
  return p;
}

json to_json(const ControlProfile& p) {
  return {{"amplitude", to_json(Eigen::VectorXd(p.amplitude))},
          {"frequency_hz", to_json(Eigen::VectorXd(p.frequency_hz))},
          {"noise_half_width", p.noise_half_width},
          {"hover_override", p.hover_override}};
}

ControlProfile control_profile_from_json(const json& j) {
  ControlProfile p;
  auto four = [](const json& v, const char* name) {
    if (v.is_number()) return Eigen::Vector4d::Constant(v.get<double>()).eval();
    const Eigen::VectorXd x = vector_from_json(v);
    if (x.size() != 4) throw ConfigError(std::string(name) + " needs 4 entries");
    return Eigen::Vector4d(x);
  };
  if (j.contains("amplitude")) p.amplitude = four(j["amplitude"], "amplitude");
  if (j.contains("frequency_hz")) p.frequency_hz = four(j["frequency_hz"], "frequency_hz");
  p.noise_half_width = j.value("noise_half_width", p.noise_half_width);
  p.hover_override = j.value("hover_override", p.hover_override);
  if (!(p.noise_half_width >= 0.0)) throw ConfigError("noise_half_width must be >= 0");
  return p;
}

json to_json(const BoxSetd& b) { return {{"center", to_json(b.center)}, {"half_width", to_json(b.half_width)}}; }

BoxSetd box_from_json(const json& j) {
  BoxSetd b(vector_from_json(j.at("center")), vector_from_json(j.at("half_width")));
  if (!b.valid()) throw ConfigError("box: center/half_width mismatch or negative half width");
  return b;
}

namespace {

constexpr const char* kCsvHeader = "t,x,y,z,vx,vy,vz,phi,theta,psi,p,q,r,w1,w2,w3,w4";

fs::path traj_path(const fs::path& dir, std::size_t k) { return dir / ("traj_" + std::to_string(k) + ".csv"); }

}  // namespace

void write_dataset(const fs::path& dir, const TrajectoryDataset& ds) {
  fs::create_directories(dir);
  json manifest = {{"dt", ds.dt},
                   {"nT", ds.trajectories.size()},
                   {"N", ds.steps()},
                   {"seed", ds.seed},
                   {"scenario", to_string(ds.scenario)},
                   {"params", to_json(ds.params)},
                   {"control", to_json(ds.profile)},
                   {"x0", to_json(ds.x0)}};
  write_json(dir / "manifest.json", manifest);

  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    const Trajectory& tr = ds.trajectories[k];
    std::string out = std::string(kCsvHeader) + "\n";
    for (std::size_t n = 0; n < tr.states.size(); ++n) {
      out += format_double(static_cast<double>(n) * ds.dt);
      for (int j = 0; j < kStateDim; ++j) out += "," + format_double(tr.states[n](j));
      for (int j = 0; j < kRotorCount; ++j) out += n < tr.inputs.size() ? "," + format_double(tr.inputs[n](j)) : ",";
      out += "\n";
    }
    write_text(traj_path(dir, k), out);
  }
}

TrajectoryDataset read_dataset(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  TrajectoryDataset ds;
  try {
    ds.dt = get<double>(m, "dt");
    ds.seed = get<std::uint64_t>(m, "seed");
    ds.scenario = scenario_from_string(get<std::string>(m, "scenario"));
    ds.params = quad_params_from_json(m.at("params"));
    ds.profile = control_profile_from_json(m.at("control"));
    ds.x0 = box_from_json(m.at("x0"));
  } catch (const json::exception& e) {
    throw IoError("manifest: " + std::string(e.what()));
  }
  const auto nT = get<std::size_t>(m, "nT");
  const auto N = get<std::size_t>(m, "N");

  ds.trajectories.resize(nT);
  for (std::size_t k = 0; k < nT; ++k) {
    const fs::path path = traj_path(dir, k);
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != split(kCsvHeader, ','))
      throw IoError(path.string() + ": unexpected header");
    Trajectory& tr = ds.trajectories[k];
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      const auto cells = split(line, ',');
      if (cells.size() != 17) throw IoError(path.string() + ": expected 17 columns");
      State12d s;
      for (int j = 0; j < kStateDim; ++j) s(j) = parse_double(cells[1 + j], path);
      tr.states.push_back(s);
      if (!cells[13].empty()) {
        RotorCommandd w;
        for (int j = 0; j < kRotorCount; ++j) w(j) = parse_double(cells[13 + j], path);
        tr.inputs.push_back(w);
      }
    }
    if (tr.states.size() != N + 1 || tr.inputs.size() != N)
      throw IoError(path.string() + ": expected " + std::to_string(N + 1) + " rows");
  }
  return ds;
}

void write_model(const fs::path& path, const MlpParameters& params, double dt) {
  params.validate();
  json j = {{"layer_sizes", {params.input_dim(), params.hidden, params.n_state}},
            {"n_state", params.n_state},
            {"n_control", params.n_control},
            {"activation", params.activation},
            {"weights", {to_json(params.weights.W1), to_json(params.weights.W2)}},
            {"biases", {to_json(params.weights.b1), to_json(params.weights.b2)}},
            {"normalization", nullptr},
            {"seed", params.seed},
            {"final_loss", params.final_loss},
            {"dt", dt}};
  if (params.normalization) {
    const auto& n = *params.normalization;
    j["normalization"] = {{"input_shift", to_json(n.input_shift)},
                          {"input_inv_scale", to_json(n.input_inv_scale)},
                          {"output_scale", to_json(n.output_scale)}};
  }
  write_json(path, j);
}

MlpParameters read_model(const fs::path& path, double* dt) {
  const json j = read_json(path);
  MlpParameters p;
  try {
    const auto sizes = get<std::vector<int>>(j, "layer_sizes");
    if (sizes.size() != 3) throw IoError("layer_sizes must have 3 entries");
    p.n_state = get<int>(j, "n_state");
    p.n_control = get<int>(j, "n_control");
    p.hidden = sizes[1];
    if (sizes[0] != p.input_dim() || sizes[2] != p.n_state) throw IoError("layer_sizes disagree with n_state/n_control");
    p.activation = get<std::string>(j, "activation");
    const json& w = j.at("weights");
    const json& b = j.at("biases");
    if (!w.is_array() || w.size() != 2 || !b.is_array() || b.size() != 2) throw IoError("expected two weight layers");
    p.weights.W1 = matrix_from_json(w[0]);
    p.weights.W2 = matrix_from_json(w[1]);
    p.weights.b1 = vector_from_json(b[0]);
    p.weights.b2 = vector_from_json(b[1]);
    if (j.contains("normalization") && !j["normalization"].is_null()) {
      const json& n = j["normalization"];
      p.normalization = Normalization{vector_from_json(n.at("input_shift")), vector_from_json(n.at("input_inv_scale")),
                                      vector_from_json(n.at("output_scale"))};
    }
    p.seed = get<std::uint64_t>(j, "seed");
    p.final_loss = get<double>(j, "final_loss");
    if (dt) *dt = get<double>(j, "dt");
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  try {
    p.validate();
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return p;
}

void write_loss_csv(const fs::path& path, const std::vector<double>& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) out += std::to_string(e) + "," + format_double(history[e]) + "\n";
  write_text(path, out);
}

std::vector<double> read_loss_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "epoch,loss") throw IoError(path.string() + ": unexpected header");
  std::vector<double> h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw IoError(path.string() + ": expected 2 columns");
    h.push_back(parse_double(cells[1], path));
  }
  return h;
}

void write_ltv(const fs::path& path, const LtvStep<double>& step, double dt) {
  write_json(path, {{"k", step.k},
                    {"dt", dt},
                    {"A", to_json(step.A)},
                    {"B", to_json(step.B)},
                    {"diagnostics",
                     {{"rank", step.rank},
                      {"smallest_retained_sv", step.smallest_retained_sv},
                      {"residual", step.residual},
                      {"window", step.window}}}});
}

LtvStep<double> read_ltv(const fs::path& path) {
  const json j = read_json(path);
  LtvStep<double> s;
  try {
    s.k = get<std::size_t>(j, "k");
    s.A = matrix_from_json(j.at("A"));
    s.B = matrix_from_json(j.at("B"));
    const json& d = j.at("diagnostics");
    s.rank = get<Eigen::Index>(d, "rank");
    s.smallest_retained_sv = get<double>(d, "smallest_retained_sv");
    s.residual = get<double>(d, "residual");
    s.window = get<Eigen::Index>(d, "window");
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (s.A.rows() != s.A.cols() || s.B.rows() != s.A.rows()) throw IoError(path.string() + ": inconsistent shapes");
  return s;
}

void write_reach(const fs::path& path, const ContactFront<double>& front, double wall_seconds) {
  json hyperplanes = json::array();
  for (Eigen::Index i = 0; i < front.size(); ++i) {
    json h = {{"normal", to_json(Eigen::VectorXd(front.normals.col(i)))},
              {"offset", front.offsets(i)},
              {"contact", to_json(Eigen::VectorXd(front.contacts.col(i)))}};
    h["control"] = front.controls.cols() > i ? to_json(Eigen::VectorXd(front.controls.col(i))) : json(nullptr);
    hyperplanes.push_back(std::move(h));
  }
  write_json(path, {{"k", front.k}, {"wall_time_s", wall_seconds}, {"hyperplanes", hyperplanes}});
}

ContactFront<double> read_reach(const fs::path& path) {
  const json j = read_json(path);
  ContactFront<double> f;
  try {
    f.k = get<std::size_t>(j, "k");
    const json& hs = j.at("hyperplanes");
    const auto m = static_cast<Eigen::Index>(hs.size());
    if (m == 0) throw IoError("no hyperplanes");
    const Eigen::Index n = static_cast<Eigen::Index>(hs[0].at("normal").size());
    f.normals.resize(n, m);
    f.contacts.resize(n, m);
    f.offsets.resize(m);
    const bool has_controls = !hs[0].at("control").is_null();
    if (has_controls) f.controls.resize(static_cast<Eigen::Index>(hs[0]["control"].size()), m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const json& h = hs[i];
      const Eigen::VectorXd c = vector_from_json(h.at("normal"));
      const Eigen::VectorXd x = vector_from_json(h.at("contact"));
      if (c.size() != n || x.size() != n) throw IoError("hyperplane dimension mismatch");
      f.normals.col(i) = c;
      f.contacts.col(i) = x;
      f.offsets(i) = get<double>(h, "offset");
      if (has_controls) {
        const Eigen::VectorXd u = vector_from_json(h.at("control"));
        if (u.size() != f.controls.rows()) throw IoError("control dimension mismatch");
        f.controls.col(i) = u;
      }
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return f;
}

void write_polygon_csv(const fs::path& path, const Polygon<double>& poly) {
  std::string out = "a,b\n";
  for (const auto& p : poly) out += format_double(p.x()) + "," + format_double(p.y()) + "\n";
  write_text(path, out);
}

Polygon<double> read_polygon_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "a,b") throw IoError(path.string() + ": unexpected header");
  Polygon<double> poly;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw IoError(path.string() + ": expected 2 columns");
    poly.emplace_back(parse_double(cells[0], path), parse_double(cells[1], path));
  }
  return poly;
}

json to_json(const ContainmentReport& report) {
  json steps = json::array();
  for (const auto& s : report.steps) {
    steps.push_back({{"k", s.k},
                     {"violations", s.violations},
                     {"violation_fraction", s.violation_fraction},
                     {"max_signed_violation", s.max_signed_violation},
                     {"support_gap", to_json(s.support_gap)}});
  }
  return {{"max_violation_fraction", report.max_violation_fraction()},
          {"total_violations", report.total_violations()},
          {"min_support_gap", report.min_support_gap()},
          {"steps", steps}};
}

}  // namespace nnreach::io
