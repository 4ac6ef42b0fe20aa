#include "ddtune/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ddtune/util.hpp"

namespace ddtune {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key);
  }
  if (used != v.size())
    throw std::invalid_argument("config: trailing junk in value for " + key);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for " + key);
  }
  if (used != v.size())
    throw std::invalid_argument("config: trailing junk in value for " + key);
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw std::invalid_argument("config: empty element in list for " + key);
    out.push_back(parse_double(key, item));
  }
  if (out.empty())
    throw std::invalid_argument("config: empty list for " + key);
  return out;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  ScenarioConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "plant" && section != "controller" && section != "cost" &&
          section != "profile" && section != "noise" && section != "run")
        throw std::invalid_argument("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (qual == "plant.mass") cfg.mass = parse_double(qual, value);
    else if (qual == "plant.damping") cfg.damping = parse_double(qual, value);
    else if (qual == "plant.output_scale") cfg.output_scale = parse_double(qual, value);
    else if (qual == "controller.kp") cfg.gains.kp = parse_double(qual, value);
    else if (qual == "controller.ti") cfg.gains.ti = parse_double(qual, value);
    else if (qual == "controller.td") cfg.gains.td = parse_double(qual, value);
    else if (qual == "controller.n_filt") cfg.n_filt = parse_double(qual, value);
    else if (qual == "cost.w1") cfg.weights.w1 = parse_double(qual, value);
    else if (qual == "cost.w2") cfg.weights.w2 = parse_double(qual, value);
    else if (qual == "profile.displacement") cfg.bounds.displacement = parse_double(qual, value);
    else if (qual == "profile.v_max") cfg.bounds.v_max = parse_double(qual, value);
    else if (qual == "profile.a_max") cfg.bounds.a_max = parse_double(qual, value);
    else if (qual == "profile.j_max") cfg.bounds.j_max = parse_double(qual, value);
    else if (qual == "profile.s_max") cfg.bounds.s_max = parse_double(qual, value);
    else if (qual == "noise.sigma") cfg.sigma = parse_double(qual, value);
    else if (qual == "noise.seed") cfg.seed = parse_u64(qual, value);
    else if (qual == "run.ts") cfg.ts = parse_double(qual, value);
    else if (qual == "run.settle_time") cfg.settle_time = parse_double(qual, value);
    else if (qual == "run.gamma") cfg.options.gamma_schedule = parse_list(qual, value);
    else if (qual == "run.max_iterations")
      cfg.options.max_iterations = static_cast<int>(parse_u64(qual, value));
    else if (qual == "run.stop_tol") cfg.options.stop_tol = parse_double(qual, value);
    else if (qual == "run.lambda_reg") cfg.options.lambda_reg = parse_double(qual, value);
    else if (qual == "run.output_dir") cfg.output_dir = value;
    else
      throw std::invalid_argument("config: unknown key '" + key +
                                  "' in section [" + section + "]");
  }
  validate_scenario(cfg);
  return cfg;
}

void validate_scenario(const ScenarioConfig& cfg) {
  if (!(cfg.mass > 0.0)) throw std::invalid_argument("config: plant.mass must be > 0");
  if (cfg.damping < 0.0)
    throw std::invalid_argument("config: plant.damping must be >= 0");
  if (!(cfg.output_scale > 0.0))
    throw std::invalid_argument("config: plant.output_scale must be > 0");
  validate_gains(cfg.gains);
  if (!(cfg.n_filt > 0.0))
    throw std::invalid_argument("config: controller.n_filt must be > 0");
  if (cfg.weights.w1 < 0.0 || cfg.weights.w2 < 0.0 ||
      (cfg.weights.w1 == 0.0 && cfg.weights.w2 == 0.0))
    throw std::invalid_argument("config: cost weights must be >= 0, not both 0");
  if (cfg.bounds.displacement == 0.0)
    throw std::invalid_argument("config: profile.displacement must be nonzero");
  if (!(cfg.bounds.v_max > 0.0) || !(cfg.bounds.a_max > 0.0) ||
      !(cfg.bounds.j_max > 0.0) || !(cfg.bounds.s_max > 0.0))
    throw std::invalid_argument("config: profile bounds must be > 0");
  if (cfg.sigma < 0.0)
    throw std::invalid_argument("config: noise.sigma must be >= 0");
  if (!(cfg.ts > 0.0)) throw std::invalid_argument("config: run.ts must be > 0");
  if (cfg.settle_time < 0.0)
    throw std::invalid_argument("config: run.settle_time must be >= 0");
  if (cfg.options.gamma_schedule.empty())
    throw std::invalid_argument("config: run.gamma must not be empty");
  for (double g : cfg.options.gamma_schedule)
    if (!(g > 0.0))
      throw std::invalid_argument("config: run.gamma entries must be > 0");
  if (cfg.options.max_iterations < 0)
    throw std::invalid_argument("config: run.max_iterations must be >= 0");
  if (!(cfg.options.stop_tol >= 0.0))
    throw std::invalid_argument("config: run.stop_tol must be >= 0");
}

MotionProfile scenario_profile(const ScenarioConfig& cfg) {
  return plan_fourth_order(cfg.bounds, cfg.ts);
}

LoopSetup make_loop_setup(const ScenarioConfig& cfg) {
  const MotionProfile profile = scenario_profile(cfg);
  LoopSetup setup;
  setup.plant = bilinear({cfg.output_scale}, {0.0, cfg.damping, cfg.mass}, cfg.ts);
  setup.ts = cfg.ts;
  setup.n_filt = cfg.n_filt;
  setup.weights = cfg.weights;
  setup.noise_sigma = cfg.sigma;
  setup.noise_seed = cfg.seed;
  setup.reference.reserve(profile.size() +
                          static_cast<std::size_t>(cfg.settle_time / cfg.ts) + 1);
  for (double p : profile.pos) setup.reference.push_back(p * cfg.output_scale);
  const std::size_t hold =
      static_cast<std::size_t>(std::llround(cfg.settle_time / cfg.ts));
  const double final_value = setup.reference.back();
  for (std::size_t k = 0; k < hold; ++k) setup.reference.push_back(final_value);
  return setup;
}

void write_tune_outputs(const std::vector<IterationReport>& reports,
                        const ScenarioConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream log(fs::path(dir) / "iterations.log");
  if (!log) throw std::runtime_error("cannot write iteration log in " + dir);
  for (const IterationReport& rep : reports) {
    log << "index=" << rep.index << " rho=" << format_double(rep.rho[0]) << ','
        << format_double(rep.rho[1]) << ',' << format_double(rep.rho[2])
        << " J=" << format_double(rep.cost.total)
        << " J_e=" << format_double(rep.cost.tracking)
        << " J_udot=" << format_double(rep.cost.variation) << " grad="
        << format_double(rep.has_gradient ? rep.estimate.grad(0) : 0.0) << ','
        << format_double(rep.has_gradient ? rep.estimate.grad(1) : 0.0) << ','
        << format_double(rep.has_gradient ? rep.estimate.grad(2) : 0.0)
        << " step=" << format_double(rep.step_gamma)
        << " accepted=" << (rep.accepted ? 1 : 0) << '\n';

    const auto write_rec = [&](const ExperimentRecord& rec, int k) {
      if (rec.size() == 0) return;
      std::ostringstream name;
      name << "iter" << rep.index << "_exp" << k << ".csv";
      record_to_csv_file(rec, (fs::path(dir) / name.str()).string());
    };
    write_rec(rep.records.rec1, 1);
    write_rec(rep.records.rec2, 2);
    write_rec(rep.records.rec3, 3);
  }

  std::ofstream sum(fs::path(dir) / "summary.txt");
  if (!sum) throw std::runtime_error("cannot write summary in " + dir);
  const IterationReport& first = reports.front();
  const IterationReport& last = reports.back();
  const PidGains g0 = to_gains(first.rho);
  const PidGains g1 = to_gains(last.rho);
  sum << "              before            after\n";
  sum << "Kp            " << format_double(g0.kp) << "  " << format_double(g1.kp) << '\n';
  sum << "Ti            " << format_double(g0.ti) << "  " << format_double(g1.ti) << '\n';
  sum << "Td            " << format_double(g0.td) << "  " << format_double(g1.td) << '\n';
  sum << "J_tracking    " << format_double(first.cost.tracking) << "  "
      << format_double(last.cost.tracking) << '\n';
  sum << "J_variation   " << format_double(first.cost.variation) << "  "
      << format_double(last.cost.variation) << '\n';
  sum << "J_total       " << format_double(first.cost.total) << "  "
      << format_double(last.cost.total) << '\n';
  sum << "iterations    " << reports.size() << '\n';
}

}  // namespace ddtune
