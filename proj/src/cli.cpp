#include "lramp/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lramp/amp.hpp"
#include "lramp/instance.hpp"
#include "lramp/spectral.hpp"
#include "lramp/state_evolution.hpp"
#include "lramp/transitions.hpp"

namespace lramp::cli {

namespace {

using nlohmann::json;

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& err) {
    throw std::invalid_argument("config " + path + ": " + err.what());
  }
  return j;
}

template <typename T>
T field_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config field '" + key + "' has the wrong type");
  }
}

template <typename T>
T required_field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw std::invalid_argument("config field '" + key + "' is missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config field '" + key + "' has the wrong type");
  }
}

PriorModel parse_prior(const json& j, const std::string& where) {
  const std::string kind = required_field<std::string>(j, "kind");
  if (kind == "community") return PriorModel::make_community(required_field<int>(j, "rank"));
  if (kind == "rademacher") return PriorModel::make_rademacher();
  if (kind == "gaussian") {
    const int rank = required_field<int>(j, "rank");
    if (!j.contains("mean") && !j.contains("cov")) return PriorModel::make_gaussian(rank);
    Vec mean = Vec::Zero(rank);
    Mat cov = Mat::Identity(rank, rank);
    if (j.contains("mean")) {
      const auto values = required_field<std::vector<double>>(j, "mean");
      if (static_cast<int>(values.size()) != rank)
        throw std::invalid_argument(where + ".mean length must equal rank");
      for (int i = 0; i < rank; ++i) mean(i) = values[i];
    }
    if (j.contains("cov")) {
      const auto rows = required_field<std::vector<std::vector<double>>>(j, "cov");
      if (static_cast<int>(rows.size()) != rank)
        throw std::invalid_argument(where + ".cov must be rank x rank");
      for (int i = 0; i < rank; ++i) {
        if (static_cast<int>(rows[i].size()) != rank)
          throw std::invalid_argument(where + ".cov must be rank x rank");
        for (int c = 0; c < rank; ++c) cov(i, c) = rows[i][c];
      }
    }
    return PriorModel::make_gaussian(mean, cov);
  }
  throw std::invalid_argument(where + ".kind must be community, gaussian or rademacher");
}

ChannelModel parse_channel(const json& j) {
  const std::string kind = required_field<std::string>(j, "kind");
  if (kind == "gaussian") return ChannelModel::make_gaussian(required_field<double>(j, "variance"));
  if (kind == "sbm") {
    const double p_out = required_field<double>(j, "p_out");
    if (j.contains("delta")) return ChannelModel::make_sbm_with_delta(p_out, required_field<double>(j, "delta"));
    return ChannelModel::make_sbm(p_out, required_field<double>(j, "mu"));
  }
  if (kind == "exponential") return ChannelModel::make_exponential(required_field<double>(j, "scale"));
  throw std::invalid_argument("channel.kind must be gaussian, sbm or exponential");
}

Mat parse_coupling(const json& config, int rank) {
  if (!config.contains("coupling") || config.at("coupling") == "identity")
    return Mat::Identity(rank, rank);
  const auto rows = required_field<std::vector<std::vector<double>>>(config, "coupling");
  if (static_cast<int>(rows.size()) != rank)
    throw std::invalid_argument("config field 'coupling' must be rank x rank");
  Mat k(rank, rank);
  for (int i = 0; i < rank; ++i) {
    if (static_cast<int>(rows[i].size()) != rank)
      throw std::invalid_argument("config field 'coupling' must be rank x rank");
    for (int c = 0; c < rank; ++c) k(i, c) = rows[i][c];
  }
  return k;
}

AmpOptions parse_amp_options(const json& config) {
  AmpOptions options;
  if (!config.contains("amp")) return options;
  const json& amp = config.at("amp");
  options.damping = field_or<double>(amp, "damping", 0.0);
  options.t_min = field_or<int>(amp, "t_min", 10);
  options.t_max = field_or<int>(amp, "t_max", 1000);
  options.tol = field_or<double>(amp, "tol", 1e-6);
  if (options.t_min < 0 || options.t_max < 1 || options.t_min >= options.t_max)
    throw std::invalid_argument("config fields 'amp.t_min'/'amp.t_max' are inconsistent");
  if (!(options.tol > 0.0)) throw std::invalid_argument("config field 'amp.tol' must be > 0");
  return options;
}

AmpInit parse_init(const json& config) {
  const std::string init =
      config.contains("amp") ? field_or<std::string>(config.at("amp"), "init", "uninformative")
                             : "uninformative";
  if (init == "uninformative") return AmpInit::uninformative;
  if (init == "informative") return AmpInit::informative;
  throw std::invalid_argument("config field 'amp.init' must be uninformative or informative");
}

QuadratureSpec parse_quadrature(const json& config, std::uint64_t fallback_seed) {
  QuadratureSpec quad = QuadratureSpec::monte_carlo(100000, fallback_seed);
  if (!config.contains("quadrature")) return quad;
  const json& q = config.at("quadrature");
  const std::string method = field_or<std::string>(q, "method", "monte-carlo");
  if (method == "monte-carlo") {
    quad = QuadratureSpec::monte_carlo(field_or<int>(q, "samples", 100000),
                                       field_or<std::uint64_t>(q, "seed", fallback_seed));
  } else if (method == "gauss-hermite") {
    quad = QuadratureSpec::gauss_hermite(field_or<int>(q, "nodes", 20));
  } else {
    throw std::invalid_argument("config field 'quadrature.method' must be monte-carlo or gauss-hermite");
  }
  return quad;
}

struct SweepSpec {
  double start = 0.05;
  double stop = 0.25;
  int count = 9;
  bool log_spacing = false;
  bool rescale = false;
  std::string branch = "both";
};

SweepSpec parse_sweep(const json& config) {
  SweepSpec sweep;
  if (!config.contains("sweep")) return sweep;
  const json& s = config.at("sweep");
  sweep.start = field_or<double>(s, "start", sweep.start);
  sweep.stop = field_or<double>(s, "stop", sweep.stop);
  sweep.count = field_or<int>(s, "count", sweep.count);
  const std::string spacing = field_or<std::string>(s, "spacing", "linear");
  if (spacing != "linear" && spacing != "log")
    throw std::invalid_argument("config field 'sweep.spacing' must be linear or log");
  sweep.log_spacing = spacing == "log";
  sweep.rescale = field_or<bool>(s, "rescale_axis", false);
  sweep.branch = field_or<std::string>(s, "branch", "both");
  if (sweep.branch != "both" && sweep.branch != "uninformative" && sweep.branch != "informative")
    throw std::invalid_argument("config field 'sweep.branch' must be both, uninformative or informative");
  if (sweep.count < 1 || !(sweep.start > 0.0) || !(sweep.stop >= sweep.start))
    throw std::invalid_argument("config field 'sweep' range is invalid");
  return sweep;
}

std::vector<double> sweep_values(const SweepSpec& sweep) {
  std::vector<double> deltas;
  if (sweep.count == 1) {
    deltas.push_back(sweep.start);
    return deltas;
  }
  for (int i = 0; i < sweep.count; ++i) {
    const double f = static_cast<double>(i) / (sweep.count - 1);
    deltas.push_back(sweep.log_spacing
                         ? sweep.start * std::pow(sweep.stop / sweep.start, f)
                         : sweep.start + f * (sweep.stop - sweep.start));
  }
  return deltas;
}

PlantedInstance build_instance(const json& config, std::uint64_t seed) {
  const std::string model = field_or<std::string>(config, "model", "xkx");
  const PriorModel prior = parse_prior(config.contains("prior") ? config.at("prior") : json{{"kind", "community"}, {"rank", 2}}, "prior");
  const ChannelModel channel = parse_channel(
      config.contains("channel") ? config.at("channel") : json{{"kind", "gaussian"}, {"variance", 1.0}});
  const int n = required_field<int>(config, "n");
  if (model == "xkx") {
    return generate_xkx(prior, channel, parse_coupling(config, prior.rank), n, seed);
  }
  if (model == "uv") {
    const PriorModel prior_v =
        config.contains("prior_v") ? parse_prior(config.at("prior_v"), "prior_v") : prior;
    const double alpha = field_or<double>(config, "alpha", 1.0);
    return generate_uv(prior, prior_v, channel, n, alpha, seed);
  }
  throw std::invalid_argument("config field 'model' must be xkx or uv");
}

json config_echo(const json& config, std::uint64_t seed) {
  json echo = config;
  echo["seed"] = seed;
  return echo;
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open output file " + path);
  return out;
}

// --------------------------------------------------------------------------
// subcommand argument handling

struct Args {
  std::string config_path;
  std::string instance_path;
  std::string out_path;
  std::string trace_path;
  std::string csv_prefix;
  std::vector<int> ranks;
  int top_k = 0;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads;
};

Args parse_args(const std::vector<std::string>& args, std::size_t start) {
  Args parsed;
  auto need_value = [&](std::size_t& i, const std::string& flag) -> std::string {
    if (i + 1 >= args.size()) throw std::invalid_argument("flag " + flag + " needs a value");
    return args[++i];
  };
  for (std::size_t i = start; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "-c" || a == "--config") parsed.config_path = need_value(i, a);
    else if (a == "--instance") parsed.instance_path = need_value(i, a);
    else if (a == "--out" || a == "-o") parsed.out_path = need_value(i, a);
    else if (a == "--trace") parsed.trace_path = need_value(i, a);
    else if (a == "--csv") parsed.csv_prefix = need_value(i, a);
    else if (a == "-k" || a == "--top-k") parsed.top_k = std::stoi(need_value(i, a));
    else if (a == "--seed") parsed.seed_override = std::stoull(need_value(i, a));
    else if (a == "--threads") parsed.threads = std::stoi(need_value(i, a));
    else if (a == "--r" || a == "--ranks") {
      std::stringstream ss(need_value(i, a));
      std::string tok;
      while (std::getline(ss, tok, ',')) parsed.ranks.push_back(std::stoi(tok));
    } else {
      throw std::invalid_argument("unknown flag '" + a + "'");
    }
  }
  if (parsed.threads) {
#ifdef _OPENMP
    if (*parsed.threads < 1) throw std::invalid_argument("flag --threads needs a positive value");
    omp_set_num_threads(*parsed.threads);
#endif
    Eigen::setNbThreads(*parsed.threads);
  }
  return parsed;
}

json require_config(const Args& args) {
  if (args.config_path.empty()) throw std::invalid_argument("missing -c/--config <file>");
  return load_json(args.config_path);
}

std::uint64_t resolve_seed(const json& config, const Args& args) {
  if (args.seed_override) return *args.seed_override;
  return field_or<std::uint64_t>(config, "seed", 1);
}

std::string resolve_out(const json& config, const Args& args, const std::string& fallback) {
  if (!args.out_path.empty()) return args.out_path;
  return field_or<std::string>(config, "out", fallback);
}

// --------------------------------------------------------------------------
// subcommands

int cmd_gen(const Args& args, std::ostream& out) {
  const json config = require_config(args);
  const std::uint64_t seed = resolve_seed(config, args);
  const PlantedInstance inst = build_instance(config, seed);
  const std::string path = resolve_out(config, args, "instance.bin");
  save_instance(inst, path);
  if (!args.csv_prefix.empty())
    export_csv(inst, args.csv_prefix + "_y.csv", args.csv_prefix + "_s.csv");
  out << "wrote " << path << ": model=" << to_string(inst.model) << " n=" << inst.n
      << " m=" << inst.m << " r=" << inst.r << " delta=" << fmt(inst.delta)
      << " seed=" << inst.seed << "\n";
  return kExitOk;
}

int cmd_amp(const Args& args, std::ostream& out) {
  const json config = require_config(args);
  const std::uint64_t seed = resolve_seed(config, args);
  PlantedInstance inst = args.instance_path.empty() ? build_instance(config, seed)
                                                    : load_instance(args.instance_path);
  const AmpOptions base_options = parse_amp_options(config);
  const AmpInit init = parse_init(config);

  json report;
  report["config"] = config_echo(config, seed);
  report["model"] = to_string(inst.model);
  report["delta"] = inst.delta;

  std::ofstream trace;
  const std::string trace_path =
      !args.trace_path.empty()
          ? args.trace_path
          : (config.contains("amp") ? field_or<std::string>(config.at("amp"), "trace", "") : "");

  bool diverged = false;
  if (inst.model == ModelKind::xkx) {
    AmpOptions options = base_options;
    if (!trace_path.empty()) {
      trace = open_output(trace_path);
      trace << "t,diff,mse,overlap\n";
      const PlantedInstance* inst_ptr = &inst;
      options.on_iteration = [&trace, inst_ptr](const AmpState& state) {
        double mse_now = std::nan("");
        double overlap_now = std::nan("");
        if (inst_ptr->has_truth()) {
          mse_now = mse(state.a, inst_ptr->x_truth);
          if (inst_ptr->prior.kind == PriorKind::community)
            overlap_now = community_overlap(state.a, inst_ptr->x_truth, inst_ptr->r).overlap;
        }
        trace << state.t << "," << fmt(state.diff) << "," << fmt(mse_now) << ","
              << fmt(overlap_now) << "\n";
      };
    }
    const AmpReport amp = run_amp_xkx(inst, inst.prior, init, options);
    diverged = amp.diverged;
    report["report"] = {
        {"converged", amp.converged},   {"diverged", amp.diverged},
        {"iterations", amp.iterations}, {"final_diff", amp.final_diff},
        {"free_energy", amp.free_energy}, {"mse", amp.mse_value},
        {"mse_aligned", amp.mse_aligned}, {"overlap", amp.overlap},
        {"overlap_greedy", amp.overlap_greedy}, {"note", amp.note},
        {"q_hat", matrix_to_json(amp.q_hat)},
    };
    if (amp.m_hat.size() > 0) report["report"]["m_hat"] = matrix_to_json(amp.m_hat);
  } else {
    AmpOptions options = base_options;
    if (!trace_path.empty()) {
      trace = open_output(trace_path);
      trace << "t,diff,mse,overlap\n";
      const PlantedInstance* inst_ptr = &inst;
      options.on_iteration_uv = [&trace, inst_ptr](const AmpUvState& state) {
        double mse_now = std::nan("");
        if (inst_ptr->has_truth())
          mse_now = 0.5 * (mse(state.u, inst_ptr->u_truth) + mse(state.v, inst_ptr->v_truth));
        trace << state.t << "," << fmt(state.diff) << "," << fmt(mse_now) << ",nan\n";
      };
    }
    const AmpUvReport amp = run_amp_uv(inst, inst.prior, inst.prior_v, init, options);
    diverged = amp.diverged;
    report["report"] = {
        {"converged", amp.converged},   {"diverged", amp.diverged},
        {"iterations", amp.iterations}, {"final_diff", amp.final_diff},
        {"free_energy", amp.free_energy}, {"mse_u", amp.mse_u},
        {"mse_v", amp.mse_v},           {"note", amp.note},
        {"q_u_hat", matrix_to_json(amp.q_u_hat)},
        {"q_v_hat", matrix_to_json(amp.q_v_hat)},
    };
    if (amp.m_u_hat.size() > 0) {
      report["report"]["m_u_hat"] = matrix_to_json(amp.m_u_hat);
      report["report"]["m_v_hat"] = matrix_to_json(amp.m_v_hat);
    }
  }

  const std::string out_path = resolve_out(config, args, "");
  if (!out_path.empty()) {
    std::ofstream file = open_output(out_path);
    file << report.dump(2) << "\n";
  }
  out << report.dump(2) << "\n";
  return diverged ? kExitNumerical : kExitOk;
}

int cmd_se(const Args& args, std::ostream& out) {
  const json config = require_config(args);
  const std::uint64_t seed = resolve_seed(config, args);
  const std::string model = field_or<std::string>(config, "model", "xkx");
  const PriorModel prior = parse_prior(required_field<json>(config, "prior"), "prior");
  const SweepSpec sweep = parse_sweep(config);
  const QuadratureSpec quad = parse_quadrature(config, seed);
  const Mat coupling = parse_coupling(config, prior.rank);
  const int t_max = field_or<int>(config, "t_max", 2000);
  const double tol = field_or<double>(config, "tol", 1e-8);

  std::ostringstream csv;
  csv << "# config: " << config_echo(config, seed).dump() << "\n";
  csv << "delta,b_or_trq,mse,free_energy,converged,iterations,branch";
  if (sweep.rescale) csv << ",delta_r2";
  csv << "\n";

  std::vector<std::string> branches;
  if (sweep.branch == "both") branches = {"uninformative", "informative"};
  else branches = {sweep.branch};

  const bool scalar_path = model == "xkx" && prior.kind == PriorKind::community &&
                           coupling.isApprox(Mat::Identity(prior.rank, prior.rank));
  for (const double delta : sweep_values(sweep)) {
    for (const std::string& branch : branches) {
      const bool informative = branch == "informative";
      double order_param = 0.0, mse_value = 0.0, phi = 0.0;
      bool converged = false;
      int iterations = 0;
      if (model == "uv") {
        const PriorModel prior_v =
            config.contains("prior_v") ? parse_prior(config.at("prior_v"), "prior_v") : prior;
        const double alpha = field_or<double>(config, "alpha", 1.0);
        SeUvEvaluator se(prior, prior_v, alpha, delta, quad);
        SeUvState init = informative ? se.informative_state() : se.zero_state();
        if (!informative) {
          init.q_u = 1e-6 * Mat::Identity(prior.rank, prior.rank);
          init.q_v = init.q_u;
          init.m_u = init.q_u;
          init.m_v = init.q_u;
        }
        init.nishimori_locked = true;
        const SeUvFixedPoint fp = se.fixed_point(init, tol, t_max);
        order_param = fp.state.q_u.trace();
        mse_value = prior.second_moment() - fp.state.q_u.trace();
        phi = se.free_energy(fp.state).value;
        converged = fp.converged;
        iterations = fp.iterations;
      } else if (scalar_path) {
        const BIterationResult fp =
            iterate_b(prior.rank, delta, informative ? 1.0 : 1e-6, quad, 1e-9, t_max);
        order_param = fp.b;
        mse_value = community_mse_from_b(prior.rank, fp.b);
        SeEvaluator se(prior, coupling, delta, quad);
        phi = se.free_energy(community_symmetric_state(prior.rank, fp.b)).value;
        converged = fp.converged;
        iterations = fp.iterations;
      } else {
        SeEvaluator se(prior, coupling, delta, quad);
        SeState init;
        if (informative) {
          init.q = prior.second_moment_matrix();
        } else {
          init.q = 1e-6 * Mat::Identity(prior.rank, prior.rank);
        }
        init.m = init.q;
        init.nishimori_locked = true;
        const SeFixedPoint fp = se.fixed_point(init, tol, t_max);
        order_param = fp.state.q.trace();
        mse_value = se_mse(prior, fp.state);
        phi = se.free_energy(fp.state).value;
        converged = fp.converged;
        iterations = fp.iterations;
      }
      csv << fmt(delta) << "," << fmt(order_param) << "," << fmt(mse_value) << "," << fmt(phi)
          << "," << (converged ? 1 : 0) << "," << iterations << "," << branch;
      if (sweep.rescale) csv << "," << fmt(delta * prior.rank * prior.rank);
      csv << "\n";
    }
  }

  const std::string out_path = resolve_out(config, args, "");
  if (!out_path.empty()) {
    std::ofstream file = open_output(out_path);
    file << csv.str();
  }
  out << csv.str();
  return kExitOk;
}

int cmd_phase(const Args& args, std::ostream& out) {
  const json config = require_config(args);
  const std::uint64_t seed = resolve_seed(config, args);
  std::vector<int> ranks = args.ranks;
  if (ranks.empty() && config.contains("phase"))
    ranks = field_or<std::vector<int>>(config.at("phase"), "ranks", {});
  if (ranks.empty()) throw std::invalid_argument("missing rank list: pass --r or config 'phase.ranks'");
  const int grid_points =
      config.contains("phase") ? field_or<int>(config.at("phase"), "grid_points", 400) : 400;
  const double refine =
      config.contains("phase") ? field_or<double>(config.at("phase"), "refine_rel_tol", 1e-3) : 1e-3;
  const bool custom_quad = config.contains("quadrature");

  std::ostringstream csv;
  csv << "# config: " << config_echo(config, seed).dump() << "\n";
  csv << "r,delta_c,delta_static,delta_spinodal,order,static_times_4rlogr,spinodal_times_2rlogr\n";
  for (const int r : ranks) {
    const QuadratureSpec quad =
        custom_quad ? parse_quadrature(config, seed) : default_transition_quad(r, seed);
    const TransitionReport report =
        transition_report(r, quad, default_x_grid(r, grid_points), refine);
    csv << r << "," << fmt(report.delta_c) << ",";
    if (report.order == TransitionOrder::first) {
      const double rlog = r * std::log(static_cast<double>(r));
      csv << fmt(report.delta_static) << "," << fmt(report.delta_spinodal) << ",first,"
          << fmt(report.delta_static * 4.0 * rlog) << ","
          << fmt(report.delta_spinodal * 2.0 * rlog) << "\n";
    } else {
      csv << ",,second,,\n";
    }
  }

  const std::string out_path = resolve_out(config, args, "");
  if (!out_path.empty()) {
    std::ofstream file = open_output(out_path);
    file << csv.str();
  }
  out << csv.str();
  return kExitOk;
}

int cmd_spectral(const Args& args, std::ostream& out) {
  if (args.instance_path.empty())
    throw std::invalid_argument("missing --instance <file>");
  const PlantedInstance inst = load_instance(args.instance_path);
  const int k = args.top_k > 0 ? args.top_k : std::min(inst.r + 2, 10);
  const auto rows = spectral_compare(inst, k);

  json echo = {{"instance", args.instance_path}, {"k", k},      {"n", inst.n},
               {"r", inst.r},                    {"seed", inst.seed},
               {"channel", to_string(inst.channel.kind)},       {"delta", inst.delta}};
  std::ostringstream csv;
  csv << "# config: " << echo.dump() << "\n";
  csv << "matrix_kind,index,eigenvalue,overlap\n";
  for (const auto& row : rows)
    csv << row.matrix_kind << "," << row.index << "," << fmt(row.eigenvalue) << ","
        << fmt(row.overlap) << "\n";

  if (!args.out_path.empty()) {
    std::ofstream file = open_output(args.out_path);
    file << csv.str();
  }
  out << csv.str();
  return kExitOk;
}

int cmd_compare(const Args& args, std::ostream& out) {
  const json config = require_config(args);
  const std::uint64_t seed = resolve_seed(config, args);
  const PriorModel prior = parse_prior(required_field<json>(config, "prior"), "prior");
  if (prior.kind != PriorKind::community)
    throw std::invalid_argument("config field 'prior.kind' must be community for compare");
  const int n = required_field<int>(config, "n");
  const SweepSpec sweep = parse_sweep(config);
  const QuadratureSpec quad = parse_quadrature(config, seed);
  const AmpOptions options = parse_amp_options(config);
  const double p_out =
      config.contains("channel") ? field_or<double>(config.at("channel"), "p_out", 0.5) : 0.5;
  const Mat coupling = Mat::Identity(prior.rank, prior.rank);

  std::ostringstream csv;
  csv << "# config: " << config_echo(config, seed).dump() << "\n";
  csv << "delta,mse_se,mse_amp_gaussian,mse_amp_sbm,overlap_gaussian,overlap_sbm\n";
  for (const double delta : sweep_values(sweep)) {
    const BIterationResult se = iterate_b(prior.rank, delta, 1e-6, quad, 1e-9, 4000);
    const double mse_se = community_mse_from_b(prior.rank, se.b);
    const PlantedInstance gauss =
        generate_xkx(prior, ChannelModel::make_gaussian(delta), coupling, n, seed);
    const AmpReport rep_g = run_amp_xkx(gauss, prior, AmpInit::uninformative, options);
    const PlantedInstance sbm =
        generate_xkx(prior, ChannelModel::make_sbm_with_delta(p_out, delta), coupling, n, seed);
    const AmpReport rep_s = run_amp_xkx(sbm, prior, AmpInit::uninformative, options);
    csv << fmt(delta) << "," << fmt(mse_se) << "," << fmt(rep_g.mse_aligned) << ","
        << fmt(rep_s.mse_aligned) << "," << fmt(rep_g.overlap) << "," << fmt(rep_s.overlap)
        << "\n";
  }

  const std::string out_path = resolve_out(config, args, "");
  if (!out_path.empty()) {
    std::ofstream file = open_output(out_path);
    file << csv.str();
  }
  out << csv.str();
  return kExitOk;
}

void print_usage(std::ostream& out) {
  out << "usage: lramp <command> [options]\n"
         "commands:\n"
         "  gen       -c cfg.json [--out file] [--csv prefix] [--seed s]\n"
         "  amp       -c cfg.json [--instance file] [--out report.json] [--trace csv]\n"
         "  se        -c cfg.json [--out csv]\n"
         "  phase     -c cfg.json [--r 8,16,...] [--out csv]\n"
         "  spectral  --instance file [-k count] [--out csv]\n"
         "  compare   -c cfg.json [--out csv]\n"
         "global flags: --seed <u64>, --threads <count>, --out <path>\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "-h" || args[0] == "--help" || args[0] == "help") {
    print_usage(out);
    return args.empty() ? kExitConfig : kExitOk;
  }
  const std::string& command = args[0];
  try {
    const Args parsed = parse_args(args, 1);
    if (command == "gen") return cmd_gen(parsed, out);
    if (command == "amp") return cmd_amp(parsed, out);
    if (command == "se") return cmd_se(parsed, out);
    if (command == "phase") return cmd_phase(parsed, out);
    if (command == "spectral") return cmd_spectral(parsed, out);
    if (command == "compare") return cmd_compare(parsed, out);
    err << "unknown command '" << command << "'\n";
    print_usage(err);
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const divergence_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const io_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    err << "error: " << what << "\n";
    if (what.find("cannot open") != std::string::npos ||
        what.find("file") != std::string::npos)
      return kExitIo;
    return kExitNumerical;
  }
}

}  // namespace lramp::cli
