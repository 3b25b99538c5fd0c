#include "mmest/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "mmest/error.hpp"
#include "mmest/parallel.hpp"
#include "mmest/rng.hpp"

namespace mmest {
namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfig, what); }

template <class T>
T get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("bad value for \"" + key + "\"");
  }
}

template <class T>
void read(const json& j, const std::string& key, T& out) {
  if (j.contains(key)) out = get<T>(j, key);
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  ExperimentConfig c;
  c.experiment = get<std::string>(j, "experiment");
  std::set<std::string> allowed{"experiment", "seed", "threads", "epsilon", "K", "trials", "csv",
                                "svg"};
  if (c.experiment == "linear_gaussian_singletons") {
    c.epsilon = 0.01;
    c.K = {1, 10, 100, 1000};
    allowed.insert({"n", "m", "I", "instances", "r_cap"});
    read(j, "n", c.linear.n);
    read(j, "m", c.linear.m);
    read(j, "I", c.linear.I);
    read(j, "instances", c.linear.instances);
    read(j, "r_cap", c.linear.r_cap);
    if (c.linear.n < 1 || c.linear.m < 1 || c.linear.I < 1 || c.linear.instances < 1) {
      config_error("n, m, I and instances must be positive");
    }
    if (!(c.linear.r_cap > 1.0)) config_error("r_cap must exceed 1");
  } else if (c.experiment == "hazard_bisection") {
    c.epsilon = 0.1;
    c.K = {100, 1000, 10000};
    allowed.insert({"M", "j", "theta", "L", "kappa_fraction"});
    read(j, "M", c.hazard.M);
    read(j, "j", c.hazard.j);
    read(j, "theta", c.hazard.theta);
    read(j, "L", c.hazard.L);
    read(j, "kappa_fraction", c.hazard.kappa_fraction);
    if (c.hazard.M < 3) config_error("M must be at least 3");
    if (c.hazard.j < 1 || c.hazard.j > c.hazard.M) config_error("j must lie in 1..M");
    if (c.hazard.theta.empty()) config_error("theta list is empty");
    for (double t : c.hazard.theta) {
      if (!(t >= 0.0 && t <= 1.0)) config_error("theta values must lie in [0, 1]");
    }
    if (c.hazard.L < 1) config_error("L must be positive");
    if (!(c.hazard.kappa_fraction > 0.0 && c.hazard.kappa_fraction < 0.5)) {
      config_error("kappa_fraction must lie in (0, 1/2)");
    }
  } else {
    config_error("unknown experiment \"" + c.experiment + "\"");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key \"" + key + "\"");
  }
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  read(j, "epsilon", c.epsilon);
  read(j, "K", c.K);
  read(j, "trials", c.trials);
  read(j, "csv", c.csv);
  read(j, "svg", c.svg);
  if (!(c.epsilon > 0.0 && c.epsilon < 0.5)) config_error("epsilon must lie in (0, 1/2)");
  if (c.K.empty()) config_error("K list is empty");
  for (int k : c.K) {
    if (k < 1) config_error("K values must be positive");
  }
  if (c.trials < 1) config_error("trials must be positive");
  if (c.threads < 1) config_error("threads must be positive");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j{{"experiment", c.experiment}, {"seed", c.seed}, {"threads", c.threads},
         {"epsilon", c.epsilon},       {"K", c.K},       {"trials", c.trials},
         {"csv", c.csv}};
  if (!c.svg.empty()) j["svg"] = c.svg;
  if (c.experiment == "linear_gaussian_singletons") {
    j.update({{"n", c.linear.n}, {"m", c.linear.m}, {"I", c.linear.I},
              {"instances", c.linear.instances}, {"r_cap", c.linear.r_cap}});
  } else {
    j.update({{"M", c.hazard.M}, {"j", c.hazard.j}, {"theta", c.hazard.theta}, {"L", c.hazard.L},
              {"kappa_fraction", c.hazard.kappa_fraction}});
  }
  return j;
}

Mat random_unit_norm_matrix(int m, int n, Rng& rng) {
  Mat A(m, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < m; ++r) A(r, c) = rng.normal();
  }
  // Power iteration on A^T A for the largest singular value.
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double sigma = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = A.transpose() * (A * v);
    const double next = std::sqrt(w.norm());
    v = w / w.norm();
    if (std::abs(next - sigma) <= 1e-15 * next) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  return A / sigma;
}

ConvexCompactSet hazard_signal_set(int M) {
  const int rows = std::max(0, 2 * (M - 2));
  Mat A = Mat::Zero(rows, M);
  Vec b = Vec::Constant(rows, 2.0 / (static_cast<double>(M) * M));
  for (int i = 1; i + 1 < M; ++i) {
    const int r = 2 * (i - 1);
    A(r, i - 1) = 1.0;
    A(r, i) = -2.0;
    A(r, i + 1) = 1.0;
    A.row(r + 1) = -A.row(r);
  }
  return ConvexCompactSet(A, b, Mat::Ones(1, M), Vec::Ones(1), Vec::Constant(M, 1.0 / (3.0 * M)),
                          Vec::Ones(M));
}

Mat hazard_matrix(int M, double theta) {
  Mat R = Mat::Zero(M, M);
  for (int c = 0; c < M; ++c) R.col(c).head(c + 1).setConstant(1.0 / (c + 1));
  return theta * Mat::Identity(M, M) + (1.0 - theta) * R;
}

FunctionalProblem hazard_problem(int M, int j, double theta, int K, double epsilon) {
  const ConvexCompactSet X = hazard_signal_set(M);
  Vec g = Vec::Zero(M), h = Vec::Zero(M);
  g(j - 1) = 1.0;
  h.tail(M - j + 1).setOnes();
  FunctionalProblem p{ObservationScheme::discrete(M), K, {X},
                      AffineMap{hazard_matrix(M, theta), Vec::Zero(M)},
                      linear_fractional(X, g, 0.0, h, 0.0), epsilon};
  p.validate();
  return p;
}

Vec random_point(const ConvexCompactSet& set, Rng& rng, int vertices) {
  Vec x = Vec::Zero(set.dim());
  double total = 0.0;
  for (int k = 0; k < vertices; ++k) {
    Vec cost(set.dim());
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost(i) = rng.normal();
    const double w = rng.exponential();
    x += w * set.lp_minimize(cost).point;
    total += w;
  }
  return x / total;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream ids: problem draws use the instance index, trial draws live above
// 2^32 so the two families never collide.
std::uint64_t trial_stream(std::uint64_t unit, std::uint64_t trials, std::uint64_t trial) {
  return (std::uint64_t{1} << 32) + unit * trials + trial;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<TrialRecord> run_linear_experiment(const ExperimentConfig& config) {
  const LinearExperiment& e = config.linear;
  const int nK = static_cast<int>(config.K.size());
  const size_t units = static_cast<size_t>(e.instances) * nK;
  std::vector<TrialRecord> records(units * config.trials);
  parallel_for(units, config.threads, [&](size_t unit) {
    const int instance = static_cast<int>(unit) / nK;
    const int kidx = static_cast<int>(unit) % nK;
    const int K = config.K[kidx];
    const auto start = Clock::now();
    Rng problem_rng(config.seed, static_cast<std::uint64_t>(instance));
    const Mat A = random_unit_norm_matrix(e.m, e.n, problem_rng);
    std::vector<Vec> xs, ys;
    for (int i = 0; i < e.I; ++i) {
      Vec x(e.n);
      for (int k = 0; k < e.n; ++k) x(k) = problem_rng.normal();
      ys.push_back(A * x);
      xs.push_back(std::move(x));
    }
    const Vec g = Vec::Unit(e.n, 0);
    const LinearEstimator est =
        build_gaussian_singleton_estimator(xs, ys, g, K, config.epsilon, e.r_cap);
    const double build_seconds = seconds_since(start);
    const ObservationScheme scheme = ObservationScheme::gaussian(e.m);
    for (int t = 0; t < config.trials; ++t) {
      const auto trial_start = Clock::now();
      const int ell = t % e.I;
      Rng rng(config.seed, trial_stream(unit, static_cast<std::uint64_t>(config.trials),
                                        static_cast<std::uint64_t>(t)));
      const Observation obs = sample_statistic(scheme, ys[ell], rng, K);
      TrialRecord r;
      r.experiment = config.experiment;
      r.K = K;
      r.instance = instance;
      r.trial = t;
      r.truth = xs[ell](0);
      r.estimate = estimate(est, obs);
      r.error = r.estimate - r.truth;
      r.rho = est.rho;
      r.covered = std::abs(r.error) <= est.rho;
      r.wall_seconds = seconds_since(trial_start) + (t == 0 ? build_seconds : 0.0);
      records[unit * config.trials + t] = std::move(r);
    }
  });
  return records;
}

std::vector<TrialRecord> run_hazard_experiment(const ExperimentConfig& config) {
  const HazardExperiment& e = config.hazard;
  std::vector<TrialRecord> records;
  const ConvexCompactSet X = hazard_signal_set(e.M);
  std::uint64_t unit = 0;
  for (double theta : e.theta) {
    for (int K : config.K) {
      const FunctionalProblem problem = hazard_problem(e.M, e.j, theta, K, config.epsilon);
      const auto [a_raw, b_raw] = function_bounds(problem);
      const auto [a0, b0] = snap_bounds(a_raw, b_raw);
      const double delta = config.epsilon / (2.0 * e.L);
      const double kappa = e.kappa_fraction * (b0 - a0);
      const ProblemOracle oracle(problem);
      std::vector<TrialRecord> block(static_cast<size_t>(config.trials));
      parallel_for(block.size(), config.threads, [&](size_t t) {
        const auto start = Clock::now();
        Rng rng(config.seed, trial_stream(unit, static_cast<std::uint64_t>(config.trials), t));
        const Vec x = random_point(X, rng);
        const Observation obs = sample_statistic(problem.scheme, problem.encoding(x), rng, K);
        const BisectionTrace trace = bisect(oracle, obs, e.L, delta, kappa, a0, b0);
        TrialRecord r;
        r.experiment = config.experiment;
        r.group = format_double(theta);
        r.K = K;
        r.instance = 0;
        r.trial = static_cast<int>(t);
        r.truth = problem.f.eval(x);
        r.estimate = trace.estimate();
        r.error = r.estimate - r.truth;
        r.rho = 0.5 * trace.width();
        r.covered = trace.lo <= r.truth && r.truth <= trace.hi;
        r.init_halfwidth = 0.5 * (b0 - a0);
        r.termination = to_string(trace.reason);
        r.wall_seconds = seconds_since(start);
        block[t] = std::move(r);
      });
      for (auto& r : block) records.push_back(std::move(r));
      ++unit;
    }
  }
  return records;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "linear_gaussian_singletons") return run_linear_experiment(config);
  if (config.experiment == "hazard_bisection") return run_hazard_experiment(config);
  throw Error(ErrorCode::kConfig, "unknown experiment \"" + config.experiment + "\"");
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "# csv-schema: v1\n"
      << "experiment,group,K,instance,trial,truth,estimate,error,rho,covered,init_halfwidth,"
         "termination\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << r.group << ',' << r.K << ',' << r.instance << ',' << r.trial
        << ',' << format_double(r.truth) << ',' << format_double(r.estimate) << ','
        << format_double(r.error) << ',' << format_double(r.rho) << ',' << (r.covered ? 1 : 0)
        << ',' << format_double(r.init_halfwidth) << ',' << r.termination << '\n';
  }
  return out.str();
}

std::string timing_to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "group,K,instance,trial,wall_seconds\n";
  for (const auto& r : records) {
    out << r.group << ',' << r.K << ',' << r.instance << ',' << r.trial << ','
        << format_double(r.wall_seconds) << '\n';
  }
  return out.str();
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::kInvalidArgument, "no CSV column " + name);
  return static_cast<int>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::kInvalidArgument, "CSV row has " + std::to_string(cells.size()) +
                                                   " cells, header has " +
                                                   std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw Error(ErrorCode::kInvalidArgument, "CSV has no header");
  return table;
}

namespace {

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<BoxStats> box_stats(const CsvTable& table, const std::string& value,
                                const std::string& by) {
  const int vc = table.column(value);
  const int bc = table.column(by);
  std::map<std::string, std::vector<double>> groups;
  for (const auto& row : table.rows) {
    double v;
    if (!parse_number(row[vc], v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-numeric value in column " + value);
    }
    groups[row[bc]].push_back(v);
  }
  std::vector<std::string> keys;
  bool numeric = true;
  for (const auto& [k, vs] : groups) {
    keys.push_back(k);
    double tmp;
    numeric = numeric && parse_number(k, tmp);
  }
  if (numeric) {
    std::sort(keys.begin(), keys.end(), [](const std::string& x, const std::string& y) {
      return std::strtod(x.c_str(), nullptr) < std::strtod(y.c_str(), nullptr);
    });
  }
  std::vector<BoxStats> out;
  for (const auto& k : keys) {
    auto vs = groups[k];
    std::sort(vs.begin(), vs.end());
    out.push_back({k, vs.front(), quantile(vs, 0.25), quantile(vs, 0.5), quantile(vs, 0.75),
                   vs.back(), vs.size()});
  }
  return out;
}

std::string emit_boxplot(const CsvTable& table, const std::string& value, const std::string& by,
                         const std::string& title) {
  const auto stats = box_stats(table, value, by);
  if (stats.empty()) throw Error(ErrorCode::kInvalidArgument, "no rows to plot");
  double lo = stats.front().min, hi = stats.front().max;
  for (const auto& s : stats) {
    lo = std::min(lo, s.min);
    hi = std::max(hi, s.max);
  }
  if (hi == lo) {
    hi += 0.5 * (std::abs(hi) + 1.0);
    lo -= 0.5 * (std::abs(lo) + 1.0);
  }
  const double width = 120.0 + 80.0 * static_cast<double>(stats.size());
  const double height = 360.0, top = 40.0, bottom = 300.0, left = 80.0;
  auto y = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  auto px = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\""
      << px(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << px(width / 2) << "\" y=\"20\" text-anchor=\"middle\">" << title
        << "</text>\n";
  }
  svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left)
      << "\" y2=\"" << px(bottom) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    svg << "<line x1=\"" << px(left - 4) << "\" y1=\"" << px(y(v)) << "\" x2=\"" << px(left)
        << "\" y2=\"" << px(y(v)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(left - 8) << "\" y=\"" << px(y(v) + 4)
        << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  svg << "<text x=\"16\" y=\"" << px((top + bottom) / 2) << "\" transform=\"rotate(-90 16 "
      << px((top + bottom) / 2) << ")\" text-anchor=\"middle\">" << value << "</text>\n";
  for (size_t k = 0; k < stats.size(); ++k) {
    const auto& s = stats[k];
    const double cx = left + 60.0 + 80.0 * static_cast<double>(k);
    svg << "<g class=\"box\" data-key=\"" << s.key << "\">\n";
    svg << "<line x1=\"" << px(cx) << "\" y1=\"" << px(y(s.min)) << "\" x2=\"" << px(cx)
        << "\" y2=\"" << px(y(s.q1)) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << px(cx) << "\" y1=\"" << px(y(s.q3)) << "\" x2=\"" << px(cx)
        << "\" y2=\"" << px(y(s.max)) << "\" stroke=\"black\"/>\n";
    for (double v : {s.min, s.max}) {
      svg << "<line x1=\"" << px(cx - 12) << "\" y1=\"" << px(y(v)) << "\" x2=\"" << px(cx + 12)
          << "\" y2=\"" << px(y(v)) << "\" stroke=\"black\"/>\n";
    }
    svg << "<rect x=\"" << px(cx - 24) << "\" y=\"" << px(y(s.q3)) << "\" width=\"48\" height=\""
        << px(y(s.q1) - y(s.q3)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << px(cx - 24) << "\" y1=\"" << px(y(s.median)) << "\" x2=\""
        << px(cx + 24) << "\" y2=\"" << px(y(s.median)) << "\" stroke=\"#d62728\" "
        << "stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << px(cx) << "\" y=\"" << px(bottom + 18) << "\" text-anchor=\"middle\">"
        << s.key << "</text>\n";
    svg << "</g>\n";
  }
  svg << "<text x=\"" << px(left + (width - left) / 2) << "\" y=\"" << px(bottom + 40)
      << "\" text-anchor=\"middle\">" << by << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace mmest
