#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance runner.
// Nothing here calls into the code under test for the quantity it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <Eigen/Core>

#include "imutrace/baselines/nn.hpp"
#include "imutrace/eval.hpp"
#include "imutrace/imu.hpp"
#include "imutrace/rng.hpp"
#include "imutrace/synthgen.hpp"

namespace imutrace::testing {

inline std::filesystem::path data_dir() { return IMUTRACE_TEST_DATA; }
inline std::filesystem::path cli_path() { return IMUTRACE_CLI; }

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("imutrace_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline synth::GeneratorConfig zero_noise_config(std::uint64_t seed) {
  synth::GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.noise = {synth::NoiseProfile::none(), synth::NoiseProfile::none()};
  return cfg;
}

inline TrajectoryWindow zero_noise_window(TrajectoryLabel label, std::uint64_t seed) {
  Rng rng(seed);
  const synth::GeneratorConfig cfg = zero_noise_config(seed);
  const synth::MotionProfile profile = synth::profile_for(label, rng, cfg.duration);
  TrajectoryWindow w = synth::simulate(profile, synth::NoiseProfile::none(), cfg, rng);
  w.id = "w" + std::to_string(seed);
  w.recording_group = w.id;
  w.label = label;
  return w;
}

/// Plain trapezoid rule, written out sample by sample.
inline double trapezoid_oracle(const std::vector<double>& v, double dt) {
  double sum = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) sum += 0.5 * (v[i - 1] + v[i]) * dt;
  return sum;
}

inline std::vector<double> gyro_z(const TrajectoryWindow& w) {
  std::vector<double> out;
  for (const auto& s : w.samples) out.push_back(s.gyro.z());
  return out;
}

// --- finite differences ----------------------------------------------------

inline std::vector<Eigen::MatrixXd> random_batch(int length, std::uint64_t seed, std::vector<int>& labels) {
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> xs;
  labels.clear();
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd x(kNumChannels, length);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    xs.push_back(x);
    labels.push_back(static_cast<int>(rng.below(kNumLabels)));
  }
  return xs;
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over
/// every parameter, numeric from central differences with h = 1e-5. The
/// floor keeps entries that are zero on both sides from dividing by zero.
template <typename Net>
double max_gradient_error(Net net, const std::vector<Eigen::MatrixXd>& xs, const std::vector<int>& ys,
                          int* reprobed = nullptr) {
  constexpr double h = 1e-5;
  const auto relative = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };
  baselines::ParamSet grad;
  const double base = baselines::loss_and_grad(net, xs, ys, &grad);
  double worst = 0.0;
  if (reprobed) *reprobed = 0;
  for (std::size_t t = 0; t < net.params.tensors.size(); ++t) {
    for (Eigen::Index k = 0; k < net.params.tensors[t].size(); ++k) {
      double& p = net.params.tensors[t].data()[k];
      const double saved = p;
      const auto probe = [&](double step) {
        p = saved + step;
        const double up = baselines::loss_and_grad(net, xs, ys, nullptr);
        p = saved - step;
        const double down = baselines::loss_and_grad(net, xs, ys, nullptr);
        p = saved;
        return std::array<double, 3>{(up - down) / (2.0 * step), (up - base) / step, (base - down) / step};
      };
      const double analytic = grad.tensors[t].data()[k];
      auto [numeric, forward, backward] = probe(h);
      // ReLU and max-pool are piecewise linear. When the two one-sided slopes
      // disagree a kink sits inside +-h and the central difference is not a
      // derivative of anything, so look again closer in.
      if (relative(analytic, numeric) >= 1e-4 && relative(forward, backward) >= 1e-4) {
        numeric = probe(h / 10.0)[0];
        if (reprobed) ++*reprobed;
      }
      worst = std::max(worst, relative(analytic, numeric));
    }
  }
  return worst;
}

/// One plain gradient step, so the second check runs away from the init point.
template <typename Net>
void gradient_step(Net& net, const std::vector<Eigen::MatrixXd>& xs, const std::vector<int>& ys, double lr) {
  baselines::ParamSet grad;
  baselines::loss_and_grad(net, xs, ys, &grad);
  for (std::size_t t = 0; t < net.params.tensors.size(); ++t) net.params.tensors[t] -= lr * grad.tensors[t];
}

// --- metrics ---------------------------------------------------------------

struct OracleMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Counts TP/FP/FN per class by scanning every matrix entry.
/// Classes with TP+FP+FN = 0 are left out of the macro mean.
inline OracleMetrics brute_force_metrics(const eval::ConfusionMatrix& m) {
  OracleMetrics out;
  std::vector<double> ps, rs, fs;
  for (int c = 0; c < kNumLabels; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (int t = 0; t < kNumLabels; ++t) {
      for (int p = 0; p < kNumLabels; ++p) {
        const long v = m.counts[t][p];
        if (t == c && p == c) tp += v;
        else if (p == c) fp += v;
        else if (t == c) fn += v;
      }
      if (t == c) fn += m.unparsed[t];
    }
    const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
    const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    if (tp + fp + fn == 0) continue;
    ps.push_back(p);
    rs.push_back(r);
    fs.push_back(f);
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out.precision += ps[i] / static_cast<double>(ps.size());
    out.recall += rs[i] / static_cast<double>(rs.size());
    out.f1 += fs[i] / static_cast<double>(fs.size());
  }
  return out;
}

inline eval::ConfusionMatrix random_matrix(Rng& rng, bool with_unparsed) {
  eval::ConfusionMatrix m;
  do {
    for (auto& row : m.counts) {
      for (auto& v : row) v = rng.uniform() < 0.3 ? 0 : static_cast<long>(rng.below(50));
    }
    for (auto& v : m.unparsed) v = with_unparsed ? static_cast<long>(rng.below(5)) : 0;
    if (rng.uniform() < 0.25) {
      // a class that never occurs
      const auto k = static_cast<std::size_t>(rng.below(kNumLabels));
      for (std::size_t j = 0; j < kNumLabels; ++j) m.counts[k][j] = m.counts[j][k] = 0;
      m.unparsed[k] = 0;
    }
  } while (m.total() == 0);
  return m;
}

// --- splits ----------------------------------------------------------------

/// Two-sample windows grouped into recording groups of the given sizes.
inline std::vector<TrajectoryWindow> grouped_windows(const std::vector<std::pair<Scenario, int>>& groups) {
  std::vector<TrajectoryWindow> out;
  int g = 0;
  for (const auto& [scenario, size] : groups) {
    for (int k = 0; k < size; ++k) {
      TrajectoryWindow w;
      w.id = "g" + std::to_string(g) + "_" + std::to_string(k);
      w.recording_group = "g" + std::to_string(g);
      w.scenario = scenario;
      w.rate = 1.0;
      w.samples.resize(2);
      w.samples[1].t = 1.0;
      w.label = TrajectoryLabel::Straight;
      out.push_back(std::move(w));
    }
    ++g;
  }
  return out;
}

/// Empty when the assignment is a partition of the windows, every part is
/// within +-1 of its 3:1:1:1 share, and no window outside UnseenTest shares
/// a recording group with an UnseenTest window (pairwise scan).
inline std::string split_violation(const std::vector<TrajectoryWindow>& windows, const SplitAssignment& split) {
  if (split.parts.size() != windows.size()) return "assignment size differs from window count";
  std::map<SplitPart, long> counts;
  for (const auto& w : windows) {
    const auto it = split.parts.find(w.id);
    if (it == split.parts.end()) return "window " + w.id + " unassigned";
    ++counts[it->second];
  }
  const double n = static_cast<double>(windows.size());
  const std::map<SplitPart, double> ratio = {{SplitPart::Train, 3.0},
                                             {SplitPart::Validation, 1.0},
                                             {SplitPart::SeenTest, 1.0},
                                             {SplitPart::UnseenTest, 1.0}};
  for (const auto& [part, r] : ratio) {
    const double exact = n * r / 6.0;
    if (std::abs(static_cast<double>(counts[part]) - exact) > 1.0 + 1e-9) {
      std::ostringstream msg;
      msg << to_string(part) << " has " << counts[part] << ", exact share " << exact;
      return msg.str();
    }
  }
  for (const auto& a : windows) {
    if (split.parts.at(a.id) != SplitPart::UnseenTest) continue;
    for (const auto& b : windows) {
      if (b.recording_group == a.recording_group && split.parts.at(b.id) != SplitPart::UnseenTest) {
        return "group " + a.recording_group + " is in UnseenTest and " + std::string(to_string(split.parts.at(b.id)));
      }
    }
  }
  return {};
}

/// Random group structure: 2..12 groups per scenario, sizes 1..6.
inline std::vector<TrajectoryWindow> random_grouping(Rng& rng) {
  std::vector<std::pair<Scenario, int>> groups;
  for (const Scenario s : kAllScenarios) {
    const int count = 2 + static_cast<int>(rng.below(11));
    for (int g = 0; g < count; ++g) groups.emplace_back(s, 1 + static_cast<int>(rng.below(6)));
  }
  return grouped_windows(groups);
}

/// Whether any set of whole groups holds out a share within +-1 of n/6.
/// Plain bitset subset-sum over the group sizes.
inline bool holdout_realizable(const std::vector<TrajectoryWindow>& windows) {
  std::map<std::string, int> sizes;
  for (const auto& w : windows) ++sizes[w.recording_group];
  const double target = static_cast<double>(windows.size()) / 6.0;
  std::vector<char> reach(windows.size() + 1, 0);
  reach[0] = 1;
  for (const auto& [group, size] : sizes) {
    for (std::size_t s = reach.size() - 1; s >= static_cast<std::size_t>(size); --s) reach[s] |= reach[s - size];
  }
  for (std::size_t s = 1; s < reach.size(); ++s) {
    if (reach[s] && std::abs(static_cast<double>(s) - target) <= 1.0 + 1e-9) return true;
  }
  return false;
}

// --- processes -------------------------------------------------------------

/// Runs the CLI through the shell; returns the exit status and fills output
/// with combined stdout/stderr.
inline int run_cli(const std::string& args, std::string* output = nullptr, const std::string& env = {}) {
  const auto log = std::filesystem::temp_directory_path() / "imutrace_cli_output.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + cli_path().string() + "\" " + args + " > \"" +
                          log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace imutrace::testing
