#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "imutrace/error.hpp"
#include "imutrace/imu.hpp"
#include "imutrace/rng.hpp"

namespace imutrace {

namespace {

constexpr std::array<int, 4> kRatio = {3, 1, 1, 1};

struct GroupInfo {
  std::string name;
  Scenario scenario;
  std::size_t size = 0;
};

// Round-robin over scenarios, taking the next shuffled group that still fits
// under `hi`. One group per scenario is always left behind.
std::optional<std::vector<std::size_t>> greedy_holdout(const std::vector<GroupInfo>& groups,
                                                       std::size_t lo, std::size_t hi) {
  std::array<std::deque<std::size_t>, 2> queues;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    queues[static_cast<std::size_t>(groups[g].scenario)].push_back(g);
  }
  std::array<std::size_t, 2> remaining = {queues[0].size(), queues[1].size()};

  std::vector<std::size_t> chosen;
  std::size_t total = 0;
  bool progress = true;
  while (total < lo && progress) {
    progress = false;
    for (std::size_t s = 0; s < 2 && total < lo; ++s) {
      if (remaining[s] <= 1) continue;
      for (auto it = queues[s].begin(); it != queues[s].end(); ++it) {
        if (total + groups[*it].size <= hi) {
          total += groups[*it].size;
          chosen.push_back(*it);
          queues[s].erase(it);
          --remaining[s];
          progress = true;
          break;
        }
      }
    }
  }
  if (total < lo || total > hi) return std::nullopt;
  return chosen;
}

// Exact subset-sum fallback over the shuffled group order; picks the reachable
// total in [lo, hi] closest to target.
std::optional<std::vector<std::size_t>> subset_sum_holdout(const std::vector<GroupInfo>& groups,
                                                           std::size_t lo, std::size_t hi,
                                                           double target) {
  constexpr std::size_t kNone = SIZE_MAX;
  // via[s] = index of the group whose addition first reached sum s.
  std::vector<std::size_t> via(hi + 1, kNone);
  std::vector<bool> reachable(hi + 1, false);
  reachable[0] = true;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::size_t w = groups[g].size;
    for (std::size_t s = hi; s >= w && s > 0; --s) {
      if (!reachable[s] && reachable[s - w]) {
        reachable[s] = true;
        via[s] = g;
      }
    }
  }
  std::optional<std::size_t> best;
  for (std::size_t s = std::max<std::size_t>(lo, 1); s <= hi; ++s) {
    if (!reachable[s]) continue;
    if (!best || std::abs(static_cast<double>(s) - target) <
                     std::abs(static_cast<double>(*best) - target)) {
      best = s;
    }
  }
  if (!best) return std::nullopt;
  std::vector<std::size_t> chosen;
  for (std::size_t s = *best; s > 0; s -= groups[via[s]].size) chosen.push_back(via[s]);
  return chosen;
}

}  // namespace

std::string_view to_string(SplitPart part) {
  switch (part) {
    case SplitPart::Train: return "train";
    case SplitPart::Validation: return "validation";
    case SplitPart::SeenTest: return "seen";
    case SplitPart::UnseenTest: return "unseen";
  }
  return "?";
}

SplitPart parse_split_part(std::string_view text) {
  for (const SplitPart part : kAllSplitParts) {
    if (text == to_string(part)) return part;
  }
  throw DataError("imu_core", "unknown split part '" + std::string(text) + "'");
}

std::size_t SplitAssignment::count(SplitPart part) const {
  return static_cast<std::size_t>(
      std::count_if(parts.begin(), parts.end(), [&](const auto& kv) { return kv.second == part; }));
}

std::vector<std::string> SplitAssignment::ids(SplitPart part) const {
  std::vector<std::string> out;
  for (const auto& [id, p] : parts) {
    if (p == part) out.push_back(id);
  }
  return out;
}

double exact_share(std::size_t n, SplitPart part) {
  return static_cast<double>(n) * kRatio[static_cast<std::size_t>(part)] / 6.0;
}

SplitAssignment split_dataset(std::span<const TrajectoryWindow> windows, std::uint64_t seed) {
  const std::size_t n = windows.size();
  if (n < 6) {
    throw DataError("imu_core", "split needs at least 6 windows, got " + std::to_string(n));
  }

  std::map<std::string, GroupInfo> by_name;
  std::set<std::string> ids;
  for (const TrajectoryWindow& w : windows) {
    if (!ids.insert(w.id).second) throw DataError("imu_core", "duplicate window id '" + w.id + "'");
    auto [it, inserted] = by_name.try_emplace(w.recording_group);
    if (inserted) {
      it->second.name = w.recording_group;
      it->second.scenario = w.scenario;
    }
    ++it->second.size;
  }
  for (const Scenario scenario : kAllScenarios) {
    const auto groups_in = std::count_if(by_name.begin(), by_name.end(), [&](const auto& kv) {
      return kv.second.scenario == scenario;
    });
    const bool present = std::any_of(windows.begin(), windows.end(),
                                     [&](const auto& w) { return w.scenario == scenario; });
    if (present && groups_in < 2) {
      throw DataError("imu_core", "split needs at least 2 recording groups per scenario (" +
                                      std::string(to_string(scenario)) + " has " +
                                      std::to_string(groups_in) +
                                      "); add more recording groups so one can be held out");
    }
  }

  std::vector<GroupInfo> groups;
  for (auto& [name, info] : by_name) groups.push_back(info);
  Rng group_rng = Rng::derive(seed, 0);
  group_rng.shuffle(std::span(groups));

  const double target = exact_share(n, SplitPart::UnseenTest);
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::ceil(target - 1.0 - 1e-9)));
  const auto hi = static_cast<std::size_t>(std::floor(target + 1.0 + 1e-9));
  auto chosen = greedy_holdout(groups, lo, hi);
  if (!chosen) chosen = subset_sum_holdout(groups, lo, hi, target);
  if (!chosen) {
    throw DataError("imu_core",
                    "recording group sizes cannot realize a 3:1:1:1 split (unseen part needs " +
                        std::to_string(lo) + ".." + std::to_string(hi) +
                        " windows from whole groups); use more or smaller recording groups");
  }

  std::set<std::string> unseen_groups;
  for (const std::size_t g : *chosen) unseen_groups.insert(groups[g].name);

  SplitAssignment out;
  std::vector<std::string> rest;
  for (const TrajectoryWindow& w : windows) {
    if (unseen_groups.contains(w.recording_group)) {
      out.parts.emplace(w.id, SplitPart::UnseenTest);
    } else {
      rest.push_back(w.id);
    }
  }
  std::sort(rest.begin(), rest.end());
  Rng deal_rng = Rng::derive(seed, 1);
  deal_rng.shuffle(std::span(rest));

  // Floor of each exact share, then hand out what is left by largest
  // fractional part (ties in part order). The leftover is at most 3; it is -1
  // only when every share is integral and the unseen part took one extra.
  std::array<SplitPart, 3> seen_parts = {SplitPart::Train, SplitPart::Validation,
                                         SplitPart::SeenTest};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> fractions{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double share = exact_share(n, seen_parts[i]);
    counts[i] = static_cast<std::size_t>(std::floor(share + 1e-9));
    fractions[i] = share - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  if (assigned > rest.size()) {
    counts[0] -= assigned - rest.size();
  } else {
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fractions[a] > fractions[b]; });
    for (std::size_t k = 0; assigned < rest.size(); ++k, ++assigned) ++counts[order[k % 3]];
  }

  std::size_t cursor = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < counts[i]; ++k) out.parts.emplace(rest[cursor++], seen_parts[i]);
  }
  return out;
}

}  // namespace imutrace
