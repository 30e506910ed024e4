#include "modforge/search.hpp"

#include <algorithm>
#include <atomic>
#include <climits>
#include <thread>

namespace modforge {

BigInt count_assemblies(int joint_modules, int link_modules, int max_dof) {
  if (joint_modules < 1 || link_modules < 0 || max_dof < 1) {
    throw std::invalid_argument("count_assemblies requires nJ >= 1, nL >= 0, dof >= 1");
  }
  const BigInt j = joint_modules;
  const BigInt block = (BigInt(link_modules) + 1) * j;
  BigInt total = 0;
  BigInt power = 1;
  for (int n = 1; n <= max_dof - 1; ++n) {
    power *= block;
    total += j * power;
  }
  return total;
}

namespace {

struct SortedSpec {
  std::vector<std::string> joints;
  std::vector<std::string> links;
  std::vector<int> joint_dof;
  int min_joint_dof = 1;
};

SortedSpec sort_spec(const EnumerationSpec& spec) {
  if (!spec.set) throw std::invalid_argument("enumeration spec has no module set");
  if (spec.joint_ids.empty()) throw std::invalid_argument("enumeration spec has no joint modules");
  if (spec.max_dof < 1) throw std::invalid_argument("max dof must be >= 1");
  SortedSpec s;
  s.joints = spec.joint_ids;
  s.links = spec.link_ids;
  std::sort(s.joints.begin(), s.joints.end());
  std::sort(s.links.begin(), s.links.end());
  for (const std::string& id : {spec.base_id, spec.eef_id}) {
    if (spec.set->find(id) == nullptr) {
      throw std::invalid_argument("unknown module id '" + id + "'");
    }
  }
  s.min_joint_dof = INT_MAX;
  for (const std::string& id : s.joints) {
    const Module* m = spec.set->find(id);
    if (m == nullptr) throw std::invalid_argument("unknown joint module id '" + id + "'");
    if (m->dof() < 1) {
      throw std::invalid_argument("module '" + id + "' contributes no degrees of freedom");
    }
    s.joint_dof.push_back(m->dof());
    s.min_joint_dof = std::min(s.min_joint_dof, m->dof());
  }
  for (const std::string& id : s.links) {
    const Module* m = spec.set->find(id);
    if (m == nullptr) throw std::invalid_argument("unknown link module id '" + id + "'");
    if (m->dof() != 0) {
      throw std::invalid_argument("link module '" + id + "' must be static");
    }
  }
  return s;
}

bool all_single_dof(const SortedSpec& s) {
  return std::all_of(s.joint_dof.begin(), s.joint_dof.end(), [](int d) { return d == 1; });
}

}  // namespace

std::uint64_t enumerate_chains(const EnumerationSpec& spec, const ChainVisitor& visit) {
  const SortedSpec s = sort_spec(spec);
  std::uint64_t index = 0;
  bool stopped = false;

  // chain holds base, j0, [link?, j]..., with eef appended per yield.
  std::vector<std::string> chain;
  std::vector<std::string> yielded;

  auto yield = [&](int /*dof*/) {
    yielded = chain;
    yielded.push_back(spec.eef_id);
    if (!visit(yielded, index)) stopped = true;
    ++index;
  };

  // Depth-first over segments; options in lexicographic order, no link
  // before any link.
  auto extend = [&](auto&& self, int segments_left, int dof_so_far) -> void {
    if (stopped) return;
    if (segments_left == 0) {
      yield(dof_so_far);
      return;
    }
    // Every remaining joint adds at least min_joint_dof.
    if (dof_so_far + segments_left * s.min_joint_dof > spec.max_dof) return;
    for (int link_option = 0; link_option <= static_cast<int>(s.links.size()); ++link_option) {
      if (link_option > 0) chain.push_back(s.links[link_option - 1]);
      for (std::size_t j = 0; j < s.joints.size(); ++j) {
        if (dof_so_far + s.joint_dof[j] + (segments_left - 1) * s.min_joint_dof >
            spec.max_dof) {
          continue;
        }
        chain.push_back(s.joints[j]);
        self(self, segments_left - 1, dof_so_far + s.joint_dof[j]);
        chain.pop_back();
        if (stopped) break;
      }
      if (link_option > 0) chain.pop_back();
      if (stopped) break;
    }
  };

  const int max_extra = spec.max_dof - 1;  // each extra segment carries >= 1 dof
  for (int n = spec.include_single_joint ? 0 : 1; n <= max_extra && !stopped; ++n) {
    for (std::size_t j = 0; j < s.joints.size() && !stopped; ++j) {
      if (s.joint_dof[j] + n * s.min_joint_dof > spec.max_dof) continue;
      chain = {spec.base_id, s.joints[j]};
      extend(extend, n, s.joint_dof[j]);
    }
  }
  return index;
}

std::vector<std::string> decode_chain(const EnumerationSpec& spec, std::uint64_t index) {
  const SortedSpec s = sort_spec(spec);
  if (!all_single_dof(s)) {
    throw std::invalid_argument("decode_chain requires single-dof joint modules");
  }
  const std::uint64_t j = s.joints.size();
  const std::uint64_t block = (s.links.size() + 1) * j;

  int n = spec.include_single_joint ? 0 : 1;
  std::uint64_t remaining = index;
  for (;; ++n) {
    if (n > spec.max_dof - 1) {
      throw std::out_of_range("enumeration index " + std::to_string(index) +
                              " beyond stream length");
    }
    std::uint64_t stratum = j;
    for (int k = 0; k < n; ++k) stratum *= block;
    if (remaining < stratum) break;
    remaining -= stratum;
  }

  std::uint64_t weight = 1;
  for (int k = 0; k < n; ++k) weight *= block;
  std::vector<std::string> chain{spec.base_id, s.joints[remaining / weight]};
  remaining %= weight;
  for (int k = 0; k < n; ++k) {
    weight /= block;
    const std::uint64_t digit = remaining / weight;
    remaining %= weight;
    const std::uint64_t link_option = digit / j;
    if (link_option > 0) chain.push_back(s.links[link_option - 1]);
    chain.push_back(s.joints[digit % j]);
  }
  chain.push_back(spec.eef_id);
  return chain;
}

BigInt chain_count(const EnumerationSpec& spec) {
  const SortedSpec s = sort_spec(spec);
  if (!all_single_dof(s)) {
    throw std::invalid_argument(
        "the closed-form count assumes single-dof joint modules; module set has a joint "
        "module with several degrees of freedom");
  }
  BigInt total = count_assemblies(static_cast<int>(s.joints.size()),
                                  static_cast<int>(s.links.size()), spec.max_dof);
  if (spec.include_single_joint) total += static_cast<int>(s.joints.size());
  return total;
}

std::uint64_t enumerate_assemblies(
    const EnumerationSpec& spec,
    const std::function<bool(Assembly&& a, std::uint64_t index)>& visit) {
  return enumerate_chains(spec, [&](const std::vector<std::string>& chain, std::uint64_t index) {
    return visit(Assembly::from_serial_modules(spec.set, chain), index);
  });
}

int chain_dof(const EnumerationSpec& spec, const std::vector<std::string>& chain) {
  int dof = 0;
  for (const std::string& id : chain) dof += spec.set->find(id)->dof();
  return dof;
}

EnumerationSpec classify_modules(std::shared_ptr<const ModuleSet> set, int max_dof,
                                 bool include_single_joint) {
  if (!set) throw std::invalid_argument("module set is null");
  EnumerationSpec spec;
  spec.max_dof = max_dof;
  spec.include_single_joint = include_single_joint;

  std::vector<std::string> bases, eefs;
  for (const auto& [id, m] : set->modules) {
    bool has_base = false, has_eef = false;
    for (const Body& b : m.bodies) {
      for (const Connector& c : b.connectors) {
        has_base |= c.kind == kBaseConnectorKind;
        has_eef |= c.kind == kEefConnectorKind;
      }
    }
    if (has_base) {
      bases.push_back(id);
    } else if (has_eef) {
      eefs.push_back(id);
    } else if (m.dof() > 0) {
      spec.joint_ids.push_back(id);
    } else {
      spec.link_ids.push_back(id);
    }
  }
  if (bases.size() != 1) {
    throw std::invalid_argument("module set must contain exactly one base module, found " +
                                std::to_string(bases.size()));
  }
  if (eefs.size() != 1) {
    throw std::invalid_argument("module set must contain exactly one end-effector module, found " +
                                std::to_string(eefs.size()));
  }
  if (spec.joint_ids.empty()) {
    throw std::invalid_argument("module set has no joint modules");
  }
  spec.base_id = bases.front();
  spec.eef_id = eefs.front();
  spec.set = std::move(set);
  return spec;
}

std::vector<RankedResult> brute_force_search(const EnumerationSpec& spec, const Task& t,
                                             const SearchOptions& opts) {
  struct Item {
    std::uint64_t index;
    std::vector<std::string> chain;
  };
  std::map<std::size_t, std::vector<Item>> strata;  // keyed by module count
  enumerate_chains(spec, [&](const std::vector<std::string>& chain, std::uint64_t index) {
    strata[chain.size()].push_back({index, chain});
    return true;
  });

  const int jobs = std::max(1, opts.jobs);
  std::vector<RankedResult> results;

  for (const auto& [module_count, items] : strata) {
    std::vector<std::optional<RankedResult>> slots(items.size());

    auto evaluate_item = [&](std::size_t i) {
      const Item& item = items[i];
      Assembly a = Assembly::from_serial_modules(spec.set, item.chain);
      EvaluateOptions eval = opts.eval;
      eval.rng_seed = opts.rng_seed * 0x9e3779b97f4a7c15ULL + item.index;
      EvaluationOutcome outcome = evaluate_assembly(a, t, eval);
      if (outcome.feasible) {
        slots[i] = RankedResult{item.chain, item.index, static_cast<int>(item.chain.size()),
                                chain_dof(spec, item.chain), std::move(outcome)};
      }
    };

    if (jobs == 1) {
      for (std::size_t i = 0; i < items.size(); ++i) evaluate_item(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> workers;
      workers.reserve(static_cast<std::size_t>(jobs));
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
          for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
            evaluate_item(i);
          }
        });
      }
      for (std::thread& w : workers) w.join();
    }

    std::vector<RankedResult> feasible;
    for (std::optional<RankedResult>& slot : slots) {
      if (slot) feasible.push_back(std::move(*slot));
    }
    std::sort(feasible.begin(), feasible.end(), [](const RankedResult& a, const RankedResult& b) {
      return std::tie(a.joint_count, a.enumeration_index) <
             std::tie(b.joint_count, b.enumeration_index);
    });
    results.insert(results.end(), std::make_move_iterator(feasible.begin()),
                   std::make_move_iterator(feasible.end()));
    if (opts.early_stop && !results.empty()) break;
  }
  return results;
}

}  // namespace modforge
