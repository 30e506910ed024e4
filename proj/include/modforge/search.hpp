#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <functional>

#include "modforge/task.hpp"

namespace modforge {

using BigInt = boost::multiprecision::cpp_int;

/// Closed-form count of serial assemblies base + joint + ((link|none) +
/// joint)* + eef with up to max_dof single-dof joints:
///   sum_{n=1}^{max_dof-1} nJ * ((nL + 1) * nJ)^n
/// Exact arbitrary-precision evaluation.
BigInt count_assemblies(int joint_modules, int link_modules, int max_dof);

/// Structural rules for chain enumeration: base and eef attach directly to
/// a joint, at most one link between successive joints.
struct EnumerationSpec {
  std::shared_ptr<const ModuleSet> set;
  std::vector<std::string> joint_ids;  // modules contributing joints
  std::vector<std::string> link_ids;   // static link modules (may be empty)
  std::string base_id;
  std::string eef_id;
  int max_dof = 6;
  /// The counted grammar starts at two joints; this re-admits base+joint+eef.
  bool include_single_joint = false;
};

/// Partitions a module set by role: the unique module with a "base"
/// connector, the unique module with an "eef" connector, modules with
/// non-fixed joints, and static links. Throws std::invalid_argument when
/// the partition is ambiguous or a role is missing.
EnumerationSpec classify_modules(std::shared_ptr<const ModuleSet> set, int max_dof,
                                 bool include_single_joint = false);

/// Visits every chain (module-id sequence incl. base and eef) with total
/// dof <= max_dof in deterministic lexicographic order: strata of
/// increasing joint count, joints and links in sorted-id order, "no link"
/// before any link. Return false from the visitor to stop. Returns the
/// number of chains visited.
using ChainVisitor =
    std::function<bool(const std::vector<std::string>& chain, std::uint64_t index)>;
std::uint64_t enumerate_chains(const EnumerationSpec& spec, const ChainVisitor& visit);

/// Chain at a given enumeration index without enumerating (mixed-radix
/// decode); requires every joint module to contribute exactly 1 dof.
std::vector<std::string> decode_chain(const EnumerationSpec& spec, std::uint64_t index);

/// Stream length of enumerate_chains via the closed form; refuses (throws
/// std::invalid_argument) when a joint module does not have exactly 1 dof,
/// since the formula assumes indistinct single-dof joint positions.
BigInt chain_count(const EnumerationSpec& spec);

/// As enumerate_chains, but yields validated assemblies built by the serial
/// chain rules.
std::uint64_t enumerate_assemblies(
    const EnumerationSpec& spec,
    const std::function<bool(Assembly&& a, std::uint64_t index)>& visit);

/// Total non-fixed joints of a chain under this spec's module set.
int chain_dof(const EnumerationSpec& spec, const std::vector<std::string>& chain);

struct SearchOptions {
  std::uint64_t rng_seed = 0;
  int jobs = 1;
  /// Stop after the first module-count stratum that yields a feasible result.
  bool early_stop = false;
  EvaluateOptions eval;
};

struct RankedResult {
  std::vector<std::string> chain;
  std::uint64_t enumeration_index = 0;
  int module_count = 0;
  int joint_count = 0;
  EvaluationOutcome outcome;
};

/// Evaluates every enumerated assembly against the task and returns the
/// feasible ones sorted by (module count, joint count, enumeration index).
/// Parallel and serial runs produce identical results.
std::vector<RankedResult> brute_force_search(const EnumerationSpec& spec, const Task& t,
                                             const SearchOptions& opts = {});

}  // namespace modforge
